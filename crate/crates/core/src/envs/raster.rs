use super::arena::ArenaSpec;
use super::geometry::{Segment, Vec2};
use super::observation::{color, Observation};

/// A drawable primitive in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entity {
    Disk {
        center: Vec2,
        radius: f64,
        rgb: [u8; 3],
    },
    Stroke {
        segment: Segment,
        half_width: f64,
        rgb: [u8; 3],
    },
}

/// Orthographic top view: image row 0 is the arena's `y_max` edge.
pub struct Viewport {
    x0: f64,
    y1: f64,
    sx: f64,
    sy: f64,
}

impl Viewport {
    pub fn new(spec: &ArenaSpec, size: usize) -> Self {
        Viewport {
            x0: spec.bounds.x_min,
            y1: spec.bounds.y_max,
            sx: spec.bounds.width() / size as f64,
            sy: spec.bounds.height() / size as f64,
        }
    }

    pub fn pixel_center(&self, col: usize, row: usize) -> Vec2 {
        Vec2::new(
            self.x0 + (col as f64 + 0.5) * self.sx,
            self.y1 - (row as f64 + 0.5) * self.sy,
        )
    }

    /// Half the larger pixel side; anything thinner would vanish between samples.
    pub fn min_half_width(&self) -> f64 {
        0.5 * self.sx.max(self.sy)
    }
}

/// Rasterizes walls then `entities` (painter's order) over the background.
pub fn render_scene(spec: &ArenaSpec, entities: &[Entity], size: usize) -> Observation {
    let view = Viewport::new(spec, size);
    let mut img = Observation::filled(size, size, color(spec.palette.background));
    let wall_half = (0.5 * spec.wall_thickness).max(view.min_half_width());
    let mut layers: Vec<Entity> = spec
        .walls
        .iter()
        .map(|&segment| Entity::Stroke {
            segment,
            half_width: wall_half,
            rgb: spec.palette.wall,
        })
        .collect();
    layers.extend_from_slice(entities);
    for row in 0..size {
        for col in 0..size {
            let p = view.pixel_center(col, row);
            let mut rgb = None;
            for e in &layers {
                let hit = match *e {
                    Entity::Disk { center, radius, .. } => p.distance(center) <= radius,
                    Entity::Stroke {
                        segment,
                        half_width,
                        ..
                    } => segment.distance_to(p) <= half_width,
                };
                if hit {
                    rgb = Some(match *e {
                        Entity::Disk { rgb, .. } | Entity::Stroke { rgb, .. } => rgb,
                    });
                }
            }
            if let Some(rgb) = rgb {
                img.set_pixel(col, row, color(rgb));
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_arena_is_background() {
        let mut spec = ArenaSpec::maze();
        spec.walls.clear();
        let img = render_scene(&spec, &[], 16);
        let bg = color(spec.palette.background);
        for r in 0..16 {
            for c in 0..16 {
                assert_eq!(img.pixel(c, r), bg);
            }
        }
    }

    #[test]
    fn painter_order_puts_later_entities_on_top() {
        let mut spec = ArenaSpec::disk_push();
        spec.walls.clear();
        let c = spec.bounds.center();
        let under = Entity::Disk {
            center: c,
            radius: 2.0,
            rgb: [1, 2, 3],
        };
        let over = Entity::Disk {
            center: c,
            radius: 1.0,
            rgb: [9, 9, 9],
        };
        let img = render_scene(&spec, &[under, over], 20);
        assert_eq!(img.pixel(10, 10), color([9, 9, 9]));
        assert_eq!(img.pixel(10, 6), color([1, 2, 3]));
    }
}

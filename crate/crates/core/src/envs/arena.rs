use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::geometry::{Bounds, Segment, Vec2};
use crate::error::{Result, TaxonsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// Two-wheeled robot with five frontal range sensors.
    Maze,
    /// Holonomic point pusher and a free disk; the disk is the ground truth.
    DiskPush,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Maze => "maze",
            EnvKind::DiskPush => "disk_push",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "maze" => Some(EnvKind::Maze),
            "disk_push" | "disk-push" => Some(EnvKind::DiskPush),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
}

impl Pose {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Palette {
    pub background: [u8; 3],
    pub wall: [u8; 3],
    pub robot: [u8; 3],
    pub heading: [u8; 3],
    pub disk: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            background: [240, 240, 240],
            wall: [40, 40, 40],
            robot: [30, 80, 220],
            heading: [250, 210, 40],
            disk: [220, 40, 40],
        }
    }
}

/// Geometry, dynamics constants and colours of one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArenaSpec {
    pub kind: EnvKind,
    pub bounds: Bounds,
    pub walls: Vec<Segment>,
    /// Robot (maze) or pusher (disk-push) radius, metres.
    pub robot_radius: f64,
    /// Range sensor cap, metres.
    pub sensor_range: f64,
    /// Ray directions relative to the heading, degrees.
    pub sensor_angles_deg: Vec<f64>,
    /// Speed at a command of 1.0, m/s.
    pub max_speed: f64,
    pub axle_width: f64,
    pub dt: f64,
    pub start: Pose,
    /// Std-dev of a seeded start-position jitter, metres; 0 disables it.
    pub start_noise: f64,
    pub disk_radius: f64,
    pub disk_start: Vec2,
    pub wall_thickness: f64,
    pub palette: Palette,
}

impl ArenaSpec {
    /// 10 m × 10 m maze with two long shelves and three stubs forming dead ends.
    pub fn maze() -> Self {
        let bounds = Bounds::new(0.0, 10.0, 0.0, 10.0);
        let w = |a: [f64; 2], b: [f64; 2]| Segment::new(a.into(), b.into());
        ArenaSpec {
            kind: EnvKind::Maze,
            bounds,
            walls: vec![
                w([0.0, 3.0], [7.0, 3.0]),
                w([7.0, 3.0], [7.0, 1.6]),
                w([4.0, 0.0], [4.0, 1.5]),
                w([3.0, 6.5], [10.0, 6.5]),
                w([8.5, 6.5], [8.5, 4.6]),
                w([1.8, 4.4], [1.8, 6.8]),
                w([6.0, 8.3], [6.0, 10.0]),
            ],
            robot_radius: 0.4,
            sensor_range: 0.5 * bounds.diagonal(),
            sensor_angles_deg: vec![-90.0, -45.0, 0.0, 45.0, 90.0],
            max_speed: 0.4,
            axle_width: 0.5,
            dt: 0.05,
            start: Pose {
                x: 1.2,
                y: 1.2,
                heading: FRAC_PI_2 * 0.5,
            },
            start_noise: 0.0,
            disk_radius: 0.0,
            disk_start: Vec2::new(0.0, 0.0),
            wall_thickness: 0.15,
            palette: Palette::default(),
        }
    }

    /// Open 10 m × 10 m table with a disk to push.
    pub fn disk_push() -> Self {
        let bounds = Bounds::new(0.0, 10.0, 0.0, 10.0);
        ArenaSpec {
            kind: EnvKind::DiskPush,
            bounds,
            walls: Vec::new(),
            robot_radius: 0.3,
            sensor_range: 0.5 * bounds.diagonal(),
            sensor_angles_deg: Vec::new(),
            max_speed: 0.4,
            axle_width: 0.5,
            dt: 0.05,
            start: Pose {
                x: 5.0,
                y: 2.0,
                heading: FRAC_PI_2,
            },
            start_noise: 0.0,
            disk_radius: 0.8,
            disk_start: Vec2::new(5.0, 5.0),
            wall_thickness: 0.15,
            palette: Palette::default(),
        }
    }

    pub fn default_for(kind: EnvKind) -> Self {
        match kind {
            EnvKind::Maze => ArenaSpec::maze(),
            EnvKind::DiskPush => ArenaSpec::disk_push(),
        }
    }

    /// All obstacles: interior walls followed by the four boundary edges.
    pub fn obstacles(&self) -> impl Iterator<Item = Segment> + '_ {
        self.walls.iter().copied().chain(self.bounds.edges())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TaxonsError::Config(m));
        if self.bounds.is_degenerate() {
            return bad(format!("degenerate arena bounds {:?}", self.bounds));
        }
        if !(self.robot_radius > 0.0) {
            return bad("robot_radius must be positive".into());
        }
        if !(self.dt > 0.0) || !(self.max_speed >= 0.0) || !(self.sensor_range > 0.0) {
            return bad("dt and sensor_range must be positive, max_speed non-negative".into());
        }
        for (i, wall) in self.walls.iter().enumerate() {
            if !self.bounds.contains(wall.a) || !self.bounds.contains(wall.b) {
                return bad(format!("wall {i} lies outside the arena bounds"));
            }
        }
        if !self.bounds.contains(self.start.position()) {
            return bad("start position outside the arena".into());
        }
        match self.kind {
            EnvKind::Maze => {
                if self.sensor_angles_deg.len() != 5 {
                    return bad("maze robot carries exactly 5 range sensors".into());
                }
                if !(self.axle_width > 0.0) {
                    return bad("axle_width must be positive".into());
                }
            }
            EnvKind::DiskPush => {
                if !(self.disk_radius > 0.0) {
                    return bad("disk_radius must be positive".into());
                }
                if !self.bounds.contains(self.disk_start) {
                    return bad("disk start outside the arena".into());
                }
            }
        }
        Ok(())
    }
}

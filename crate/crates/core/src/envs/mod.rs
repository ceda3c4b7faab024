//! Deterministic 2D environments observed through a top-view rasterizer.
//!
//! Ground-truth positions leave this module only inside [`Sealed`], which can
//! be opened through a [`GroundTruthAccess`] that counts every read made on
//! behalf of the search.

mod arena;
mod geometry;
mod observation;
mod raster;

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use arena::{ArenaSpec, EnvKind, Palette, Pose};
pub use geometry::{Bounds, Segment, Vec2};
pub use observation::{color, Observation};
pub use raster::{render_scene, Entity, Viewport};

use crate::error::{Result, TaxonsError};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    /// Robot pose (maze) or pusher position (disk-push).
    pub robot: Pose,
    /// Disk centre, disk-push only.
    pub object: Option<Vec2>,
    pub step: usize,
    /// Whether the last step ended in contact with a wall or the boundary.
    pub collided: bool,
    pub collisions: usize,
}

pub fn initial_state(spec: &ArenaSpec, seed: u64) -> EnvState {
    let mut robot = spec.start;
    if spec.start_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, spec.start_noise).expect("positive std-dev");
        let mut p = Vec2::new(robot.x + n.sample(&mut rng), robot.y + n.sample(&mut rng));
        resolve_circle(&mut p, spec.robot_radius, spec);
        robot.x = p.x;
        robot.y = p.y;
    }
    EnvState {
        robot,
        object: (spec.kind == EnvKind::DiskPush).then_some(spec.disk_start),
        step: 0,
        collided: false,
        collisions: 0,
    }
}

pub fn action_dim(_spec: &ArenaSpec) -> usize {
    2
}

/// Size of the vector [`controller_input`] produces.
pub fn input_dim(spec: &ArenaSpec) -> usize {
    match spec.kind {
        EnvKind::Maze => spec.sensor_angles_deg.len(),
        EnvKind::DiskPush => 4,
    }
}

/// Advances the state by one `spec.dt` step. Actions are clamped to `[-1, 1]`.
pub fn step(state: &EnvState, action: &[f64], spec: &ArenaSpec) -> Result<EnvState> {
    if action.len() != action_dim(spec) {
        return Err(TaxonsError::Shape {
            expected: vec![action_dim(spec)],
            got: vec![action.len()],
        });
    }
    if action.iter().any(|a| !(-1.0..=1.0).contains(a)) {
        log::warn!("action {action:?} outside [-1, 1]; clamped");
    }
    let a0 = action[0].clamp(-1.0, 1.0);
    let a1 = action[1].clamp(-1.0, 1.0);
    let mut next = state.clone();
    next.step += 1;
    let collided = match spec.kind {
        EnvKind::Maze => {
            let (left, right) = (a0, a1);
            let v = spec.max_speed * 0.5 * (left + right);
            let omega = spec.max_speed * (right - left) / spec.axle_width;
            let dir = Vec2::from_angle(state.robot.heading);
            let mut p = state.robot.position() + dir * (v * spec.dt);
            let hit = resolve_circle(&mut p, spec.robot_radius, spec);
            next.robot.x = p.x;
            next.robot.y = p.y;
            next.robot.heading = wrap_angle(state.robot.heading + omega * spec.dt);
            hit
        }
        EnvKind::DiskPush => push_step(&mut next, Vec2::new(a0, a1), spec),
    };
    next.collided = collided;
    next.collisions += usize::from(collided);
    Ok(next)
}

fn push_step(next: &mut EnvState, command: Vec2, spec: &ArenaSpec) -> bool {
    let reach = spec.robot_radius + spec.disk_radius;
    let mut pusher = next.robot.position() + command * (spec.max_speed * spec.dt);
    let mut hit = resolve_circle(&mut pusher, spec.robot_radius, spec);
    let mut disk = next.object.unwrap_or(spec.disk_start);
    let gap = disk - pusher;
    let dist = gap.norm();
    if dist < reach {
        let normal = if dist > 1e-12 {
            gap * (1.0 / dist)
        } else {
            let n = command.norm();
            if n > 0.0 {
                command * (1.0 / n)
            } else {
                Vec2::new(1.0, 0.0)
            }
        };
        disk = pusher + normal * reach;
        hit |= resolve_circle(&mut disk, spec.disk_radius, spec);
        let gap = disk - pusher;
        let dist = gap.norm();
        if dist < reach - 1e-12 {
            let n = if dist > 1e-12 { gap * (1.0 / dist) } else { normal };
            pusher = disk - n * reach;
            hit |= resolve_circle(&mut pusher, spec.robot_radius, spec);
        }
    }
    if command.norm() > 0.0 {
        next.robot.heading = command.y.atan2(command.x);
    }
    next.robot.x = pusher.x;
    next.robot.y = pusher.y;
    next.object = Some(disk);
    hit
}

/// Pushes a disk out of every wall it overlaps (clamp to contact, slide
/// along the surface) and keeps it inside the bounds. Returns whether any
/// correction was needed.
fn resolve_circle(p: &mut Vec2, radius: f64, spec: &ArenaSpec) -> bool {
    let mut hit = false;
    for _ in 0..4 {
        let mut moved = false;
        for wall in &spec.walls {
            let q = wall.closest_point(*p);
            let d = p.distance(q);
            if d < radius {
                let n = if d > 1e-12 {
                    (*p - q) * (1.0 / d)
                } else {
                    wall.normal()
                };
                *p = q + n * radius;
                moved = true;
            }
        }
        moved |= spec.bounds.clamp_disk(p, radius);
        hit |= moved;
        if !moved {
            break;
        }
    }
    hit
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Five normalized range readings in `[0, 1]`, one per configured ray.
pub fn sensors(state: &EnvState, spec: &ArenaSpec) -> Vec<f64> {
    let origin = state.robot.position();
    spec.sensor_angles_deg
        .iter()
        .map(|deg| {
            let dir = Vec2::from_angle(state.robot.heading + deg.to_radians());
            let nearest = spec
                .obstacles()
                .filter_map(|s| s.ray_hit(origin, dir))
                .fold(spec.sensor_range, f64::min);
            (nearest / spec.sensor_range).clamp(0.0, 1.0)
        })
        .collect()
}

/// What the controller sees: range sensors in the maze; normalized pusher
/// position and disk offset on the push table.
pub fn controller_input(state: &EnvState, spec: &ArenaSpec) -> Vec<f64> {
    match spec.kind {
        EnvKind::Maze => sensors(state, spec),
        EnvKind::DiskPush => {
            let c = spec.bounds.center();
            let (hw, hh) = (0.5 * spec.bounds.width(), 0.5 * spec.bounds.height());
            let p = state.robot.position();
            let d = state.object.unwrap_or(spec.disk_start) - p;
            vec![(p.x - c.x) / hw, (p.y - c.y) / hh, d.x / hw, d.y / hh]
        }
    }
}

pub fn scene(state: &EnvState, spec: &ArenaSpec) -> Vec<Entity> {
    let mut out = Vec::with_capacity(3);
    if let Some(disk) = state.object {
        out.push(Entity::Disk {
            center: disk,
            radius: spec.disk_radius,
            rgb: spec.palette.disk,
        });
    }
    let center = state.robot.position();
    out.push(Entity::Disk {
        center,
        radius: spec.robot_radius,
        rgb: spec.palette.robot,
    });
    if spec.kind == EnvKind::Maze {
        let dir = Vec2::from_angle(state.robot.heading);
        out.push(Entity::Stroke {
            segment: Segment::new(
                center + dir * (0.5 * spec.robot_radius),
                center + dir * spec.robot_radius,
            ),
            half_width: 0.25 * spec.robot_radius,
            rgb: spec.palette.heading,
        });
    }
    out
}

pub fn render(state: &EnvState, spec: &ArenaSpec, size: usize) -> Result<Observation> {
    if size < 16 {
        return Err(TaxonsError::invalid(format!("observation size {size} below 16")));
    }
    Ok(render_scene(spec, &scene(state, spec), size))
}

/// Robot centre in the maze, disk centre on the push table.
pub fn ground_truth(state: &EnvState, spec: &ArenaSpec) -> (f64, f64) {
    let p = match spec.kind {
        EnvKind::Maze => state.robot.position(),
        EnvKind::DiskPush => state.object.unwrap_or(spec.disk_start),
    };
    (p.x, p.y)
}

/// Evaluation-only data. Opening it requires a [`GroundTruthAccess`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sealed<T>(T);

impl<T> Sealed<T> {
    pub(crate) fn new(value: T) -> Self {
        Sealed(value)
    }
}

/// Counts ground-truth reads, split by who asked.
#[derive(Debug, Default)]
pub struct GroundTruthAccess {
    search: AtomicU64,
    evaluation: AtomicU64,
}

impl GroundTruthAccess {
    pub fn new() -> Self {
        Self::default()
    }

    /// A read that influences selection. Only the ground-truth observer
    /// (the hand-designed baseline) is entitled to this.
    pub fn for_search<'a, T>(&self, sealed: &'a Sealed<T>) -> &'a T {
        self.search.fetch_add(1, Ordering::Relaxed);
        &sealed.0
    }

    /// A read for coverage, logging or persistence.
    pub fn for_evaluation<'a, T>(&self, sealed: &'a Sealed<T>) -> &'a T {
        self.evaluation.fetch_add(1, Ordering::Relaxed);
        &sealed.0
    }

    pub fn search_reads(&self) -> u64 {
        self.search.load(Ordering::Relaxed)
    }

    pub fn evaluation_reads(&self) -> u64 {
        self.evaluation.load(Ordering::Relaxed)
    }
}

/// Maps controller inputs to actions.
pub trait Policy {
    fn act(&self, input: &[f64]) -> Result<Vec<f64>>;
}

impl<F> Policy for F
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn act(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self(input))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    /// Final observation `o_T`, the only behavioural record.
    pub observation: Observation,
    pub ground_truth: Sealed<(f64, f64)>,
    pub trajectory: Sealed<Vec<(f64, f64)>>,
    pub collisions: usize,
    /// False when the controller produced a non-finite action.
    pub valid: bool,
    pub steps: usize,
}

/// Runs `horizon` steps of sensors → policy → action and renders the final frame.
pub fn rollout(
    spec: &ArenaSpec,
    policy: &dyn Policy,
    horizon: usize,
    seed: u64,
    observation_size: usize,
) -> Result<RolloutResult> {
    let mut state = initial_state(spec, seed);
    let mut trajectory = Vec::with_capacity(horizon + 1);
    trajectory.push(ground_truth(&state, spec));
    let mut valid = true;
    for _ in 0..horizon {
        let action = policy.act(&controller_input(&state, spec))?;
        if action.iter().any(|a| !a.is_finite()) {
            valid = false;
            break;
        }
        state = step(&state, &action, spec)?;
        trajectory.push(ground_truth(&state, spec));
    }
    Ok(RolloutResult {
        observation: render(&state, spec, observation_size)?,
        ground_truth: Sealed::new(ground_truth(&state, spec)),
        trajectory: Sealed::new(trajectory),
        collisions: state.collisions,
        valid,
        steps: state.step,
    })
}

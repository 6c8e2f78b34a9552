//! Deterministic 2D quasi-static pushing environment.
//!
//! Three circular effectors, velocity controlled, push an oriented
//! rectangular block toward a goal footprint. The block only moves while it
//! is being penetrated; its mobility is attenuated by mass and friction,
//! neither of which is ever observed.

use std::f64::consts::PI;

use rand::Rng;

use crate::geom::{circle_rect_contact, rect_iou, OrientedRect, Pose2D, Vec2};
use crate::reward::{self, OeAggregate, RewardKind, RewardWeights, Snapshot};

pub const OBS_DIM: usize = 26;
pub const ACTION_DIM: usize = 6;
pub const NUM_EFFECTORS: usize = 3;

/// Radius of the circle the effectors start on.
pub const EFFECTOR_START_RADIUS: f64 = 0.12;
/// Effector start angles, degrees.
pub const EFFECTOR_START_ANGLES_DEG: [f64; 3] = [90.0, 210.0, 330.0];
/// Penetrations at or below this depth are roundoff left by depenetration.
pub const CONTACT_SLOP: f64 = 1e-12;

/// Index table of the observation vector.
pub mod obs_index {
    pub const REMAINING_TIME: usize = 0;
    pub const EFFECTOR_POS: usize = 1;
    pub const EFFECTOR_VEL: usize = 7;
    pub const BLOCK_POSE: usize = 13;
    pub const BLOCK_LIN_VEL: usize = 17;
    pub const BLOCK_ANG_VEL: usize = 19;
    pub const GOAL_POSE: usize = 20;
    pub const BLOCK_HALF_EXTENTS: usize = 24;
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnvError {
    #[error("task variable `{name}` = {value} is outside its physical limits [{min}, {max}]")]
    OutOfLimits {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("interval for `{name}` is empty or non-finite: [{min}, {max}]")]
    BadInterval { name: &'static str, min: f64, max: f64 },
    #[error("action must have {ACTION_DIM} entries, got {0}")]
    ActionLength(usize),
    #[error("episode already finished (t = {0})")]
    EpisodeOver(usize),
    #[error("invalid environment config: {0}")]
    Config(String),
}

/// Closed interval; `min == max` is a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    pub fn is_degenerate(&self) -> bool {
        self.min == self.max
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.min >= self.min && other.max <= self.max
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    /// Uniform draw; a degenerate interval returns its value exactly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        if self.is_degenerate() {
            return self.min;
        }
        (self.min + (self.max - self.min) * u).min(self.max)
    }
}

/// Sampling intervals for every intervenable task variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskRanges {
    /// Shared by block length, width and height (each drawn independently).
    pub size: Interval,
    pub goal_radial: Interval,
    pub goal_angle: Interval,
    pub goal_yaw: Interval,
    pub mass: Interval,
    pub friction: Interval,
}

impl Default for TaskRanges {
    fn default() -> Self {
        Self {
            size: Interval::fixed(0.075),
            goal_radial: Interval::fixed(0.08),
            goal_angle: Interval::fixed(PI / 2.0),
            goal_yaw: Interval::fixed(0.0),
            mass: Interval::fixed(0.15),
            friction: Interval::fixed(0.5),
        }
    }
}

impl TaskRanges {
    pub fn fields(&self) -> [(&'static str, Interval); 6] {
        [
            ("size", self.size),
            ("goal_radial", self.goal_radial),
            ("goal_angle", self.goal_angle),
            ("goal_yaw", self.goal_yaw),
            ("mass", self.mass),
            ("friction", self.friction),
        ]
    }

    pub fn fields_mut(&mut self) -> [(&'static str, &mut Interval); 6] {
        [
            ("size", &mut self.size),
            ("goal_radial", &mut self.goal_radial),
            ("goal_angle", &mut self.goal_angle),
            ("goal_yaw", &mut self.goal_yaw),
            ("mass", &mut self.mass),
            ("friction", &mut self.friction),
        ]
    }

    /// Every interval non-empty and inside `limits`.
    pub fn check_within(&self, limits: &TaskRanges) -> Result<(), EnvError> {
        for ((name, iv), (_, lim)) in self.fields().into_iter().zip(limits.fields()) {
            if !iv.is_valid() {
                return Err(EnvError::BadInterval {
                    name,
                    min: iv.min,
                    max: iv.max,
                });
            }
            for v in [iv.min, iv.max] {
                if !lim.contains(v) {
                    return Err(EnvError::OutOfLimits {
                        name,
                        value: v,
                        min: lim.min,
                        max: lim.max,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Intervenable variables of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskParams {
    pub block_length: f64,
    pub block_width: f64,
    /// Kept so size sampling covers three axes; has no planar effect.
    pub block_height: f64,
    pub goal_radial: f64,
    pub goal_angle: f64,
    pub goal_yaw: f64,
    pub mass: f64,
    pub friction: f64,
}

impl Default for TaskParams {
    fn default() -> Self {
        Self {
            block_length: 0.075,
            block_width: 0.075,
            block_height: 0.075,
            goal_radial: 0.08,
            goal_angle: PI / 2.0,
            goal_yaw: 0.0,
            mass: 0.15,
            friction: 0.5,
        }
    }
}

impl TaskParams {
    pub fn goal_pose(&self) -> Pose2D {
        Pose2D::new(
            self.goal_radial * self.goal_angle.cos(),
            self.goal_radial * self.goal_angle.sin(),
            self.goal_yaw,
        )
    }

    pub fn half_extents(&self) -> (f64, f64) {
        (0.5 * self.block_length, 0.5 * self.block_width)
    }

    pub fn validate(&self, cfg: &EnvConfig) -> Result<(), EnvError> {
        let a = cfg.arena_half;
        let checks: [(&'static str, f64, f64, f64, bool); 5] = [
            ("block_length", self.block_length, 0.0, a, self.block_length > 0.0),
            ("block_width", self.block_width, 0.0, a, self.block_width > 0.0),
            ("block_height", self.block_height, 0.0, a, self.block_height > 0.0),
            ("mass", self.mass, 0.0, f64::INFINITY, self.mass > 0.0),
            ("friction", self.friction, 0.0, f64::INFINITY, self.friction >= 0.0),
        ];
        for (name, value, min, max, lower_ok) in checks {
            if !(value.is_finite() && lower_ok && value <= max) {
                return Err(EnvError::OutOfLimits { name, value, min, max });
            }
        }
        let g = self.goal_pose();
        for (name, value) in [("goal_x", g.x), ("goal_y", g.y)] {
            if !(value.is_finite() && value.abs() <= a) {
                return Err(EnvError::OutOfLimits {
                    name,
                    value,
                    min: -a,
                    max: a,
                });
            }
        }
        if !self.goal_yaw.is_finite() {
            return Err(EnvError::OutOfLimits {
                name: "goal_yaw",
                value: self.goal_yaw,
                min: -PI,
                max: PI,
            });
        }
        Ok(())
    }
}

/// Draws every task variable independently and uniformly from its interval.
pub fn sample_task<R: Rng + ?Sized>(ranges: &TaskRanges, rng: &mut R) -> TaskParams {
    TaskParams {
        block_length: ranges.size.sample(rng),
        block_width: ranges.size.sample(rng),
        block_height: ranges.size.sample(rng),
        goal_radial: ranges.goal_radial.sample(rng),
        goal_angle: ranges.goal_angle.sample(rng),
        goal_yaw: ranges.goal_yaw.sample(rng),
        mass: ranges.mass.sample(rng),
        friction: ranges.friction.sample(rng),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig {
    pub arena_half: f64,
    pub dt: f64,
    pub horizon: usize,
    pub effector_radius: f64,
    pub v_max: f64,
    pub mass_ref: f64,
    pub k_rot: f64,
    pub observe_size: bool,
    pub observe_goal: bool,
    /// Smallest block edge accepted by range validation and OOD clipping.
    pub size_min: f64,
    pub mass_min: f64,
    pub mass_max: f64,
    pub friction_max: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            arena_half: 0.2,
            dt: 0.05,
            horizon: 300,
            effector_radius: 0.015,
            v_max: 0.2,
            mass_ref: 0.15,
            k_rot: 5.0,
            observe_size: true,
            observe_goal: true,
            size_min: 0.01,
            mass_min: 0.005,
            mass_max: 1.0,
            friction_max: 1.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let positive = [
            ("arena_half", self.arena_half),
            ("dt", self.dt),
            ("effector_radius", self.effector_radius),
            ("v_max", self.v_max),
            ("mass_ref", self.mass_ref),
            ("k_rot", self.k_rot),
            ("size_min", self.size_min),
            ("mass_min", self.mass_min),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(EnvError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.horizon < 1 {
            return Err(EnvError::Config("horizon must be at least 1".into()));
        }
        if self.size_min > self.arena_half || self.mass_min > self.mass_max || self.friction_max < 0.0 {
            return Err(EnvError::Config("physical limits are inconsistent".into()));
        }
        Ok(())
    }

    /// Physical limits of every task variable.
    pub fn limits(&self) -> TaskRanges {
        TaskRanges {
            size: Interval::new(self.size_min, self.arena_half),
            goal_radial: Interval::new(0.0, self.arena_half),
            goal_angle: Interval::new(-PI, PI),
            goal_yaw: Interval::new(-PI, PI),
            mass: Interval::new(self.mass_min, self.mass_max),
            friction: Interval::new(0.0, self.friction_max),
        }
    }

    /// Block mobility factor for a given task.
    pub fn mobility(&self, task: &TaskParams) -> f64 {
        (self.mass_ref / (task.mass * (1.0 + task.friction))).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Effector {
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub effectors: [Effector; NUM_EFFECTORS],
    pub block: OrientedRect,
    pub block_lin_vel: Vec2,
    pub block_ang_vel: f64,
    pub goal: OrientedRect,
    pub t: usize,
    pub task: TaskParams,
    /// Seed the episode was reset with. The dynamics draw no randomness.
    pub seed: u64,
}

impl EnvState {
    pub fn snapshot(&self, cfg: &EnvConfig) -> Snapshot {
        Snapshot {
            block: self.block,
            block_center: self.block.center(),
            goal: self.goal,
            effector_centers: self.effectors.map(|e| e.pos),
            effector_radius: cfg.effector_radius,
        }
    }

    pub fn fractional_success(&self) -> f64 {
        rect_iou(&self.block, &self.goal)
    }
}

pub type Observation = [f64; OBS_DIM];

pub fn observe(state: &EnvState, cfg: &EnvConfig) -> Observation {
    use obs_index::*;
    let mut o = [0.0; OBS_DIM];
    o[REMAINING_TIME] = (cfg.horizon - state.t.min(cfg.horizon)) as f64 / cfg.horizon as f64;
    for (i, e) in state.effectors.iter().enumerate() {
        o[EFFECTOR_POS + 2 * i] = e.pos.x;
        o[EFFECTOR_POS + 2 * i + 1] = e.pos.y;
        o[EFFECTOR_VEL + 2 * i] = e.vel.x;
        o[EFFECTOR_VEL + 2 * i + 1] = e.vel.y;
    }
    let b = state.block.pose;
    o[BLOCK_POSE..BLOCK_POSE + 4].copy_from_slice(&[b.x, b.y, b.theta.sin(), b.theta.cos()]);
    o[BLOCK_LIN_VEL] = state.block_lin_vel.x;
    o[BLOCK_LIN_VEL + 1] = state.block_lin_vel.y;
    o[BLOCK_ANG_VEL] = state.block_ang_vel;
    let g = if cfg.observe_goal {
        let p = state.goal.pose;
        [p.x, p.y, p.theta.sin(), p.theta.cos()]
    } else {
        [0.0, 0.0, 0.0, 1.0]
    };
    o[GOAL_POSE..GOAL_POSE + 4].copy_from_slice(&g);
    if cfg.observe_size {
        let (hx, hy) = state.block.half_extents();
        o[BLOCK_HALF_EXTENTS] = hx;
        o[BLOCK_HALF_EXTENTS + 1] = hy;
    }
    o
}

pub fn reset(cfg: &EnvConfig, task: &TaskParams, seed: u64) -> Result<(EnvState, Observation), EnvError> {
    cfg.validate()?;
    task.validate(cfg)?;
    let (hx, hy) = task.half_extents();
    let block = OrientedRect::new(Pose2D::new(0.0, 0.0, 0.0), hx, hy).map_err(|e| EnvError::Config(e.to_string()))?;
    let goal = OrientedRect::new(task.goal_pose(), hx, hy).map_err(|e| EnvError::Config(e.to_string()))?;
    let effectors = EFFECTOR_START_ANGLES_DEG.map(|deg: f64| {
        let a = deg.to_radians();
        Effector {
            pos: Vec2::new(EFFECTOR_START_RADIUS * a.cos(), EFFECTOR_START_RADIUS * a.sin()),
            vel: Vec2::ZERO,
        }
    });
    let state = EnvState {
        effectors,
        block,
        block_lin_vel: Vec2::ZERO,
        block_ang_vel: 0.0,
        goal,
        t: 0,
        task: *task,
        seed,
    };
    let obs = observe(&state, cfg);
    Ok((state, obs))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    pub fractional_success: f64,
    pub dist_oe: f64,
    pub dist_og: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Reward selection for [`step`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardSpec {
    pub kind: RewardKind,
    pub weights: RewardWeights,
    pub oe_aggregate: OeAggregate,
}

fn clamp_to_arena(p: Vec2, a: f64) -> Vec2 {
    Vec2::new(p.x.clamp(-a, a), p.y.clamp(-a, a))
}

/// Advances the environment by one control step. `action` holds commanded
/// effector velocities in m/s.
pub fn step(state: &EnvState, action: &[f64], cfg: &EnvConfig, reward: &RewardSpec) -> Result<StepOutcome, EnvError> {
    if action.len() != ACTION_DIM {
        return Err(EnvError::ActionLength(action.len()));
    }
    if state.t >= cfg.horizon {
        return Err(EnvError::EpisodeOver(state.t));
    }
    let a = cfg.arena_half;
    let prev_snap = state.snapshot(cfg);
    let mut next = state.clone();

    let prev_pos = state.effectors.map(|e| e.pos);
    for (i, e) in next.effectors.iter_mut().enumerate() {
        let vx = action[2 * i].clamp(-cfg.v_max, cfg.v_max);
        let vy = action[2 * i + 1].clamp(-cfg.v_max, cfg.v_max);
        e.pos = clamp_to_arena(e.pos + Vec2::new(vx, vy).scale(cfg.dt), a);
    }

    let block = state.block;
    let center = block.center();
    let lambda = cfg.mobility(&state.task);
    let mut translation = Vec2::ZERO;
    let mut torque = 0.0;
    for e in &next.effectors {
        let c = circle_rect_contact(e.pos, cfg.effector_radius, &block);
        if c.penetration > CONTACT_SLOP {
            let push = c.push_normal.scale(c.penetration);
            translation = translation + push;
            torque += (c.contact_point - center).cross(push);
        }
    }
    let new_center = clamp_to_arena(center + translation.scale(lambda), a);
    let dtheta = lambda * cfg.k_rot * torque;
    let new_pose = Pose2D::new(new_center.x, new_center.y, block.pose.theta + dtheta);
    next.block = block.with_pose(new_pose);

    for e in next.effectors.iter_mut() {
        let c = circle_rect_contact(e.pos, cfg.effector_radius, &next.block);
        if c.penetration > CONTACT_SLOP {
            e.pos = clamp_to_arena(e.pos - c.push_normal.scale(c.penetration), a);
        }
    }

    for (e, p0) in next.effectors.iter_mut().zip(prev_pos) {
        e.vel = (e.pos - p0).scale(1.0 / cfg.dt);
    }
    next.block_lin_vel = (new_center - center).scale(1.0 / cfg.dt);
    next.block_ang_vel = crate::geom::normalize_angle(new_pose.theta - block.pose.theta) / cfg.dt;
    next.t += 1;

    let cur_snap = next.snapshot(cfg);
    let r = reward::reward(reward.kind, &prev_snap, &cur_snap, &reward.weights, reward.oe_aggregate);
    let info = StepInfo {
        fractional_success: next.fractional_success(),
        dist_oe: reward::dist_oe_with(&cur_snap, reward.oe_aggregate),
        dist_og: reward::dist_og(&cur_snap),
    };
    let obs = observe(&next, cfg);
    let done = next.t == cfg.horizon;
    Ok(StepOutcome {
        state: next,
        obs,
        reward: r,
        done,
        info,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn push_spec() -> RewardSpec {
        RewardSpec::default()
    }

    #[test]
    fn preliminary_ranges_sample_exact_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = sample_task(&TaskRanges::default(), &mut rng);
        assert_eq!(t.block_length, 0.075);
        assert_eq!(t.block_width, 0.075);
        assert_eq!(t.block_height, 0.075);
        assert_eq!(t.goal_radial, 0.08);
        assert_eq!(t.goal_angle, PI / 2.0);
        assert_eq!(t.mass, 0.15);
    }

    #[test]
    fn sampled_sizes_stay_in_interval() {
        let ranges = TaskRanges {
            size: Interval::new(0.015, 0.095),
            ..TaskRanges::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let t = sample_task(&ranges, &mut rng);
            for v in [t.block_length, t.block_width, t.block_height] {
                assert!(ranges.size.contains(v));
            }
        }
        let a = sample_task(&ranges, &mut ChaCha8Rng::seed_from_u64(5));
        let b = sample_task(&ranges, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn reset_layout() {
        let cfg = EnvConfig::default();
        let (s, o) = reset(&cfg, &TaskParams::default(), 0).unwrap();
        assert_eq!(s.block.center(), Vec2::ZERO);
        assert_eq!(s.block.half_extents(), (0.0375, 0.0375));
        assert_eq!(o[obs_index::REMAINING_TIME], 1.0);
        assert_abs_diff_eq!(s.effectors[0].pos.y, 0.12, epsilon = 1e-15);
        assert_abs_diff_eq!(s.effectors[1].pos.x, -0.12 * (30f64).to_radians().cos(), epsilon = 1e-15);
        let (_, o2) = reset(&cfg, &TaskParams::default(), 0).unwrap();
        assert_eq!(o, o2);
    }

    #[test]
    fn reset_rejects_goal_outside_arena() {
        let task = TaskParams {
            goal_radial: 0.5,
            ..TaskParams::default()
        };
        assert!(matches!(
            reset(&EnvConfig::default(), &task, 0),
            Err(EnvError::OutOfLimits { name: "goal_y", .. })
        ));
    }

    #[test]
    fn observation_golden_vector() {
        let cfg = EnvConfig::default();
        let mut task = TaskParams::default();
        task.block_length = 0.06;
        task.block_width = 0.04;
        let (mut s, _) = reset(&cfg, &task, 0).unwrap();
        s.t = 75;
        s.effectors[0] = Effector { pos: Vec2::new(0.01, 0.02), vel: Vec2::new(0.03, 0.04) };
        s.effectors[1] = Effector { pos: Vec2::new(0.05, 0.06), vel: Vec2::new(0.07, 0.08) };
        s.effectors[2] = Effector { pos: Vec2::new(0.09, 0.10), vel: Vec2::new(0.11, 0.12) };
        s.block = s.block.with_pose(Pose2D::new(0.013, -0.014, PI / 6.0));
        s.block_lin_vel = Vec2::new(0.15, 0.16);
        s.block_ang_vel = 0.17;
        let o = observe(&s, &cfg);
        let goal_x = 0.08 * (PI / 2.0).cos();
        #[rustfmt::skip]
        let expected = [
            0.75,
            0.01, 0.02, 0.05, 0.06, 0.09, 0.10,
            0.03, 0.04, 0.07, 0.08, 0.11, 0.12,
            0.013, -0.014, (PI / 6.0).sin(), (PI / 6.0).cos(),
            0.15, 0.16,
            0.17,
            goal_x, 0.08, 0.0f64.sin(), 0.0f64.cos(),
            0.03, 0.02,
        ];
        assert_eq!(o.len(), 26);
        assert_eq!(o, expected);

        let hidden = EnvConfig { observe_size: false, observe_goal: false, ..cfg };
        let o = observe(&s, &hidden);
        assert_eq!(&o[20..26], &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_action_is_fixed_point() {
        let cfg = EnvConfig::default();
        let task = TaskParams { goal_radial: 0.15, ..TaskParams::default() };
        let (s, _) = reset(&cfg, &task, 0).unwrap();
        let out = step(&s, &[0.0; 6], &cfg, &push_spec()).unwrap();
        assert_eq!(out.state.block, s.block);
        assert_eq!(out.state.effectors.map(|e| e.pos), s.effectors.map(|e| e.pos));
        assert_eq!(out.state.t, 1);
        assert_eq!(out.reward, 0.0);
    }

    /// Effector 0 placed just touching the +x face, driven in -x.
    fn single_push(mass: f64, friction: f64) -> (EnvState, StepOutcome) {
        let cfg = EnvConfig::default();
        let task = TaskParams { mass, friction, goal_radial: 0.15, ..TaskParams::default() };
        let (mut s, _) = reset(&cfg, &task, 0).unwrap();
        s.effectors[0].pos = Vec2::new(0.0375 + cfg.effector_radius, 0.0);
        s.effectors[1].pos = Vec2::new(-0.15, -0.15);
        s.effectors[2].pos = Vec2::new(0.15, -0.15);
        let out = step(&s, &[-0.1, 0.0, 0.0, 0.0, 0.0, 0.0], &cfg, &push_spec()).unwrap();
        (s, out)
    }

    #[test]
    fn single_contact_displacement_is_lambda_times_penetration() {
        let penetration = 0.1 * 0.05;
        let (_, out) = single_push(0.15, 0.0);
        assert_abs_diff_eq!(out.state.block.center().x, -penetration, epsilon = 1e-15);
        assert_eq!(out.state.block.center().y, 0.0);
        assert_eq!(out.state.block.pose.theta, 0.0);
        let (_, heavy) = single_push(0.30, 0.0);
        assert_abs_diff_eq!(heavy.state.block.center().x, -0.5 * penetration, epsilon = 1e-15);
    }

    #[test]
    fn action_length_is_checked() {
        let cfg = EnvConfig::default();
        let (s, _) = reset(&cfg, &TaskParams::default(), 0).unwrap();
        assert_eq!(step(&s, &[0.0; 5], &cfg, &push_spec()), Err(EnvError::ActionLength(5)));
    }

    #[test]
    fn done_at_horizon() {
        let cfg = EnvConfig { horizon: 2, ..EnvConfig::default() };
        let (s, _) = reset(&cfg, &TaskParams::default(), 0).unwrap();
        let o1 = step(&s, &[0.0; 6], &cfg, &push_spec()).unwrap();
        assert!(!o1.done);
        let o2 = step(&o1.state, &[0.0; 6], &cfg, &push_spec()).unwrap();
        assert!(o2.done);
        assert_eq!(o2.obs[0], 0.0);
        assert!(step(&o2.state, &[0.0; 6], &cfg, &push_spec()).is_err());
    }
}

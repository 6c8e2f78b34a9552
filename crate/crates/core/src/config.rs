//! Experiment configuration files.
//!
//! One `key = value` pair per line, `#` starts a comment. Every key must
//! belong to the fixed schema below; anything else is rejected. Numbers may
//! be written in terms of `pi` (`pi`, `-pi`, `pi/2`, `3*pi/4`).
//!
//! Curriculum stages are declared as `curriculum.stage.N.*` with `N`
//! counting from 0. A stage inherits every range it does not set from
//! `task.*`. Without any stage the run uses a single stage built from
//! `task.*`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::curriculum::{CurriculumSchedule, Stage};
use crate::env::{EnvConfig, Interval, RewardSpec, TaskRanges};
use crate::reward::{OeAggregate, RewardKind};
use crate::sac::SacConfig;
use crate::transfer::TransferKind;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("bad value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

const RANGE_VARS: [&str; 6] = ["size", "goal_radial", "goal_angle", "goal_yaw", "mass", "friction"];

const SCALAR_KEYS: &[&str] = &[
    "env.arena_half",
    "env.dt",
    "env.horizon",
    "env.effector_radius",
    "env.v_max",
    "env.mass_ref",
    "env.k_rot",
    "env.observe_size",
    "env.observe_goal",
    "env.size_min",
    "env.mass_min",
    "env.mass_max",
    "env.friction_max",
    "reward.kind",
    "reward.w_iou",
    "reward.w_goal",
    "reward.w_reach",
    "reward.w_grasp_abs",
    "reward.w_block_move",
    "reward.oe_aggregate",
    "sac.gamma",
    "sac.tau",
    "sac.alpha",
    "sac.auto_alpha",
    "sac.lr",
    "sac.batch",
    "sac.warmup_steps",
    "sac.updates_per_step",
    "sac.buffer_capacity",
    "sac.hidden_width",
    "sac.hidden_layers",
    "train.total_steps",
    "train.seeds",
    "train.eval_every",
    "train.checkpoint_every",
    "train.arm",
    "transfer.kind",
    "transfer.source",
    "transfer.reset_optimizer",
    "transfer.across_task",
    "eval.n_episodes",
    "eval.ood_pct",
    "eval.window",
];

fn is_known(key: &str) -> bool {
    if SCALAR_KEYS.contains(&key) {
        return true;
    }
    if let Some(rest) = key.strip_prefix("task.") {
        return is_range_key(rest);
    }
    if let Some(rest) = key.strip_prefix("curriculum.stage.") {
        if let Some((n, field)) = rest.split_once('.') {
            return n.parse::<usize>().is_ok() && (field == "start_step" || field == "name" || is_range_key(field));
        }
    }
    false
}

fn is_range_key(s: &str) -> bool {
    matches!(s.rsplit_once('.'), Some((var, "min" | "max")) if RANGE_VARS.contains(&var))
}

/// Human-readable list of accepted keys.
pub fn schema_help() -> String {
    let mut o = String::from("config keys (`key = value`, `#` comments):\n");
    for k in SCALAR_KEYS {
        o.push_str("  ");
        o.push_str(k);
        o.push('\n');
    }
    let vars = RANGE_VARS.join("|");
    let _ = writeln!(o, "  task.{{{vars}}}.{{min|max}}");
    let _ = writeln!(o, "  curriculum.stage.N.{{start_step|name}}");
    let _ = writeln!(o, "  curriculum.stage.N.{{{vars}}}.{{min|max}}");
    o
}

/// Parses a float, accepting multiples and fractions of `pi`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(b) => (-1.0, b.trim()),
        None => (1.0, s),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().ok()?),
        None => (body, 1.0),
    };
    let factor = match num.split_once('*') {
        Some((k, p)) if p.trim() == "pi" => k.trim().parse::<f64>().ok()?,
        None if num == "pi" => 1.0,
        _ => return None,
    };
    Some(sign * factor * PI / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub total_steps: u64,
    pub seeds: Vec<u64>,
    /// Zero disables periodic evaluation.
    pub eval_every: u64,
    /// Zero disables periodic checkpoints.
    pub checkpoint_every: u64,
    pub arm: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSection {
    pub kind: Option<TransferKind>,
    pub source: Option<PathBuf>,
    pub reset_optimizer: bool,
    /// Label transferred runs `across_task` regardless of the source tag.
    pub across_task: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSection {
    pub n_episodes: usize,
    pub ood_pct: f64,
    /// Smoothing window (episodes) for curve summaries.
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub task: TaskRanges,
    pub reward: RewardSpec,
    pub sac: SacConfig,
    pub schedule: CurriculumSchedule,
    /// Whether the schedule came from explicit `curriculum.*` keys.
    pub explicit_curriculum: bool,
    pub train: TrainSection,
    pub transfer: TransferSection,
    pub eval: EvalSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let task = TaskRanges::default();
        Self {
            env: EnvConfig::default(),
            task,
            reward: RewardSpec::default(),
            sac: SacConfig::default(),
            schedule: CurriculumSchedule::single(task),
            explicit_curriculum: false,
            train: TrainSection {
                total_steps: 20_000,
                seeds: vec![0],
                eval_every: 0,
                checkpoint_every: 0,
                arm: "baseline".into(),
            },
            transfer: TransferSection {
                kind: None,
                source: None,
                reset_optimizer: true,
                across_task: false,
            },
            eval: EvalSection {
                n_episodes: 100,
                ood_pct: 0.0,
                window: 10,
            },
        }
    }
}

/// Raw `key -> value` pairs with the line each came from.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !is_known(k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        if out.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
            return Err(ConfigError::Duplicate(k.to_string()));
        }
    }
    Ok(out)
}

struct Values {
    map: BTreeMap<String, String>,
}

impl Values {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::Value {
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    fn f64(&self, key: &str, into: &mut f64) -> Result<(), ConfigError> {
        if let Some(v) = self.raw(key) {
            *into = parse_number(v).filter(|x| x.is_finite()).ok_or_else(|| Self::bad(key, format!("`{v}` is not a number")))?;
        }
        Ok(())
    }

    fn int<T: std::str::FromStr>(&self, key: &str, into: &mut T) -> Result<(), ConfigError> {
        if let Some(v) = self.raw(key) {
            *into = v.parse().map_err(|_| Self::bad(key, format!("`{v}` is not a non-negative integer")))?;
        }
        Ok(())
    }

    fn bool(&self, key: &str, into: &mut bool) -> Result<(), ConfigError> {
        if let Some(v) = self.raw(key) {
            *into = match v {
                "true" => true,
                "false" => false,
                _ => return Err(Self::bad(key, format!("`{v}` is not true/false"))),
            };
        }
        Ok(())
    }

    fn ranges(&self, prefix: &str, base: &TaskRanges) -> Result<TaskRanges, ConfigError> {
        let mut r = *base;
        for (var, iv) in r.fields_mut() {
            self.f64(&format!("{prefix}{var}.min"), &mut iv.min)?;
            self.f64(&format!("{prefix}{var}.max"), &mut iv.max)?;
        }
        Ok(r)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides on top.
    pub fn parse_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<String, String> = parse_pairs(text)?.into_iter().map(|(k, (_, v))| (k, v)).collect();
        for (k, v) in overrides {
            if !is_known(k) {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
            map.insert(k.clone(), v.clone());
        }
        Self::from_values(Values { map })
    }

    fn from_values(v: Values) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        let e = &mut c.env;
        v.f64("env.arena_half", &mut e.arena_half)?;
        v.f64("env.dt", &mut e.dt)?;
        v.int("env.horizon", &mut e.horizon)?;
        v.f64("env.effector_radius", &mut e.effector_radius)?;
        v.f64("env.v_max", &mut e.v_max)?;
        v.f64("env.mass_ref", &mut e.mass_ref)?;
        v.f64("env.k_rot", &mut e.k_rot)?;
        v.bool("env.observe_size", &mut e.observe_size)?;
        v.bool("env.observe_goal", &mut e.observe_goal)?;
        v.f64("env.size_min", &mut e.size_min)?;
        v.f64("env.mass_min", &mut e.mass_min)?;
        v.f64("env.mass_max", &mut e.mass_max)?;
        v.f64("env.friction_max", &mut e.friction_max)?;
        c.env.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        c.task = v.ranges("task.", &c.task)?;

        if let Some(k) = v.raw("reward.kind") {
            c.reward.kind = match k {
                "push" => RewardKind::Push,
                "grasp" => RewardKind::Grasp,
                _ => return Err(Values::bad("reward.kind", format!("`{k}` is not push/grasp"))),
            };
        }
        let w = &mut c.reward.weights;
        v.f64("reward.w_iou", &mut w.w_iou)?;
        v.f64("reward.w_goal", &mut w.w_goal)?;
        v.f64("reward.w_reach", &mut w.w_reach)?;
        v.f64("reward.w_grasp_abs", &mut w.w_grasp_abs)?;
        v.f64("reward.w_block_move", &mut w.w_block_move)?;
        if !c.reward.weights.is_valid() {
            return Err(ConfigError::Invalid("reward weights must be finite and non-negative".into()));
        }
        if let Some(a) = v.raw("reward.oe_aggregate") {
            c.reward.oe_aggregate = match a {
                "mean" => OeAggregate::Mean,
                "min" => OeAggregate::Min,
                _ => return Err(Values::bad("reward.oe_aggregate", format!("`{a}` is not mean/min"))),
            };
        }

        let s = &mut c.sac;
        v.f64("sac.gamma", &mut s.gamma)?;
        v.f64("sac.tau", &mut s.tau)?;
        v.f64("sac.alpha", &mut s.alpha)?;
        v.bool("sac.auto_alpha", &mut s.auto_alpha)?;
        v.f64("sac.lr", &mut s.lr)?;
        v.int("sac.batch", &mut s.batch)?;
        v.int("sac.warmup_steps", &mut s.warmup_steps)?;
        v.int("sac.updates_per_step", &mut s.updates_per_step)?;
        v.int("sac.buffer_capacity", &mut s.buffer_capacity)?;
        v.int("sac.hidden_width", &mut s.hidden_width)?;
        v.int("sac.hidden_layers", &mut s.hidden_layers)?;
        c.sac.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let mut stage_ids: Vec<usize> = v
            .map
            .keys()
            .filter_map(|k| k.strip_prefix("curriculum.stage.")?.split_once('.')?.0.parse().ok())
            .collect();
        stage_ids.dedup();
        if !stage_ids.is_empty() {
            if stage_ids != (0..stage_ids.len()).collect::<Vec<_>>() {
                return Err(ConfigError::Invalid("curriculum stages must be numbered 0, 1, 2, ...".into()));
            }
            let mut stages = Vec::new();
            for n in stage_ids {
                let prefix = format!("curriculum.stage.{n}.");
                let key = format!("{prefix}start_step");
                let mut start_step = 0u64;
                if n > 0 && v.raw(&key).is_none() {
                    return Err(Values::bad(&key, "missing"));
                }
                v.int(&key, &mut start_step)?;
                let name = v.raw(&format!("{prefix}name")).unwrap_or(default_stage_name(n)).to_string();
                stages.push(Stage {
                    name,
                    ranges: v.ranges(&prefix, &c.task)?,
                    start_step,
                });
            }
            c.schedule = CurriculumSchedule::new(stages);
            c.explicit_curriculum = true;
        } else {
            c.schedule = CurriculumSchedule::single(c.task);
        }
        if let Err(violations) = c.schedule.validate(&c.env) {
            let msgs: Vec<String> = violations.iter().map(|x| x.to_string()).collect();
            return Err(ConfigError::Invalid(msgs.join("; ")));
        }

        let t = &mut c.train;
        v.int("train.total_steps", &mut t.total_steps)?;
        if let Some(s) = v.raw("train.seeds") {
            t.seeds = s
                .split(',')
                .map(|x| x.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Values::bad("train.seeds", format!("`{s}` is not a comma-separated list of integers")))?;
        }
        if t.seeds.is_empty() {
            return Err(Values::bad("train.seeds", "empty"));
        }
        v.int("train.eval_every", &mut t.eval_every)?;
        v.int("train.checkpoint_every", &mut t.checkpoint_every)?;
        if let Some(a) = v.raw("train.arm") {
            if a.is_empty() || a.contains(',') || a.contains('"') {
                return Err(Values::bad("train.arm", "must be a non-empty label without commas or quotes"));
            }
            t.arm = a.to_string();
        }

        if let Some(k) = v.raw("transfer.kind") {
            c.transfer.kind =
                Some(TransferKind::from_tag(k).ok_or_else(|| Values::bad("transfer.kind", format!("`{k}` is not whole/policy_only")))?);
        }
        c.transfer.source = v.raw("transfer.source").filter(|s| !s.is_empty()).map(PathBuf::from);
        v.bool("transfer.reset_optimizer", &mut c.transfer.reset_optimizer)?;
        v.bool("transfer.across_task", &mut c.transfer.across_task)?;

        v.int("eval.n_episodes", &mut c.eval.n_episodes)?;
        v.f64("eval.ood_pct", &mut c.eval.ood_pct)?;
        v.int("eval.window", &mut c.eval.window)?;
        if c.eval.n_episodes == 0 || c.eval.window == 0 || c.eval.ood_pct < 0.0 {
            return Err(ConfigError::Invalid(
                "eval.n_episodes and eval.window must be positive, eval.ood_pct non-negative".into(),
            ));
        }
        Ok(c)
    }

    /// Every key with its effective value. Parsing the result gives back an
    /// identical config.
    pub fn resolved(&self) -> String {
        let mut o = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(o, "{k} = {v}");
        };
        let e = &self.env;
        kv("env.arena_half", e.arena_half.to_string());
        kv("env.dt", e.dt.to_string());
        kv("env.horizon", e.horizon.to_string());
        kv("env.effector_radius", e.effector_radius.to_string());
        kv("env.v_max", e.v_max.to_string());
        kv("env.mass_ref", e.mass_ref.to_string());
        kv("env.k_rot", e.k_rot.to_string());
        kv("env.observe_size", e.observe_size.to_string());
        kv("env.observe_goal", e.observe_goal.to_string());
        kv("env.size_min", e.size_min.to_string());
        kv("env.mass_min", e.mass_min.to_string());
        kv("env.mass_max", e.mass_max.to_string());
        kv("env.friction_max", e.friction_max.to_string());
        for (var, iv) in self.task.fields() {
            kv(&format!("task.{var}.min"), iv.min.to_string());
            kv(&format!("task.{var}.max"), iv.max.to_string());
        }
        let r = &self.reward;
        kv("reward.kind", reward_tag(r.kind).into());
        kv("reward.w_iou", r.weights.w_iou.to_string());
        kv("reward.w_goal", r.weights.w_goal.to_string());
        kv("reward.w_reach", r.weights.w_reach.to_string());
        kv("reward.w_grasp_abs", r.weights.w_grasp_abs.to_string());
        kv("reward.w_block_move", r.weights.w_block_move.to_string());
        kv(
            "reward.oe_aggregate",
            match r.oe_aggregate {
                OeAggregate::Mean => "mean",
                OeAggregate::Min => "min",
            }
            .into(),
        );
        let s = &self.sac;
        kv("sac.gamma", s.gamma.to_string());
        kv("sac.tau", s.tau.to_string());
        kv("sac.alpha", s.alpha.to_string());
        kv("sac.auto_alpha", s.auto_alpha.to_string());
        kv("sac.lr", s.lr.to_string());
        kv("sac.batch", s.batch.to_string());
        kv("sac.warmup_steps", s.warmup_steps.to_string());
        kv("sac.updates_per_step", s.updates_per_step.to_string());
        kv("sac.buffer_capacity", s.buffer_capacity.to_string());
        kv("sac.hidden_width", s.hidden_width.to_string());
        kv("sac.hidden_layers", s.hidden_layers.to_string());
        if self.explicit_curriculum {
            for (n, st) in self.schedule.stages().iter().enumerate() {
                kv(&format!("curriculum.stage.{n}.name"), st.name.clone());
                kv(&format!("curriculum.stage.{n}.start_step"), st.start_step.to_string());
                for (var, iv) in st.ranges.fields() {
                    kv(&format!("curriculum.stage.{n}.{var}.min"), iv.min.to_string());
                    kv(&format!("curriculum.stage.{n}.{var}.max"), iv.max.to_string());
                }
            }
        }
        let t = &self.train;
        kv("train.total_steps", t.total_steps.to_string());
        kv("train.seeds", t.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
        kv("train.eval_every", t.eval_every.to_string());
        kv("train.checkpoint_every", t.checkpoint_every.to_string());
        kv("train.arm", t.arm.clone());
        let x = &self.transfer;
        if let Some(k) = x.kind {
            kv("transfer.kind", k.tag().into());
        }
        if let Some(s) = &x.source {
            kv("transfer.source", s.display().to_string());
        }
        kv("transfer.reset_optimizer", x.reset_optimizer.to_string());
        kv("transfer.across_task", x.across_task.to_string());
        kv("eval.n_episodes", self.eval.n_episodes.to_string());
        kv("eval.ood_pct", self.eval.ood_pct.to_string());
        kv("eval.window", self.eval.window.to_string());
        o
    }

    /// Final-stage ranges: what in-distribution evaluation samples from.
    pub fn eval_ranges(&self) -> TaskRanges {
        self.schedule.stages().last().map(|s| s.ranges).unwrap_or(self.task)
    }

    /// True when every task variable of every stage is fixed.
    pub fn is_fixed_task(&self) -> bool {
        self.schedule
            .stages()
            .iter()
            .all(|s| s.ranges.fields().iter().all(|(_, iv): &(&str, Interval)| iv.is_degenerate()))
    }
}

pub fn reward_tag(kind: RewardKind) -> &'static str {
    match kind {
        RewardKind::Push => "push",
        RewardKind::Grasp => "grasp",
    }
}

fn default_stage_name(n: usize) -> &'static str {
    match n {
        0 => "preliminary",
        1 => "intermediate",
        _ => "advanced",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_expressions() {
        assert_eq!(parse_number("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_number("-pi"), Some(-PI));
        assert_eq!(parse_number("3*pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_number("0.25"), Some(0.25));
        assert_eq!(parse_number("tau"), None);
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert_eq!(ExperimentConfig::parse("sac.gama = 0.9").unwrap_err(), ConfigError::UnknownKey("sac.gama".into()));
        assert!(matches!(ExperimentConfig::parse("sac.lr = 1\nsac.lr = 2"), Err(ConfigError::Duplicate(_))));
        assert!(matches!(ExperimentConfig::parse("sac.lr 1"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(ExperimentConfig::parse("curriculum.stage.x.start_step = 1").is_err());
    }

    #[test]
    fn stages_inherit_task_ranges() {
        let text = "task.mass.min = 0.1\ntask.mass.max = 0.1\n\
                    curriculum.stage.0.start_step = 0\n\
                    curriculum.stage.1.start_step = 50\ncurriculum.stage.1.mass.max = 0.3\n";
        let c = ExperimentConfig::parse(text).unwrap();
        let st = c.schedule.stages();
        assert_eq!(st.len(), 2);
        assert_eq!(st[0].ranges.mass, Interval::fixed(0.1));
        assert_eq!(st[1].ranges.mass, Interval::new(0.1, 0.3));
        assert_eq!(st[1].name, "intermediate");
    }

    #[test]
    fn resolved_echo_reparses_identically() {
        let text = "curriculum.stage.0.start_step = 0\ncurriculum.stage.1.start_step = 9\n\
                    curriculum.stage.1.goal_angle.min = -pi\ncurriculum.stage.1.goal_angle.max = pi\n\
                    train.seeds = 3, 4\nsac.auto_alpha = true\ntransfer.kind = whole\n";
        let c = ExperimentConfig::parse(text).unwrap();
        let again = ExperimentConfig::parse(&c.resolved()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.resolved(), c.resolved());
    }

    #[test]
    fn missing_start_step_and_gaps() {
        assert!(ExperimentConfig::parse("curriculum.stage.1.start_step = 5").is_err());
        assert!(ExperimentConfig::parse("curriculum.stage.0.start_step = 0\ncurriculum.stage.1.name = x").is_err());
    }
}

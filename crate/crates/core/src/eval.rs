//! Learning-curve metrics and deterministic policy evaluation.

use std::fmt;
use std::io;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{self, EnvConfig, EnvError, Interval, RewardSpec, TaskRanges};
use crate::sac::SacAgent;

/// One finished training episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Global env step count when the episode ended.
    pub step: u64,
    pub episode: u64,
    pub ret: f64,
    /// Final-step IoU with the goal.
    pub success: f64,
    pub stage: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearningCurve {
    pub seed: u64,
    pub arm: String,
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn new(seed: u64, arm: impl Into<String>) -> Self {
        Self {
            seed,
            arm: arm.into(),
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn returns(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ret).collect()
    }

    pub fn successes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.success).collect()
    }

    pub fn steps(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.step).collect()
    }
}

/// Centered moving average. Entry `i` averages indices
/// `i - w/2 ..= i + ceil(w/2) - 1`, truncated to the series, so even windows
/// lean one sample backwards.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    let back = window / 2;
    let fwd = window - back - 1;
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + fwd).min(n - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean of the first `k` smoothed returns of `test` minus the same for `baseline`.
pub fn jump_start(test: &LearningCurve, baseline: &LearningCurve, k: usize, window: usize) -> f64 {
    assert!(k >= 1 && test.len() >= k && baseline.len() >= k, "curves need at least k episodes");
    mean(&smooth(&test.returns(), window)[..k]) - mean(&smooth(&baseline.returns(), window)[..k])
}

/// Mean of the last `k` smoothed returns.
pub fn asymptotic(curve: &LearningCurve, k: usize, window: usize) -> f64 {
    assert!(k >= 1 && curve.len() >= k, "curve needs at least k episodes");
    let s = smooth(&curve.returns(), window);
    mean(&s[s.len() - k..])
}

/// First global step whose smoothed return reaches `threshold`.
pub fn time_to_threshold(curve: &LearningCurve, threshold: f64, window: usize) -> Option<u64> {
    smooth(&curve.returns(), window)
        .iter()
        .zip(&curve.points)
        .find(|(v, _)| **v >= threshold)
        .map(|(_, p)| p.step)
}

/// Widens every non-degenerate interval about its midpoint by `1 + pct`,
/// then clips to `limits`.
pub fn extend_ranges(ranges: &TaskRanges, pct: f64, limits: &TaskRanges) -> TaskRanges {
    assert!(pct >= 0.0, "pct must be non-negative");
    let mut out = *ranges;
    for ((_, iv), (_, lim)) in out.fields_mut().into_iter().zip(limits.fields()) {
        if iv.is_degenerate() {
            continue;
        }
        let grow = 0.5 * (iv.max - iv.min) * pct;
        *iv = Interval::new((iv.min - grow).max(lim.min), (iv.max + grow).min(lim.max));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    InDistribution,
    OutOfDistribution,
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::InDistribution => "ID",
            Distribution::OutOfDistribution => "OOD",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub arm: String,
    pub dist: Distribution,
    pub seed: u64,
    pub successes: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl EvalReport {
    pub fn from_successes(arm: impl Into<String>, dist: Distribution, seed: u64, successes: Vec<f64>) -> Self {
        assert!(!successes.is_empty(), "report needs at least one episode");
        let m = mean(&successes);
        let var = successes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / successes.len() as f64;
        Self {
            arm: arm.into(),
            dist,
            seed,
            successes,
            mean: m,
            std: var.sqrt(),
        }
    }

    pub fn n(&self) -> usize {
        self.successes.len()
    }
}

/// Task stream used by evaluation rollouts.
pub const EVAL_STREAM: u64 = 7;

/// Final-step fractional success of `n` deterministic episodes
/// (`action = tanh(mean) * v_max`), each on a freshly sampled task.
pub fn rollout_successes(
    agent: &SacAgent,
    env_cfg: &EnvConfig,
    ranges: &TaskRanges,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, EnvError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EVAL_STREAM);
    let spec = RewardSpec::default();
    (0..n)
        .map(|i| {
            let task = env::sample_task(ranges, &mut rng);
            let (mut state, mut obs) = env::reset(env_cfg, &task, seed.wrapping_add(i as u64))?;
            loop {
                let action: Vec<f64> = agent.deterministic_action(&obs).iter().map(|a| a * env_cfg.v_max).collect();
                let out = env::step(&state, &action, env_cfg, &spec)?;
                if out.done {
                    return Ok(out.info.fractional_success);
                }
                state = out.state;
                obs = out.obs;
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    agent: &SacAgent,
    env_cfg: &EnvConfig,
    ranges: &TaskRanges,
    n: usize,
    seed: u64,
    arm: &str,
    dist: Distribution,
) -> Result<EvalReport, EnvError> {
    let successes = rollout_successes(agent, env_cfg, ranges, n.max(1), seed)?;
    Ok(EvalReport::from_successes(arm, dist, seed, successes))
}

/// Appends summary rows to `eval.csv` and per-episode rows to
/// `eval_episodes.csv` inside `dir`, writing headers for new files.
pub fn append_reports(dir: &Path, reports: &[EvalReport]) -> io::Result<()> {
    let mut summary = appender(&dir.join("eval.csv"), &["arm", "dist", "n", "mean", "std", "seed"])?;
    let mut detail = appender(&dir.join("eval_episodes.csv"), &["arm", "dist", "seed", "episode", "fractional_success"])?;
    for r in reports {
        summary.write_record([
            r.arm.clone(),
            r.dist.to_string(),
            r.n().to_string(),
            r.mean.to_string(),
            r.std.to_string(),
            r.seed.to_string(),
        ])?;
        for (i, s) in r.successes.iter().enumerate() {
            detail.write_record([r.arm.clone(), r.dist.to_string(), r.seed.to_string(), i.to_string(), s.to_string()])?;
        }
    }
    summary.flush()?;
    detail.flush()?;
    Ok(())
}

fn appender(path: &Path, header: &[&str]) -> io::Result<csv::Writer<std::fs::File>> {
    let fresh = !path.exists();
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(header)?;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(returns: &[f64]) -> LearningCurve {
        let mut c = LearningCurve::new(0, "t");
        for (i, &r) in returns.iter().enumerate() {
            c.points.push(CurvePoint {
                step: 10 * (i as u64 + 1),
                episode: i as u64,
                ret: r,
                success: 0.0,
                stage: 0,
            });
        }
        c
    }

    #[test]
    fn smoothing_edges() {
        assert_eq!(smooth(&[0.0, 10.0, 0.0, 10.0], 2), vec![0.0, 5.0, 5.0, 5.0]);
        assert_eq!(smooth(&[1.0, 2.0, 6.0], 3), vec![1.5, 3.0, 4.0]);
        assert_eq!(smooth(&[3.0, 4.0], 1), vec![3.0, 4.0]);
    }

    #[test]
    fn metric_fixtures() {
        let t = curve(&[5.0; 6]);
        let b = curve(&[2.0; 6]);
        assert_eq!(jump_start(&t, &b, 3, 1), 3.0);
        assert_eq!(asymptotic(&curve(&[0.0, 0.0, 4.0, 8.0]), 2, 1), 6.0);
        let stairs = curve(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
        assert_eq!(time_to_threshold(&stairs, 1.5, 1), Some(50));
        assert_eq!(time_to_threshold(&stairs, -1.0, 1), Some(10));
        assert_eq!(time_to_threshold(&stairs, 9.0, 1), None);
    }

    #[test]
    fn extension_with_clipping() {
        let limits = EnvConfig::default().limits();
        let mut r = TaskRanges::default();
        r.size = Interval::new(0.015, 0.095);
        r.goal_radial = Interval::new(0.0, 0.15);
        let e = extend_ranges(&r, 0.67, &limits);
        assert_eq!(e.size.min, 0.01);
        assert!((e.size.max - 0.1218).abs() < 1e-12);
        assert_eq!(e.mass, r.mass);
        let e = extend_ranges(&r, 0.13, &limits);
        assert_eq!(e.goal_radial.min, 0.0);
        assert!((e.goal_radial.max - 0.15975).abs() < 1e-12);
        assert_eq!(extend_ranges(&r, 0.0, &limits), r);
    }

    #[test]
    fn population_std() {
        let r = EvalReport::from_successes("a", Distribution::InDistribution, 1, vec![0.0, 1.0]);
        assert_eq!((r.mean, r.std), (0.5, 0.5));
    }
}

//! Subcommand implementations behind the `pushcurl` binary.
//!
//! Every training command writes one directory per seed under its output
//! root:
//!
//! ```text
//! <out>/seed_<s>/config.resolved
//!               /metrics.csv
//!               /eval.csv, eval_episodes.csv
//!               /checkpoints/step_<N>.ckpt
//!               /final.ckpt
//!               /run.log
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{grad_check, BackwardFault, Gradients};
use crate::config::{reward_tag, schema_help, ConfigError, ExperimentConfig};
use crate::env::{self, EnvError, ACTION_DIM, NUM_EFFECTORS, OBS_DIM};
use crate::eval::{self, CurvePoint, Distribution, EvalReport, LearningCurve};
use crate::sac::{
    self, actor_objective_with_fault, alpha_loss, critic_losses, standard_normal, Architecture, Observer,
    ReplayBuffer, SacAgent, SacConfig, SacError, TrainSpec, LOG_ALPHA,
};
use crate::transfer::{self, apply_transfer, Checkpoint, CheckpointError, TransferError, TransferKind};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "PUSHCURL_OUT";
pub const METRICS_HEADER: [&str; 7] = ["step", "episode", "return", "fractional_success", "stage", "arm", "seed"];
/// Gradient-check pass threshold on the relative error.
pub const GRADCHECK_TOL: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Sac(#[from] SacError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("gradient check failed: max relative error {0:e}")]
    GradCheck(f64),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `--out`, else `$PUSHCURL_OUT`, else `runs`.
pub fn output_root(out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Reads and validates a config file, applying `key=value` overrides.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config {}: {e}\n\n{}", path.display(), schema_help()))
    })?;
    ExperimentConfig::parse_with_overrides(&text, overrides).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

/// Splits `key=value` override strings.
pub fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, CliError> {
    raw.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| CliError::Usage(format!("override `{s}` is not key=value")))
        })
        .collect()
}

pub fn train_spec(cfg: &ExperimentConfig, seed: u64, arm: &str) -> TrainSpec {
    TrainSpec {
        env: cfg.env,
        reward: cfg.reward,
        schedule: cfg.schedule.clone(),
        sac: cfg.sac.clone(),
        total_steps: cfg.train.total_steps,
        seed,
        checkpoint_every: cfg.train.checkpoint_every,
        arm: arm.to_string(),
    }
}

/// Result of one seed's run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub seed: u64,
    pub dir: PathBuf,
    pub curve: LearningCurve,
    pub final_eval: EvalReport,
    /// Mean of the last tenth of smoothed returns.
    pub asymptotic_return: f64,
}

struct RunObserver<'c> {
    cfg: &'c ExperimentConfig,
    dir: PathBuf,
    metrics: csv::Writer<File>,
    log: File,
    arm: String,
    seed: u64,
    last_stage: Option<usize>,
    meta: BTreeMap<String, String>,
}

impl RunObserver<'_> {
    fn log(&mut self, line: &str) -> Result<(), SacError> {
        writeln!(self.log, "{line}").map_err(|e| SacError::Callback(e.to_string()))
    }
}

impl Observer for RunObserver<'_> {
    fn on_episode(&mut self, p: &CurvePoint) -> Result<(), SacError> {
        let cb = |e: csv::Error| SacError::Callback(e.to_string());
        self.metrics
            .write_record([
                p.step.to_string(),
                p.episode.to_string(),
                p.ret.to_string(),
                p.success.to_string(),
                p.stage.to_string(),
                self.arm.clone(),
                self.seed.to_string(),
            ])
            .map_err(cb)?;
        self.metrics.flush().map_err(|e| SacError::Callback(e.to_string()))?;
        if self.last_stage != Some(p.stage) {
            let name = self.cfg.schedule.stages()[p.stage].name.clone();
            self.log(&format!("episode {} (step {}): stage {} `{name}`", p.episode, p.step, p.stage))?;
            self.last_stage = Some(p.stage);
        }
        Ok(())
    }

    fn on_checkpoint(&mut self, step: u64, agent: &SacAgent) -> Result<(), SacError> {
        let path = self.dir.join("checkpoints").join(format!("step_{step}.ckpt"));
        let mut meta = self.meta.clone();
        meta.insert("global_step".into(), step.to_string());
        Checkpoint::from_agent(agent, true, meta)
            .save(&path)
            .map_err(|e| SacError::Callback(e.to_string()))?;
        self.log(&format!("step {step}: checkpoint {}", path.display()))
    }

    fn on_step(&mut self, step: u64, agent: &SacAgent) -> Result<(), SacError> {
        let every = self.cfg.train.eval_every;
        if every > 0 && step % every == 0 {
            let r = eval::evaluate(
                agent,
                &self.cfg.env,
                &self.cfg.eval_ranges(),
                self.cfg.eval.n_episodes,
                self.seed,
                &self.arm,
                Distribution::InDistribution,
            )?;
            self.log(&format!("step {step}: ID eval mean {} std {} over {}", r.mean, r.std, r.n()))?;
        }
        Ok(())
    }
}

fn run_meta(cfg: &ExperimentConfig, seed: u64, arm: &str) -> BTreeMap<String, String> {
    let mut m = transfer::source_meta(reward_tag(cfg.reward.kind), 0, seed);
    m.insert("arm".into(), arm.to_string());
    m
}

/// Trains one seed into `dir`, optionally starting from a prepared agent.
pub fn run_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    arm: &str,
    dir: &Path,
    agent: Option<SacAgent>,
) -> Result<RunSummary, CliError> {
    if dir.join("metrics.csv").exists() {
        return Err(CliError::Usage(format!("run directory {} already holds a run", dir.display())));
    }
    fs::create_dir_all(dir.join("checkpoints")).map_err(io_err(dir))?;
    let mut resolved = cfg.clone();
    resolved.train.seeds = vec![seed];
    let cfg_path = dir.join("config.resolved");
    fs::write(&cfg_path, resolved.resolved()).map_err(io_err(&cfg_path))?;

    let metrics_path = dir.join("metrics.csv");
    let mut metrics = csv::Writer::from_path(&metrics_path).map_err(|e| CliError::Io {
        path: metrics_path.clone(),
        source: e.into(),
    })?;
    metrics.write_record(METRICS_HEADER).map_err(|e| CliError::Io {
        path: metrics_path.clone(),
        source: e.into(),
    })?;
    metrics.flush().map_err(io_err(&metrics_path))?;
    let log_path = dir.join("run.log");
    let log = File::create(&log_path).map_err(io_err(&log_path))?;

    let spec = train_spec(cfg, seed, arm);
    let mut obs = RunObserver {
        cfg,
        dir: dir.to_path_buf(),
        metrics,
        log,
        arm: arm.to_string(),
        seed,
        last_stage: None,
        meta: run_meta(cfg, seed, arm),
    };
    obs.log(&format!(
        "arm {arm} seed {seed}: {} steps, {} stage(s)",
        cfg.train.total_steps,
        cfg.schedule.len()
    ))?;
    if let Some(a) = &agent {
        obs.on_checkpoint(0, a)?;
    }
    let out = sac::train(&spec, agent, &mut obs)?;

    let mut meta = obs.meta.clone();
    meta.insert("global_step".into(), cfg.train.total_steps.to_string());
    Checkpoint::from_agent(&out.agent, true, meta).save(&dir.join("final.ckpt"))?;

    let report = eval::evaluate(
        &out.agent,
        &cfg.env,
        &cfg.eval_ranges(),
        cfg.eval.n_episodes,
        seed,
        arm,
        Distribution::InDistribution,
    )?;
    eval::append_reports(dir, std::slice::from_ref(&report)).map_err(io_err(dir))?;
    let asymptotic_return = if out.curve.is_empty() {
        f64::NAN
    } else {
        let k = (out.curve.len() / 10).max(1);
        eval::asymptotic(&out.curve, k, cfg.eval.window)
    };
    obs.log(&format!(
        "done: {} episodes, {} updates, asymptotic return {asymptotic_return}, final ID eval mean {} std {}",
        out.curve.len(),
        out.updates,
        report.mean,
        report.std
    ))?;
    Ok(RunSummary {
        seed,
        dir: dir.to_path_buf(),
        curve: out.curve,
        final_eval: report,
        asymptotic_return,
    })
}

/// Runs `f` over `seeds` with at most `jobs` threads, keeping seed order.
pub fn for_seeds<T, F>(seeds: &[u64], jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let jobs = jobs.max(1);
    let mut out = Vec::with_capacity(seeds.len());
    for chunk in seeds.chunks(jobs) {
        let results: Vec<T> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|&seed| { let f = &f; s.spawn(move || f(seed)) }).collect();
            handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
        });
        out.extend(results);
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub overrides: Vec<(String, String)>,
}

fn seeds_for(cfg: &ExperimentConfig, seed: Option<u64>) -> Vec<u64> {
    seed.map(|s| vec![s]).unwrap_or_else(|| cfg.train.seeds.clone())
}

fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed_{seed}"))
}

pub fn cmd_train(args: &TrainArgs) -> Result<Vec<RunSummary>, CliError> {
    let cfg = load_config(&args.config, &args.overrides)?;
    let root = output_root(args.out.as_deref());
    let arm = cfg.train.arm.clone();
    for_seeds(&seeds_for(&cfg, args.seed), args.jobs, |seed| {
        run_seed(&cfg, seed, &arm, &seed_dir(&root, seed), None)
    })
    .into_iter()
    .collect()
}

/// Fixed-task training whose `final.ckpt` is the transfer source.
pub fn cmd_pretrain(args: &TrainArgs) -> Result<Vec<RunSummary>, CliError> {
    let cfg = load_config(&args.config, &args.overrides)?;
    if !cfg.is_fixed_task() {
        return Err(CliError::Usage(
            "pretraining needs fixed task variables (every interval degenerate)".into(),
        ));
    }
    cmd_train(args)
}

#[derive(Debug, Clone, Default)]
pub struct TransferArgs {
    pub train: TrainArgs,
    pub plan: Option<TransferKind>,
    pub source: Option<PathBuf>,
}

pub fn cmd_transfer_train(args: &TransferArgs) -> Result<Vec<RunSummary>, CliError> {
    let cfg = load_config(&args.train.config, &args.train.overrides)?;
    let kind = args
        .plan
        .or(cfg.transfer.kind)
        .ok_or_else(|| CliError::Usage("no transfer plan: pass --plan or set transfer.kind".into()))?;
    let source_path = args
        .source
        .clone()
        .or_else(|| cfg.transfer.source.clone())
        .ok_or_else(|| CliError::Usage("no source checkpoint: pass --source or set transfer.source".into()))?;
    let source = Checkpoint::load(&source_path)?;
    let mut cfg = cfg;
    cfg.transfer.kind = Some(kind);
    cfg.transfer.source = Some(source_path.clone());
    let seeds = seeds_for(&cfg, args.train.seed);

    // Every transfer is prepared before any run directory exists.
    let mut agents = Vec::new();
    for &seed in &seeds {
        let mut agent = train_spec(&cfg, seed, "").initial_agent();
        apply_transfer(kind, cfg.transfer.reset_optimizer, &source, &mut agent)?;
        agents.push(agent);
    }
    let across = cfg.transfer.across_task
        || source.meta.get("source_task").is_some_and(|t| t != reward_tag(cfg.reward.kind));
    let arm = transfer::arm_label(kind, across);
    cfg.train.arm = arm.to_string();
    let cfg = cfg;
    let root = output_root(args.train.out.as_deref());
    let prepared: BTreeMap<u64, SacAgent> = seeds.iter().copied().zip(agents).collect();
    for_seeds(&seeds, args.train.jobs, |seed| {
        run_seed(&cfg, seed, arm, &seed_dir(&root, seed), Some(prepared[&seed].clone()))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Default)]
pub struct EvalArgs {
    pub ckpt: PathBuf,
    pub config: PathBuf,
    pub ood: bool,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<(String, String)>,
}

/// In-distribution report, plus an out-of-distribution one with `--ood`.
pub fn cmd_evaluate(args: &EvalArgs) -> Result<Vec<EvalReport>, CliError> {
    let cfg = load_config(&args.config, &args.overrides)?;
    let ckpt = Checkpoint::load(&args.ckpt)?;
    let arch = Architecture::new(OBS_DIM, ACTION_DIM, cfg.sac.hidden());
    let diff = ckpt.arch.diff(&arch);
    if !diff.is_empty() {
        return Err(TransferError::ArchMismatch(diff).into());
    }
    let agent = SacAgent {
        arch,
        params: ckpt.params.clone(),
        opt: sac::Optimizers::new(cfg.sac.lr),
    };
    let seed = args.seed.unwrap_or(cfg.train.seeds[0]);
    let arm = ckpt.meta.get("arm").cloned().unwrap_or_else(|| "eval".into());
    let id = cfg.eval_ranges();
    let mut reports = vec![eval::evaluate(
        &agent,
        &cfg.env,
        &id,
        cfg.eval.n_episodes,
        seed,
        &arm,
        Distribution::InDistribution,
    )?];
    if args.ood {
        let ood = eval::extend_ranges(&id, cfg.eval.ood_pct, &cfg.env.limits());
        reports.push(eval::evaluate(
            &agent,
            &cfg.env,
            &ood,
            cfg.eval.n_episodes,
            seed,
            &arm,
            Distribution::OutOfDistribution,
        )?);
    }
    let root = output_root(args.out.as_deref());
    fs::create_dir_all(&root).map_err(io_err(&root))?;
    eval::append_reports(&root, &reports).map_err(io_err(&root))?;
    Ok(reports)
}

/// Worst relative errors found at one seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckRow {
    pub seed: u64,
    pub actor: f64,
    pub critic: f64,
    pub alpha: f64,
}

impl GradCheckRow {
    pub fn max(&self) -> f64 {
        self.actor.max(self.critic).max(self.alpha)
    }
}

/// Finite-difference check of the critic, actor and temperature losses on
/// a small network and random batch at each seed. `fault` corrupts the
/// actor's backward pass.
pub fn gradcheck_rows(seeds: &[u64], fault: Option<BackwardFault>) -> Vec<GradCheckRow> {
    seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = SacConfig {
                hidden_width: 16,
                hidden_layers: 2,
                ..SacConfig::default()
            };
            let arch = Architecture::new(OBS_DIM, ACTION_DIM, cfg.hidden());
            let agent = SacAgent::new(arch.clone(), &cfg, &mut rng);
            let n = 4;
            let mut buf = ReplayBuffer::new(n, OBS_DIM, ACTION_DIM);
            for _ in 0..n {
                let o = standard_normal(OBS_DIM, &mut rng);
                let a: Vec<f64> = standard_normal(ACTION_DIM, &mut rng).iter().map(|x| x.tanh()).collect();
                let o2 = standard_normal(OBS_DIM, &mut rng);
                buf.push(&o, &a, standard_normal(1, &mut rng)[0], &o2, false);
            }
            let batch = buf.sample(n, &mut rng);
            let y = standard_normal(n, &mut rng);
            let noise = standard_normal(n * ACTION_DIM, &mut rng);
            let h = 1e-5;

            let critic = grad_check(
                |p| {
                    let (l1, l2, g) = critic_losses(&arch, p, &batch, &y);
                    (l1 + l2, g)
                },
                &agent.params,
                h,
            );
            let actor = grad_check(
                |p| {
                    let (l, _, g) = actor_objective_with_fault(&arch, p, &batch, &noise, 0.2, fault);
                    (l, g)
                },
                &agent.params,
                h,
            );
            let log_probs = standard_normal(n, &mut rng);
            let alpha = grad_check(
                |p| -> (f64, Gradients) { alpha_loss(p, &log_probs, -(ACTION_DIM as f64)) },
                &agent.params,
                h,
            );
            debug_assert!(agent.params.contains(LOG_ALPHA));
            GradCheckRow {
                seed,
                actor: actor.max_rel_error,
                critic: critic.max_rel_error,
                alpha: alpha.max_rel_error,
            }
        })
        .collect()
}

/// Fails when any relative error reaches [`GRADCHECK_TOL`].
pub fn cmd_gradcheck(fault: Option<BackwardFault>) -> Result<Vec<GradCheckRow>, CliError> {
    let rows = gradcheck_rows(&[0, 1, 2], fault);
    let worst = rows.iter().map(GradCheckRow::max).fold(0.0, f64::max);
    if worst >= GRADCHECK_TOL || worst.is_nan() {
        return Err(CliError::GradCheck(worst));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Default)]
pub struct SimArgs {
    pub config: PathBuf,
    pub script: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub steps: usize,
    pub horizon: usize,
    /// The script ran out before the horizon.
    pub ended_early: bool,
    pub trajectory: PathBuf,
}

/// Reads a script of effector velocities (m/s), six per row. A first row
/// that does not parse as numbers is treated as a header.
pub fn read_actions(path: &Path) -> Result<Vec<[f64; ACTION_DIM]>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match vals {
            Ok(v) if v.len() == ACTION_DIM => rows.push(v.try_into().unwrap()),
            Err(_) if i == 0 => continue,
            _ => {
                return Err(CliError::Usage(format!(
                    "{} row {}: expected {ACTION_DIM} numbers",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(rows)
}

/// Replays a scripted action sequence on the first stage's task and writes
/// `trajectory.csv`.
pub fn cmd_simulate(args: &SimArgs) -> Result<SimSummary, CliError> {
    let cfg = load_config(&args.config, &args.overrides)?;
    let actions = read_actions(&args.script)?;
    let seed = args.seed.unwrap_or(cfg.train.seeds[0]);
    let mut rng = sac::stream(seed, 1);
    let task = env::sample_task(&cfg.schedule.stages()[0].ranges, &mut rng);
    let (mut state, _) = env::reset(&cfg.env, &task, seed)?;

    let root = output_root(args.out.as_deref());
    fs::create_dir_all(&root).map_err(io_err(&root))?;
    let path = root.join("trajectory.csv");
    let csv_err = |e: csv::Error| CliError::Io {
        path: path.clone(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    let mut header = vec!["step".to_string(), "block_x".into(), "block_y".into(), "block_theta".into()];
    for i in 0..NUM_EFFECTORS {
        header.push(format!("e{i}_x"));
        header.push(format!("e{i}_y"));
    }
    header.extend(["reward", "fractional_success", "dist_oe", "dist_og"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;

    let row = |state: &env::EnvState, reward: f64| {
        let snap = state.snapshot(&cfg.env);
        let p = state.block.pose;
        let mut r = vec![state.t.to_string(), p.x.to_string(), p.y.to_string(), p.theta.to_string()];
        for e in &state.effectors {
            r.push(e.pos.x.to_string());
            r.push(e.pos.y.to_string());
        }
        r.push(reward.to_string());
        r.push(state.fractional_success().to_string());
        r.push(crate::reward::dist_oe_with(&snap, cfg.reward.oe_aggregate).to_string());
        r.push(crate::reward::dist_og(&snap).to_string());
        r
    };
    w.write_record(row(&state, 0.0)).map_err(csv_err)?;
    let mut steps = 0;
    for a in actions.iter().take(cfg.env.horizon) {
        let out = env::step(&state, a, &cfg.env, &cfg.reward)?;
        state = out.state;
        w.write_record(row(&state, out.reward)).map_err(csv_err)?;
        steps += 1;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(SimSummary {
        steps,
        horizon: cfg.env.horizon,
        ended_early: steps < cfg.env.horizon,
        trajectory: path,
    })
}

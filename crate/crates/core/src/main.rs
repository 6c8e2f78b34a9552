use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pushcurl::autodiff::BackwardFault;
use pushcurl::cli::{self, CliError, EvalArgs, SimArgs, TrainArgs, TransferArgs};
use pushcurl::transfer::TransferKind;

#[derive(Parser)]
#[command(name = "pushcurl", version, about = "Desk-scale SAC transfer and curriculum experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunOpts {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Run only this seed instead of `train.seeds`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root (default: $PUSHCURL_OUT, else ./runs).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds trained in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Config override, `key=value`; repeatable.
    #[arg(long = "set")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train under the configured curriculum (or a single stage).
    Train(RunOpts),
    /// Train a fixed-task source policy.
    Pretrain(RunOpts),
    /// Transfer a checkpoint into fresh agents, then train.
    Transfer {
        #[command(flatten)]
        run: RunOpts,
        /// whole | policy_only
        #[arg(long)]
        plan: Option<String>,
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Deterministic evaluation of a checkpoint.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Also evaluate on ranges widened by `eval.ood_pct`.
        #[arg(long)]
        ood: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "set")]
        set: Vec<String>,
    },
    /// Finite-difference check of the SAC losses.
    Gradcheck {
        /// Corrupt the tanh backward pass (the check must then fail).
        #[arg(long)]
        corrupt: bool,
    },
    /// Replay a CSV of effector velocities and write trajectory.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "set")]
        set: Vec<String>,
    },
}

fn train_args(o: RunOpts) -> Result<TrainArgs, CliError> {
    Ok(TrainArgs {
        config: o.config,
        seed: o.seed,
        out: o.out,
        jobs: o.jobs,
        overrides: cli::parse_overrides(&o.set)?,
    })
}

fn print_runs(runs: &[cli::RunSummary]) {
    for r in runs {
        println!(
            "seed {}: {} episodes, asymptotic return {:.3}, ID success {:.4} +- {:.4} -> {}",
            r.seed,
            r.curve.len(),
            r.asymptotic_return,
            r.final_eval.mean,
            r.final_eval.std,
            r.dir.display()
        );
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Train(o) => print_runs(&cli::cmd_train(&train_args(o)?)?),
        Cmd::Pretrain(o) => print_runs(&cli::cmd_pretrain(&train_args(o)?)?),
        Cmd::Transfer { run, plan, source } => {
            let plan = match plan {
                Some(p) => Some(
                    TransferKind::from_tag(&p)
                        .ok_or_else(|| CliError::Usage(format!("unknown plan `{p}` (whole | policy_only)")))?,
                ),
                None => None,
            };
            let args = TransferArgs {
                train: train_args(run)?,
                plan,
                source,
            };
            print_runs(&cli::cmd_transfer_train(&args)?)
        }
        Cmd::Evaluate { ckpt, config, ood, seed, out, set } => {
            let args = EvalArgs {
                ckpt,
                config,
                ood,
                seed,
                out,
                overrides: cli::parse_overrides(&set)?,
            };
            for r in cli::cmd_evaluate(&args)? {
                println!("{} {} n={} mean={:.4} std={:.4}", r.arm, r.dist, r.n(), r.mean, r.std);
            }
        }
        Cmd::Gradcheck { corrupt } => {
            let fault = corrupt.then_some(BackwardFault::TanhPassThrough);
            let rows = cli::gradcheck_rows(&[0, 1, 2], fault);
            for r in &rows {
                println!("seed {}: actor {:.3e} critic {:.3e} alpha {:.3e}", r.seed, r.actor, r.critic, r.alpha);
            }
            cli::cmd_gradcheck(fault)?;
            println!("ok");
        }
        Cmd::Simulate { config, script, seed, out, set } => {
            let args = SimArgs {
                config,
                script,
                seed,
                out,
                overrides: cli::parse_overrides(&set)?,
            };
            let s = cli::cmd_simulate(&args)?;
            if s.ended_early {
                println!("script ended after {} of {} steps", s.steps, s.horizon);
            }
            println!("{} steps -> {}", s.steps, s.trajectory.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

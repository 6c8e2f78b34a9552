use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Architecture, ReplayBuffer, SacAgent, SacConfig, SacError};
use crate::curriculum::CurriculumSchedule;
use crate::env::{self, EnvConfig, RewardSpec, ACTION_DIM, OBS_DIM};
use crate::eval::{CurvePoint, LearningCurve};

/// RNG streams derived from the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_TASK: u64 = 1;
const STREAM_ACT: u64 = 2;
const STREAM_UPDATE: u64 = 3;

pub fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Everything a single training run needs.
#[derive(Debug, Clone)]
pub struct TrainSpec {
    pub env: EnvConfig,
    pub reward: RewardSpec,
    pub schedule: CurriculumSchedule,
    pub sac: SacConfig,
    pub total_steps: u64,
    pub seed: u64,
    /// Zero disables checkpoint callbacks.
    pub checkpoint_every: u64,
    pub arm: String,
}

impl TrainSpec {
    pub fn architecture(&self) -> Architecture {
        Architecture::new(OBS_DIM, ACTION_DIM, self.sac.hidden())
    }

    /// The freshly initialized agent a run starts from.
    pub fn initial_agent(&self) -> SacAgent {
        SacAgent::new(self.architecture(), &self.sac, &mut stream(self.seed, STREAM_INIT))
    }
}

/// Hooks invoked by [`train`].
pub trait Observer {
    fn on_episode(&mut self, _point: &CurvePoint) -> Result<(), SacError> {
        Ok(())
    }

    fn on_checkpoint(&mut self, _step: u64, _agent: &SacAgent) -> Result<(), SacError> {
        Ok(())
    }

    /// Called after every env step (and its updates) with the step count so far.
    fn on_step(&mut self, _step: u64, _agent: &SacAgent) -> Result<(), SacError> {
        Ok(())
    }
}

pub struct NoopObserver;

impl Observer for NoopObserver {}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub curve: LearningCurve,
    pub agent: SacAgent,
    pub updates: u64,
}

/// Runs SAC for `spec.total_steps` env steps starting from `agent`
/// (or [`TrainSpec::initial_agent`]). Tasks are resampled from the active
/// curriculum stage at every episode boundary; the trailing partial episode
/// is not recorded.
pub fn train(spec: &TrainSpec, agent: Option<SacAgent>, observer: &mut dyn Observer) -> Result<TrainOutcome, SacError> {
    spec.sac.validate()?;
    spec.env.validate()?;
    if let Err(v) = spec.schedule.validate(&spec.env) {
        let msgs: Vec<String> = v.iter().map(|v| v.to_string()).collect();
        return Err(SacError::Config(msgs.join("; ")));
    }
    let mut agent = agent.unwrap_or_else(|| spec.initial_agent());
    let cfg = &spec.sac;
    let mut task_rng = stream(spec.seed, STREAM_TASK);
    let mut act_rng = stream(spec.seed, STREAM_ACT);
    let mut upd_rng = stream(spec.seed, STREAM_UPDATE);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, OBS_DIM, ACTION_DIM);
    let mut curve = LearningCurve::new(spec.seed, spec.arm.clone());

    let mut episode = 0u64;
    let mut stage = spec.schedule.active_stage(0);
    let task = env::sample_task(&spec.schedule.stages()[stage].ranges, &mut task_rng);
    let (mut state, mut obs) = env::reset(&spec.env, &task, spec.seed)?;
    let mut ret = 0.0;
    let mut updates = 0u64;

    for t in 0..spec.total_steps {
        let action: Vec<f64> = if t < cfg.warmup_steps {
            (0..ACTION_DIM).map(|_| act_rng.gen_range(-1.0..1.0)).collect()
        } else {
            agent.sample_action(&obs, &mut act_rng)
        };
        let scaled: Vec<f64> = action.iter().map(|a| a * spec.env.v_max).collect();
        let out = env::step(&state, &scaled, &spec.env, &spec.reward)?;
        buffer.push(&obs, &action, out.reward, &out.obs, out.done);
        ret += out.reward;
        let step = t + 1;

        if t >= cfg.warmup_steps {
            for _ in 0..cfg.updates_per_step {
                let batch = buffer.sample(cfg.batch, &mut upd_rng);
                agent.update(&batch, cfg, &mut upd_rng).map_err(|e| match e {
                    SacError::NonFinite { loss, .. } => SacError::NonFinite { step, loss },
                    e => e,
                })?;
                updates += 1;
            }
        }

        if out.done {
            let point = CurvePoint {
                step,
                episode,
                ret,
                success: out.info.fractional_success,
                stage,
            };
            curve.points.push(point);
            observer.on_episode(&point)?;
            episode += 1;
            ret = 0.0;
            stage = spec.schedule.active_stage(step);
            let task = env::sample_task(&spec.schedule.stages()[stage].ranges, &mut task_rng);
            let (s, o) = env::reset(&spec.env, &task, spec.seed.wrapping_add(episode))?;
            state = s;
            obs = o;
        } else {
            state = out.state;
            obs = out.obs;
        }

        if spec.checkpoint_every > 0 && step % spec.checkpoint_every == 0 {
            observer.on_checkpoint(step, &agent)?;
        }
        observer.on_step(step, &agent)?;
    }
    Ok(TrainOutcome { curve, agent, updates })
}

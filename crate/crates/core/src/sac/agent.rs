use rand::Rng;
use rand_distr::StandardNormal;

use super::{Batch, SacConfig, SacError};
use crate::autodiff::{
    adam_step, tanh_gaussian_sample, BackwardFault, tanh_gaussian_sample_values, Activation, AdamState, Gradients, Mlp, ParamSet,
    Tape, Tensor,
};

pub const ACTOR: &str = "actor";
pub const CRITIC1: &str = "critic1";
pub const CRITIC2: &str = "critic2";
pub const TARGET1: &str = "target1";
pub const TARGET2: &str = "target2";
pub const LOG_ALPHA: &str = "log_alpha";

/// Network shapes shared by every agent that can exchange parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub obs_dim: usize,
    pub action_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    pub fn new(obs_dim: usize, action_dim: usize, hidden: Vec<usize>) -> Self {
        Self {
            obs_dim,
            action_dim,
            hidden,
            activation: Activation::Relu,
        }
    }

    /// Observation to (mean, log_std) pairs.
    pub fn actor(&self) -> Mlp {
        let mut w = vec![self.obs_dim];
        w.extend(&self.hidden);
        w.push(2 * self.action_dim);
        Mlp::new(w, self.activation, Activation::Identity)
    }

    /// (observation, action) to a scalar Q value.
    pub fn critic(&self) -> Mlp {
        let mut w = vec![self.obs_dim + self.action_dim];
        w.extend(&self.hidden);
        w.push(1);
        Mlp::new(w, self.activation, Activation::Identity)
    }

    fn join(widths: &[usize]) -> String {
        widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
    }

    /// Text form stored in checkpoints.
    pub fn descriptor(&self) -> String {
        format!(
            "obs_dim={}\naction_dim={}\nactor={}\ncritic={}\nhidden_activation={}\noutput_activation={}\n",
            self.obs_dim,
            self.action_dim,
            Self::join(&self.actor().widths),
            Self::join(&self.critic().widths),
            self.activation.tag(),
            Activation::Identity.tag(),
        )
    }

    pub fn parse_descriptor(text: &str) -> Result<Self, String> {
        let mut obs_dim = None;
        let mut action_dim = None;
        let mut actor: Option<Vec<usize>> = None;
        let mut activation = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| format!("malformed descriptor line `{line}`"))?;
            let widths = |v: &str| -> Result<Vec<usize>, String> {
                v.split(',').map(|w| w.trim().parse().map_err(|_| format!("bad width in `{line}`"))).collect()
            };
            match k.trim() {
                "obs_dim" => obs_dim = Some(v.trim().parse().map_err(|_| format!("bad obs_dim `{v}`"))?),
                "action_dim" => action_dim = Some(v.trim().parse().map_err(|_| format!("bad action_dim `{v}`"))?),
                "actor" => actor = Some(widths(v)?),
                "critic" => {
                    widths(v)?;
                }
                "hidden_activation" => {
                    activation = Some(Activation::from_tag(v.trim()).ok_or_else(|| format!("unknown activation `{v}`"))?)
                }
                "output_activation" => {}
                other => return Err(format!("unknown descriptor key `{other}`")),
            }
        }
        let actor = actor.ok_or("descriptor lacks actor widths")?;
        if actor.len() < 2 {
            return Err("actor needs at least two widths".into());
        }
        let arch = Self {
            obs_dim: obs_dim.ok_or("descriptor lacks obs_dim")?,
            action_dim: action_dim.ok_or("descriptor lacks action_dim")?,
            hidden: actor[1..actor.len() - 1].to_vec(),
            activation: activation.unwrap_or(Activation::Relu),
        };
        if arch.descriptor() != text {
            return Err("descriptor is not in canonical form".into());
        }
        Ok(arch)
    }

    /// Field-by-field differences, empty when the two match.
    pub fn diff(&self, other: &Architecture) -> Vec<String> {
        let mut d = Vec::new();
        if self.obs_dim != other.obs_dim {
            d.push(format!("obs_dim: {} vs {}", self.obs_dim, other.obs_dim));
        }
        if self.action_dim != other.action_dim {
            d.push(format!("action_dim: {} vs {}", self.action_dim, other.action_dim));
        }
        if self.hidden != other.hidden {
            d.push(format!("hidden widths: {:?} vs {:?}", self.hidden, other.hidden));
        }
        if self.activation != other.activation {
            d.push(format!("activation: {} vs {}", self.activation.tag(), other.activation.tag()));
        }
        d
    }
}

/// Adam state per parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizers {
    pub actor: AdamState,
    /// Both online critics; their gradients never overlap.
    pub critic: AdamState,
    pub alpha: AdamState,
}

impl Optimizers {
    pub fn new(lr: f64) -> Self {
        Self {
            actor: AdamState::new(lr),
            critic: AdamState::new(lr),
            alpha: AdamState::new(lr),
        }
    }

    pub fn reset(&mut self) {
        self.actor.reset();
        self.critic.reset();
        self.alpha.reset();
    }

    pub fn groups(&self) -> [(&'static str, &AdamState); 3] {
        [("actor", &self.actor), ("critic", &self.critic), ("alpha", &self.alpha)]
    }

    pub fn groups_mut(&mut self) -> [(&'static str, &mut AdamState); 3] {
        [("actor", &mut self.actor), ("critic", &mut self.critic), ("alpha", &mut self.alpha)]
    }
}

/// Soft actor-critic learner state.
#[derive(Debug, Clone, PartialEq)]
pub struct SacAgent {
    pub arch: Architecture,
    pub params: ParamSet,
    pub opt: Optimizers,
}

/// Statistics of one update round.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
    pub mean_log_prob: f64,
}

impl SacAgent {
    /// Fresh agent: random actor and critics, targets copied from critics.
    pub fn new<R: Rng + ?Sized>(arch: Architecture, cfg: &SacConfig, rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        arch.actor().init(ACTOR, &mut params, rng);
        let critic = arch.critic();
        critic.init(CRITIC1, &mut params, rng);
        critic.init(CRITIC2, &mut params, rng);
        critic.init(TARGET1, &mut params, rng);
        critic.init(TARGET2, &mut params, rng);
        params.insert(LOG_ALPHA, Tensor::scalar(cfg.alpha.max(f64::MIN_POSITIVE).ln()));
        let mut agent = Self {
            arch,
            params,
            opt: Optimizers::new(cfg.lr),
        };
        agent.sync_targets();
        agent
    }

    /// Hard copy of both critics onto their targets.
    pub fn sync_targets(&mut self) {
        self.params.copy_group(CRITIC1, TARGET1).expect("critic/target layout");
        self.params.copy_group(CRITIC2, TARGET2).expect("critic/target layout");
    }

    pub fn alpha(&self, cfg: &SacConfig) -> f64 {
        if cfg.auto_alpha {
            self.params.get(LOG_ALPHA).map(|t| t.data()[0].exp()).unwrap_or(cfg.alpha)
        } else {
            cfg.alpha
        }
    }

    /// Policy head output for a single observation: (mean, log_std).
    pub fn policy_head(&self, obs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let out = self.arch.actor().predict(&self.params, ACTOR, 1, obs);
        let d = self.arch.action_dim;
        (out[..d].to_vec(), out[d..].to_vec())
    }

    /// Stochastic action in (-1, 1)^d.
    pub fn sample_action<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Vec<f64> {
        let (mean, log_std) = self.policy_head(obs);
        let noise: Vec<f64> = (0..mean.len()).map(|_| rng.sample(StandardNormal)).collect();
        tanh_gaussian_sample_values(&mean, &log_std, &noise).0
    }

    /// `tanh(mean)`, the evaluation-mode action.
    pub fn deterministic_action(&self, obs: &[f64]) -> Vec<f64> {
        let (mean, _) = self.policy_head(obs);
        mean.iter().map(|m| m.tanh()).collect()
    }

    /// Soft clipped double-Q targets with fresh policy noise.
    pub fn compute_targets<R: Rng + ?Sized>(&self, batch: &Batch, cfg: &SacConfig, rng: &mut R) -> Vec<f64> {
        let noise = standard_normal(batch.len() * self.arch.action_dim, rng);
        compute_targets_with_noise(&self.arch, &self.params, batch, cfg.gamma, self.alpha(cfg), &noise)
    }

    /// One Adam step on each online critic towards targets `y`.
    pub fn critic_update(&mut self, batch: &Batch, y: &[f64]) -> (f64, f64) {
        let (l1, l2, grads) = critic_losses(&self.arch, &self.params, batch, y);
        adam_step(&mut self.params, &grads, &mut self.opt.critic);
        (l1, l2)
    }

    /// One Adam step on the actor. Returns the loss and the detached
    /// per-sample log-probabilities of the reparameterized actions.
    pub fn actor_update<R: Rng + ?Sized>(&mut self, batch: &Batch, cfg: &SacConfig, rng: &mut R) -> (f64, Vec<f64>) {
        let noise = standard_normal(batch.len() * self.arch.action_dim, rng);
        let (loss, log_probs, grads) = actor_objective(&self.arch, &self.params, batch, &noise, self.alpha(cfg));
        adam_step(&mut self.params, &grads, &mut self.opt.actor);
        (loss, log_probs)
    }

    /// Temperature step towards the target entropy `-action_dim`. No-op
    /// when auto-tuning is off.
    pub fn alpha_update(&mut self, log_probs: &[f64], cfg: &SacConfig) -> f64 {
        if cfg.auto_alpha {
            let target = -(self.arch.action_dim as f64);
            let (_, grads) = alpha_loss(&self.params, log_probs, target);
            adam_step(&mut self.params, &grads, &mut self.opt.alpha);
        }
        self.alpha(cfg)
    }

    pub fn polyak_update(&mut self, tau: f64) {
        polyak(&mut self.params, tau);
    }

    /// Full update round: critics, actor, temperature, targets.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &Batch, cfg: &SacConfig, rng: &mut R) -> Result<UpdateStats, SacError> {
        let y = self.compute_targets(batch, cfg, rng);
        let (c1, c2) = self.critic_update(batch, &y);
        let (actor_loss, log_probs) = self.actor_update(batch, cfg, rng);
        let alpha = self.alpha_update(&log_probs, cfg);
        self.polyak_update(cfg.tau);
        let stats = UpdateStats {
            critic1_loss: c1,
            critic2_loss: c2,
            actor_loss,
            alpha,
            mean_log_prob: log_probs.iter().sum::<f64>() / log_probs.len().max(1) as f64,
        };
        for (name, v) in [("critic1", c1), ("critic2", c2), ("actor", actor_loss), ("alpha", alpha)] {
            if !v.is_finite() {
                return Err(SacError::NonFinite { step: 0, loss: name });
            }
        }
        Ok(stats)
    }
}

pub fn standard_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `r + γ (1 - done) (min(q1, q2) - α log π)`.
pub fn soft_target(reward: f64, done: f64, gamma: f64, q1: f64, q2: f64, alpha: f64, log_prob: f64) -> f64 {
    reward + gamma * (1.0 - done) * (q1.min(q2) - alpha * log_prob)
}

pub fn compute_targets_with_noise(
    arch: &Architecture,
    params: &ParamSet,
    batch: &Batch,
    gamma: f64,
    alpha: f64,
    noise: &[f64],
) -> Vec<f64> {
    let n = batch.len();
    let d = arch.action_dim;
    let mut tape = Tape::new();
    let s2 = tape.constant(n, arch.obs_dim, batch.next_obs.clone());
    let head = arch.actor().forward(&mut tape, params, ACTOR, s2, false);
    let mean = tape.slice_cols(head, 0, d);
    let log_std = tape.slice_cols(head, d, d);
    let (a2, logp) = tanh_gaussian_sample(&mut tape, mean, log_std, noise);
    let sa = tape.concat_cols(s2, a2);
    let critic = arch.critic();
    let q1 = critic.forward(&mut tape, params, TARGET1, sa, false);
    let q2 = critic.forward(&mut tape, params, TARGET2, sa, false);
    let (q1, q2, logp) = (tape.value(q1), tape.value(q2), tape.value(logp));
    (0..n)
        .map(|i| soft_target(batch.rewards[i], batch.dones[i], gamma, q1[i], q2[i], alpha, logp[i]))
        .collect()
}

/// Mean squared errors of both online critics against `y`, with gradients
/// for `critic1.*` and `critic2.*`.
pub fn critic_losses(arch: &Architecture, params: &ParamSet, batch: &Batch, y: &[f64]) -> (f64, f64, Gradients) {
    let n = batch.len();
    let mut tape = Tape::new();
    let s = tape.constant(n, arch.obs_dim, batch.obs.clone());
    let a = tape.constant(n, arch.action_dim, batch.actions.clone());
    let sa = tape.concat_cols(s, a);
    let target = tape.constant(n, 1, y.to_vec());
    let critic = arch.critic();
    let mut losses = [0.0; 2];
    let mut total = None;
    for (k, prefix) in [CRITIC1, CRITIC2].into_iter().enumerate() {
        let q = critic.forward(&mut tape, params, prefix, sa, true);
        let err = tape.sub(q, target);
        let sq = tape.square(err);
        let l = tape.mean(sq);
        losses[k] = tape.scalar_value(l);
        total = Some(match total {
            None => l,
            Some(t) => tape.add(t, l),
        });
    }
    let grads = tape.backward(total.unwrap());
    (losses[0], losses[1], grads)
}

/// `mean(α log π(a|s) - min(Q1, Q2)(s, a))` with reparameterized `a`;
/// gradients for `actor.*` only.
pub fn actor_objective(
    arch: &Architecture,
    params: &ParamSet,
    batch: &Batch,
    noise: &[f64],
    alpha: f64,
) -> (f64, Vec<f64>, Gradients) {
    actor_objective_with_fault(arch, params, batch, noise, alpha, None)
}

/// [`actor_objective`] on a tape with an optional injected backward fault.
pub fn actor_objective_with_fault(
    arch: &Architecture,
    params: &ParamSet,
    batch: &Batch,
    noise: &[f64],
    alpha: f64,
    fault: Option<BackwardFault>,
) -> (f64, Vec<f64>, Gradients) {
    let n = batch.len();
    let d = arch.action_dim;
    let mut tape = Tape::new();
    if let Some(f) = fault {
        tape.inject_fault(f);
    }
    let s = tape.constant(n, arch.obs_dim, batch.obs.clone());
    let head = arch.actor().forward(&mut tape, params, ACTOR, s, true);
    let mean = tape.slice_cols(head, 0, d);
    let log_std = tape.slice_cols(head, d, d);
    let (a, logp) = tanh_gaussian_sample(&mut tape, mean, log_std, noise);
    let sa = tape.concat_cols(s, a);
    let critic = arch.critic();
    let q1 = critic.forward(&mut tape, params, CRITIC1, sa, false);
    let q2 = critic.forward(&mut tape, params, CRITIC2, sa, false);
    let q = tape.minimum(q1, q2);
    let ent = tape.scale(logp, alpha);
    let obj = tape.sub(ent, q);
    let loss = tape.mean(obj);
    let grads = tape.backward(loss);
    (tape.scalar_value(loss), tape.value(logp).to_vec(), grads)
}

/// `-log_alpha * mean(log π + target_entropy)` with detached log-probs.
pub fn alpha_loss(params: &ParamSet, log_probs: &[f64], target_entropy: f64) -> (f64, Gradients) {
    let log_alpha = params.get(LOG_ALPHA).expect("log_alpha parameter");
    let mut tape = Tape::new();
    let la = tape.param(LOG_ALPHA, log_alpha);
    let shifted: Vec<f64> = log_probs.iter().map(|l| l + target_entropy).collect();
    let lp = tape.constant(1, shifted.len(), shifted);
    let prod = tape.mul_by_scalar_var(lp, la);
    let m = tape.mean(prod);
    let loss = tape.neg(m);
    (tape.scalar_value(loss), tape.backward(loss))
}

/// `target ← τ·critic + (1-τ)·target` for both critic/target pairs.
pub fn polyak(params: &mut ParamSet, tau: f64) {
    for (src, dst) in [(CRITIC1, TARGET1), (CRITIC2, TARGET2)] {
        let names: Vec<String> = params.names_with_prefix(src).cloned().collect();
        for name in names {
            let target_name = format!("{dst}{}", &name[src.len()..]);
            let online = params.get(&name).unwrap().data().to_vec();
            let t = params.get_mut(&target_name).expect("target tensor");
            for (tv, ov) in t.data_mut().iter_mut().zip(online) {
                *tv = tau * ov + (1.0 - tau) * *tv;
            }
        }
    }
}

//! Soft actor-critic with twin critics, polyak-averaged targets and a
//! uniform replay buffer.

mod agent;
mod buffer;
mod train;

pub use agent::{
    actor_objective, actor_objective_with_fault, alpha_loss, compute_targets_with_noise, critic_losses, polyak, soft_target, standard_normal,
    Architecture, Optimizers, SacAgent, UpdateStats, ACTOR, CRITIC1, CRITIC2, LOG_ALPHA, TARGET1, TARGET2,
};
pub use buffer::{Batch, ReplayBuffer, Transition};
pub use train::{stream, train, NoopObserver, Observer, TrainOutcome, TrainSpec};

use crate::env::EnvError;

#[derive(Debug, thiserror::Error)]
pub enum SacError {
    #[error("non-finite {loss} loss at step {step}")]
    NonFinite { step: u64, loss: &'static str },
    #[error("invalid SAC config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("callback failed: {0}")]
    Callback(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SacConfig {
    pub gamma: f64,
    pub tau: f64,
    /// Fixed temperature, and the starting value when auto-tuned.
    pub alpha: f64,
    pub auto_alpha: bool,
    pub lr: f64,
    pub batch: usize,
    pub warmup_steps: u64,
    pub updates_per_step: usize,
    pub buffer_capacity: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            gamma: 0.98,
            tau: 0.005,
            alpha: 0.2,
            auto_alpha: false,
            lr: 3e-4,
            batch: 256,
            warmup_steps: 1000,
            updates_per_step: 1,
            buffer_capacity: 100_000,
            hidden_width: 128,
            hidden_layers: 2,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<(), SacError> {
        let err = |m: &str| Err(SacError::Config(m.into()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return err("gamma must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return err("tau must lie in (0, 1]");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return err("alpha must be non-negative");
        }
        if self.auto_alpha && self.alpha == 0.0 {
            return err("auto_alpha needs a positive starting alpha");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return err("lr must be positive");
        }
        if self.batch == 0 || self.buffer_capacity == 0 || self.hidden_width == 0 {
            return err("batch, buffer_capacity and hidden_width must be positive");
        }
        Ok(())
    }

    pub fn hidden(&self) -> Vec<usize> {
        vec![self.hidden_width; self.hidden_layers]
    }
}

#[cfg(test)]
mod tests;

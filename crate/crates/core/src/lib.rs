//! Desk-scale reinforcement-learning laboratory: a deterministic 2D
//! three-effector pushing environment, a from-scratch soft actor-critic
//! learner, checkpoint-based transfer, staged curricula and an evaluation
//! harness.

pub mod autodiff;
pub mod env;
pub mod geom;
pub mod reward;
pub mod curriculum;
pub mod eval;
pub mod sac;
pub mod config;
pub mod transfer;
pub mod cli;

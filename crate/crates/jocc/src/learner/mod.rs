//! From-scratch differentiable function approximators and the two learning
//! algorithms used by the harness: an on-policy policy-gradient learner with
//! a learned state-value baseline (continuous control actions) and a
//! replay-based Q-learner with a target network (discrete radio actions).
//!
//! Everything is plain `f64` on `Vec` storage, updated by stochastic
//! gradient with momentum and global gradient-norm clipping. All updates are
//! deterministic given (parameters, batch, config); the only randomness is
//! what callers draw from their own [`crate::timegrid::RngStream`]s.

mod checkpoint;
mod mlp;
mod optimizer;
mod policy;
mod qlearn;
mod replay;

pub use checkpoint::{file_sha256, load_checkpoint, save_checkpoint, CheckpointMeta};
pub use mlp::Mlp;
pub use optimizer::SgdMomentum;
pub use policy::{ActorCritic, GaussianPolicy, PgSample};
pub use qlearn::{epsilon_greedy, greedy_action, QLearner, QTransition};
pub use replay::ReplayBuffer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear schedule from `start` down to `end` over `decay_steps`, flat
/// afterwards. Used for the discrete-action exploration rate and the
/// Gaussian policy's action standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule {
            start: value,
            end: value,
            decay_steps: 1,
        }
    }

    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + frac * (self.end - self.start)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.start < self.end {
            return Err(Error::RejectedInput(format!(
                "{name} schedule must be nonincreasing (start {} < end {})",
                self.start, self.end
            )));
        }
        if self.decay_steps == 0 {
            return Err(Error::RejectedInput(format!(
                "{name} schedule needs decay_steps >= 1"
            )));
        }
        Ok(())
    }
}

/// Hyperparameters for both learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub q_lr: f64,
    pub momentum: f64,
    pub grad_clip_norm: f64,
    pub batch_size: usize,
    pub target_sync_period: u64,
    pub hidden_sizes: Vec<usize>,
    /// Exploration rate schedule for the discrete Q-policy, indexed by
    /// update count.
    pub epsilon: Schedule,
    /// Gaussian action standard deviation schedule for the control policy,
    /// indexed by policy-gradient update count.
    pub action_std: Schedule,
    /// Number of episodes gathered per policy-gradient update.
    pub episodes_per_update: usize,
    /// Maximum policy-gradient updates per control training phase.
    pub max_control_updates: u64,
    /// Maximum Q-learning episodes per communication training phase.
    pub max_comm_episodes: u64,
    /// Q-updates performed after each collected communication interval.
    pub q_updates_per_interval: u64,
    /// Replay capacity for the communication learner.
    pub replay_capacity: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            actor_lr: 3e-3,
            critic_lr: 1e-2,
            q_lr: 5e-3,
            momentum: 0.9,
            grad_clip_norm: 1.0,
            batch_size: 64,
            target_sync_period: 200,
            hidden_sizes: vec![64, 64],
            epsilon: Schedule {
                start: 1.0,
                end: 0.05,
                decay_steps: 30_000,
            },
            action_std: Schedule {
                start: 0.5,
                end: 0.08,
                decay_steps: 1_500,
            },
            episodes_per_update: 8,
            max_control_updates: 2_500,
            max_comm_episodes: 250,
            q_updates_per_interval: 2,
            replay_capacity: 200_000,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("q_lr", self.q_lr),
            ("grad_clip_norm", self.grad_clip_norm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::RejectedInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::RejectedInput(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 || self.episodes_per_update == 0 {
            return Err(Error::RejectedInput(
                "batch_size and episodes_per_update must be positive".into(),
            ));
        }
        if self.target_sync_period == 0 {
            return Err(Error::RejectedInput(
                "target_sync_period must be positive".into(),
            ));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::RejectedInput(
                "hidden_sizes must be nonempty and positive".into(),
            ));
        }
        self.epsilon.validate("epsilon")?;
        self.action_std.validate("action_std")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_interpolates_then_flattens() {
        let s = Schedule {
            start: 1.0,
            end: 0.0,
            decay_steps: 10,
        };
        assert_eq!(s.value(0), 1.0);
        assert!((s.value(5) - 0.5).abs() < 1e-12);
        assert_eq!(s.value(10), 0.0);
        assert_eq!(s.value(1_000), 0.0);
    }

    #[test]
    fn config_rejects_increasing_schedules() {
        let mut cfg = LearnerConfig::default();
        cfg.epsilon = Schedule {
            start: 0.1,
            end: 0.9,
            decay_steps: 10,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_config_is_valid() {
        LearnerConfig::default().validate().unwrap();
    }
}

//! Gaussian-head policy network and the on-policy actor-critic update.

use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, Mlp, SgdMomentum};
use crate::timegrid::RngStream;

/// Policy with a state-dependent mean and a scheduled (state-independent)
/// standard deviation supplied at sampling time.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub net: Mlp,
}

impl GaussianPolicy {
    pub fn new(obs_dim: usize, act_dim: usize, hidden: &[usize], stream: &mut RngStream) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(act_dim);
        GaussianPolicy {
            net: Mlp::new(&sizes, stream),
        }
    }

    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(obs)
    }

    pub fn sample(&self, obs: &[f64], std: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
        let mut mu = self.net.forward(obs)?;
        for m in &mut mu {
            *m += std * rng.normal();
        }
        Ok(mu)
    }
}

/// One on-policy sample for the policy-gradient update. `std` is the action
/// standard deviation that was in force when `action` was drawn, and `ret`
/// the discounted return-to-go used as the critic regression target.
#[derive(Debug, Clone)]
pub struct PgSample {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub advantage: f64,
    pub ret: f64,
    pub std: f64,
}

/// Actor with a learned state-value baseline, sharing one optimizer pair.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub actor: GaussianPolicy,
    pub critic: Mlp,
    actor_opt: SgdMomentum,
    critic_opt: SgdMomentum,
    pub updates: u64,
}

impl ActorCritic {
    pub fn new(obs_dim: usize, act_dim: usize, cfg: &LearnerConfig, stream: &mut RngStream) -> Self {
        let actor = GaussianPolicy::new(obs_dim, act_dim, &cfg.hidden_sizes, stream);
        let mut critic_sizes = vec![obs_dim];
        critic_sizes.extend_from_slice(&cfg.hidden_sizes);
        critic_sizes.push(1);
        let critic = Mlp::new(&critic_sizes, stream);
        let actor_opt = SgdMomentum::new(
            cfg.actor_lr,
            cfg.momentum,
            cfg.grad_clip_norm,
            actor.net.param_count(),
        );
        let critic_opt = SgdMomentum::new(
            cfg.critic_lr,
            cfg.momentum,
            cfg.grad_clip_norm,
            critic.param_count(),
        );
        ActorCritic {
            actor,
            critic,
            actor_opt,
            critic_opt,
            updates: 0,
        }
    }

    /// Rebuilds the optimizer state, e.g. after loading a checkpoint.
    pub fn reset_optimizers(&mut self) {
        self.actor_opt.reset();
        self.critic_opt.reset();
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        self.critic.forward_scalar(obs)
    }

    /// One ascent step on `E[advantage * grad log pi(a|s)]` for the actor
    /// and one mean-squared-error descent step on the returns for the
    /// critic. Both gradients are batch means.
    pub fn policy_gradient_update(&mut self, batch: &[PgSample]) -> Result<PgStats> {
        if batch.is_empty() {
            return Err(Error::RejectedInput("empty policy-gradient batch".into()));
        }
        for s in batch {
            if !s.advantage.is_finite() || !s.ret.is_finite() {
                return Err(Error::TrainingFault(format!(
                    "non-finite sample in batch: advantage {}, return {}",
                    s.advantage, s.ret
                )));
            }
        }
        let n = batch.len() as f64;

        let mut actor_grad = vec![0.0; self.actor.net.param_count()];
        let mut critic_grad = vec![0.0; self.critic.param_count()];
        let mut actor_objective = 0.0;
        let mut critic_loss = 0.0;
        for s in batch {
            let mu = self.actor.net.forward(&s.obs)?;
            let var = s.std * s.std;
            // d(-adv*logpi)/dmu = -adv * (a - mu) / var
            let out_grad: Vec<f64> = s
                .action
                .iter()
                .zip(&mu)
                .map(|(a, m)| -s.advantage * (a - m) / var / n)
                .collect();
            self.actor
                .net
                .accumulate_gradient(&s.obs, &out_grad, &mut actor_grad)?;
            let logp: f64 = s
                .action
                .iter()
                .zip(&mu)
                .map(|(a, m)| -0.5 * (a - m) * (a - m) / var)
                .sum();
            actor_objective += s.advantage * logp / n;

            let v = self.critic.forward_scalar(&s.obs)?;
            let err = v - s.ret;
            critic_loss += err * err / n;
            self.critic
                .accumulate_gradient(&s.obs, &[2.0 * err / n], &mut critic_grad)?;
        }
        if !actor_objective.is_finite() || !critic_loss.is_finite() {
            return Err(Error::TrainingFault(format!(
                "non-finite loss (actor objective {actor_objective}, critic loss {critic_loss}) \
                 over batch of {} samples, advantage range [{:.3e}, {:.3e}]",
                batch.len(),
                batch.iter().map(|s| s.advantage).fold(f64::INFINITY, f64::min),
                batch.iter().map(|s| s.advantage).fold(f64::NEG_INFINITY, f64::max),
            )));
        }
        self.actor_opt.step(&mut self.actor.net, &actor_grad)?;
        self.critic_opt.step(&mut self.critic, &critic_grad)?;
        self.updates += 1;
        Ok(PgStats {
            actor_objective,
            critic_loss,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PgStats {
    pub actor_objective: f64,
    pub critic_loss: f64,
}

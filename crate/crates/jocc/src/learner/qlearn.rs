//! Replay-based Q-learning with a periodically synced target network.

use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, Mlp, SgdMomentum};
use crate::timegrid::RngStream;

/// One discrete-action transition.
#[derive(Debug, Clone)]
pub struct QTransition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct QLearner {
    pub q: Mlp,
    pub target: Mlp,
    opt: SgdMomentum,
    sync_period: u64,
    pub updates: u64,
}

/// Index of the maximal output, first maximum on ties.
pub fn greedy_action(net: &Mlp, state: &[f64]) -> Result<usize> {
    let q = net.forward(state)?;
    let mut best = 0;
    for (i, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Greedy action with probability `1 - epsilon`, uniform otherwise.
pub fn epsilon_greedy(net: &Mlp, state: &[f64], epsilon: f64, rng: &mut RngStream) -> Result<usize> {
    let n_actions = net.output_dim();
    if rng.uniform() < epsilon {
        Ok(rng.below(n_actions))
    } else {
        greedy_action(net, state)
    }
}

impl QLearner {
    pub fn new(state_dim: usize, n_actions: usize, cfg: &LearnerConfig, stream: &mut RngStream) -> Self {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(&cfg.hidden_sizes);
        sizes.push(n_actions);
        let q = Mlp::new(&sizes, stream);
        let target = q.clone();
        let opt = SgdMomentum::new(cfg.q_lr, cfg.momentum, cfg.grad_clip_norm, q.param_count());
        QLearner {
            q,
            target,
            opt,
            sync_period: cfg.target_sync_period,
            updates: 0,
        }
    }

    pub fn reset_optimizer(&mut self) {
        self.opt.reset();
    }

    /// One mean-squared-error step toward the one-step targets
    /// `r + gamma * max_a' target(s', a')`, bootstrapping with 0 at
    /// terminal transitions. The target network re-syncs every
    /// `target_sync_period` updates.
    pub fn q_update(&mut self, batch: &[QTransition], gamma: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::RejectedInput("empty q-learning batch".into()));
        }
        let n_actions = self.q.output_dim();
        let n = batch.len() as f64;
        let mut grad = vec![0.0; self.q.param_count()];
        let mut loss = 0.0;
        for tr in batch {
            if tr.action >= n_actions {
                return Err(Error::RejectedInput(format!(
                    "action index {} out of range 0..{n_actions}",
                    tr.action
                )));
            }
            let target = if tr.terminal {
                tr.reward
            } else {
                let next_q = self.target.forward(&tr.next_state)?;
                let best = next_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                tr.reward + gamma * best
            };
            let q = self.q.forward(&tr.state)?;
            let err = q[tr.action] - target;
            loss += err * err / n;
            let mut out_grad = vec![0.0; n_actions];
            out_grad[tr.action] = 2.0 * err / n;
            self.q
                .accumulate_gradient(&tr.state, &out_grad, &mut grad)?;
        }
        if !loss.is_finite() {
            return Err(Error::TrainingFault(format!(
                "non-finite q loss over batch of {}",
                batch.len()
            )));
        }
        self.opt.step(&mut self.q, &grad)?;
        self.updates += 1;
        if self.updates % self.sync_period == 0 {
            self.target.copy_params_from(&self.q);
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::ReplayBuffer;
    use crate::tabular::{four_state_corridor, two_context_bandit, TabularMdp};
    use crate::timegrid::derive_stream;

    fn cfg() -> LearnerConfig {
        LearnerConfig {
            hidden_sizes: vec![32],
            q_lr: 0.05,
            target_sync_period: 100,
            ..LearnerConfig::default()
        }
    }

    #[test]
    fn terminal_update_moves_toward_reward() {
        let mut stream = derive_stream(4, 0);
        let mut learner = QLearner::new(2, 2, &cfg(), &mut stream);
        let state = vec![1.0, 0.0];
        let before = learner.q.forward(&state).unwrap()[0];
        let tr = QTransition {
            state: state.clone(),
            action: 0,
            reward: 1.0,
            next_state: vec![0.0, 1.0],
            terminal: true,
        };
        for _ in 0..50 {
            learner.q_update(&[tr.clone()], 0.9).unwrap();
        }
        let after = learner.q.forward(&state).unwrap()[0];
        assert!(
            (after - 1.0).abs() < (before - 1.0).abs(),
            "q did not move toward 1: {before} -> {after}"
        );
    }

    #[test]
    fn gamma_zero_regresses_immediate_rewards() {
        let mut stream = derive_stream(4, 1);
        let mut learner = QLearner::new(2, 2, &cfg(), &mut stream);
        let batch = vec![
            QTransition {
                state: vec![1.0, 0.0],
                action: 0,
                reward: 0.7,
                next_state: vec![0.0, 1.0],
                terminal: false,
            },
            QTransition {
                state: vec![0.0, 1.0],
                action: 1,
                reward: -0.3,
                next_state: vec![1.0, 0.0],
                terminal: false,
            },
        ];
        for _ in 0..4000 {
            learner.q_update(&batch, 0.0).unwrap();
        }
        let q0 = learner.q.forward(&[1.0, 0.0]).unwrap()[0];
        let q1 = learner.q.forward(&[0.0, 1.0]).unwrap()[1];
        assert!((q0 - 0.7).abs() < 0.02, "q0 {q0}");
        assert!((q1 + 0.3).abs() < 0.02, "q1 {q1}");
    }

    #[test]
    fn corridor_greedy_policy_matches_value_iteration() {
        let mdp = four_state_corridor();
        let exact = mdp.value_iteration(1e-13);
        let optimal = TabularMdp::greedy_policy(&exact.q);

        let mut stream = derive_stream(4, 2);
        let mut learner = QLearner::new(4, 2, &cfg(), &mut stream);
        let mut replay = ReplayBuffer::new(4096);
        let mut rng = derive_stream(4, 3);
        // Exploring starts over all (state, action) pairs.
        for _ in 0..2000 {
            for s in 0..3 {
                for a in 0..2 {
                    let &(_, next, reward) = &mdp.transitions[s][a][0];
                    replay.push(QTransition {
                        state: mdp.one_hot(s),
                        action: a,
                        reward,
                        next_state: mdp.one_hot(next),
                        terminal: mdp.terminal[next],
                    });
                }
            }
        }
        for _ in 0..20_000 {
            let batch = replay.sample(32, &mut rng);
            learner.q_update(&batch, mdp.gamma).unwrap();
        }
        for s in 0..3 {
            let greedy = greedy_action(&learner.q, &mdp.one_hot(s)).unwrap();
            assert_eq!(
                greedy, optimal[s],
                "state {s}: learned {greedy}, optimal {}",
                optimal[s]
            );
        }
    }

    /// With gamma = 0 the learner must converge to per-context argmax of
    /// expected reward on the 2-context, 3-action bandit.
    #[test]
    fn contextual_bandit_argmax() {
        let mdp = two_context_bandit();
        let mut stream = derive_stream(4, 4);
        let mut learner = QLearner::new(3, 3, &cfg(), &mut stream);
        let mut replay = ReplayBuffer::new(8192);
        let mut rng = derive_stream(4, 5);
        for _ in 0..3000 {
            for s in 0..2 {
                for a in 0..3 {
                    let triples = &mdp.transitions[s][a];
                    let pick = if rng.uniform() < 0.5 { 0 } else { 1 };
                    let (_, next, reward) = triples[pick];
                    replay.push(QTransition {
                        state: mdp.one_hot(s),
                        action: a,
                        reward,
                        next_state: mdp.one_hot(next),
                        terminal: true,
                    });
                }
            }
        }
        for _ in 0..8000 {
            let batch = replay.sample(32, &mut rng);
            learner.q_update(&batch, 0.0).unwrap();
        }
        assert_eq!(greedy_action(&learner.q, &mdp.one_hot(0)).unwrap(), 1);
        assert_eq!(greedy_action(&learner.q, &mdp.one_hot(1)).unwrap(), 0);
    }
}

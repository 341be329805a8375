//! Small tabular MDPs with exact solvers, used to validate the learners and
//! the value-of-information estimators against ground truth.
//!
//! The solvers here (value iteration, exact policy evaluation) are
//! deliberately independent of the neural learners they are used to check.

use crate::env::{Agent, Env, StepOutcome};
use crate::error::{Error, Result};
use crate::timegrid::RngStream;

/// Finite MDP. `transitions[s][a]` lists `(probability, next_state, reward)`
/// triples; terminal states have empty action lists and value zero.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub transitions: Vec<Vec<Vec<(f64, usize, f64)>>>,
    pub terminal: Vec<bool>,
    pub initial: Vec<f64>,
    pub gamma: f64,
    pub max_steps: usize,
}

/// Exact solution bundle from value iteration.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub v: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

impl TabularMdp {
    pub fn validate(&self) -> Result<()> {
        for s in 0..self.n_states {
            if self.terminal[s] {
                continue;
            }
            for a in 0..self.n_actions {
                let total: f64 = self.transitions[s][a].iter().map(|(p, _, _)| p).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::RejectedInput(format!(
                        "transition probabilities for ({s},{a}) sum to {total}"
                    )));
                }
            }
        }
        let init_total: f64 = self.initial.iter().sum();
        if (init_total - 1.0).abs() > 1e-9 {
            return Err(Error::RejectedInput(format!(
                "initial distribution sums to {init_total}"
            )));
        }
        Ok(())
    }

    /// One-step backup of a state-value function into action values.
    pub fn q_from_v(&self, v: &[f64]) -> Vec<Vec<f64>> {
        (0..self.n_states)
            .map(|s| {
                (0..self.n_actions)
                    .map(|a| {
                        if self.terminal[s] {
                            return 0.0;
                        }
                        self.transitions[s][a]
                            .iter()
                            .map(|&(p, s2, r)| {
                                p * (r + if self.terminal[s2] { 0.0 } else { self.gamma * v[s2] })
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Value iteration to fixed point; exact up to `tol` in sup norm.
    pub fn value_iteration(&self, tol: f64) -> ExactSolution {
        let mut v = vec![0.0; self.n_states];
        loop {
            let q = self.q_from_v(&v);
            let mut delta = 0.0f64;
            for s in 0..self.n_states {
                if self.terminal[s] {
                    continue;
                }
                let best = q[s].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                delta = delta.max((best - v[s]).abs());
                v[s] = best;
            }
            if delta < tol {
                let q = self.q_from_v(&v);
                return ExactSolution { v, q };
            }
        }
    }

    /// Exact evaluation of a stochastic policy `probs[s][a]` by fixed-point
    /// iteration on the Bellman expectation equation.
    pub fn policy_evaluation(&self, probs: &[Vec<f64>], tol: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n_states];
        loop {
            let q = self.q_from_v(&v);
            let mut delta = 0.0f64;
            for s in 0..self.n_states {
                if self.terminal[s] {
                    continue;
                }
                let new: f64 = (0..self.n_actions).map(|a| probs[s][a] * q[s][a]).sum();
                delta = delta.max((new - v[s]).abs());
                v[s] = new;
            }
            if delta < tol {
                return v;
            }
        }
    }

    /// Greedy deterministic policy for a Q table, ties broken by the lowest
    /// action index.
    pub fn greedy_policy(q: &[Vec<f64>]) -> Vec<usize> {
        q.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            })
            .collect()
    }

    /// Mean state value under the initial distribution.
    pub fn initial_value(&self, v: &[f64]) -> f64 {
        self.initial.iter().zip(v).map(|(p, x)| p * x).sum()
    }

    pub fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut f = vec![0.0; self.n_states];
        f[s] = 1.0;
        f
    }

    fn sample_from<'a>(
        choices: &'a [(f64, usize, f64)],
        rng: &mut RngStream,
    ) -> &'a (f64, usize, f64) {
        let mut u = rng.uniform();
        for triple in choices {
            if u < triple.0 {
                return triple;
            }
            u -= triple.0;
        }
        choices.last().unwrap()
    }
}

/// Rollout wrapper giving a [`TabularMdp`] the common environment interface.
/// Observations are state indices; state features are one-hot. Transition
/// randomness lives in an episode stream forked at reset, so the whole
/// episode replays from the stream handed to `reset`.
#[derive(Debug, Clone)]
pub struct TabularEnv {
    pub mdp: TabularMdp,
    state: usize,
    done: bool,
    episode: RngStream,
}

const TABULAR_STREAM_TAG: u64 = 0x7ab;

impl TabularEnv {
    pub fn new(mdp: TabularMdp) -> TabularEnv {
        TabularEnv {
            mdp,
            state: 0,
            done: false,
            episode: crate::timegrid::derive_stream(0, TABULAR_STREAM_TAG),
        }
    }

    pub fn state(&self) -> usize {
        self.state
    }

    /// Forces the current state, for estimator tests that need controlled
    /// starting points.
    pub fn set_state(&mut self, s: usize) {
        self.state = s;
        self.done = self.mdp.terminal[s];
    }
}

impl Env for TabularEnv {
    type Obs = usize;
    type Action = usize;

    fn reset(&mut self, stream: &mut RngStream) -> usize {
        self.episode = stream.fork(TABULAR_STREAM_TAG);
        let mut u = self.episode.uniform();
        let mut s = 0;
        for (i, p) in self.mdp.initial.iter().enumerate() {
            if u < *p {
                s = i;
                break;
            }
            u -= p;
            s = i;
        }
        self.state = s;
        self.done = self.mdp.terminal[s];
        s
    }

    fn step(&mut self, action: &usize) -> StepOutcome<usize> {
        assert!(!self.done, "step on a finished episode");
        let &(_, next, reward) =
            TabularMdp::sample_from(&self.mdp.transitions[self.state][*action], &mut self.episode);
        self.state = next;
        self.done = self.mdp.terminal[next];
        StepOutcome {
            observation: next,
            reward,
            terminal: self.done,
        }
    }

    fn state_features(&self) -> Vec<f64> {
        self.mdp.one_hot(self.state)
    }

    fn gamma(&self) -> f64 {
        self.mdp.gamma
    }

    fn max_steps(&self) -> usize {
        self.mdp.max_steps
    }
}

/// Stochastic tabular policy `probs[s][a]`.
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    pub probs: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn uniform(n_states: usize, n_actions: usize) -> TabularPolicy {
        TabularPolicy {
            probs: vec![vec![1.0 / n_actions as f64; n_actions]; n_states],
        }
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> TabularPolicy {
        TabularPolicy {
            probs: actions
                .iter()
                .map(|&a| {
                    let mut row = vec![0.0; n_actions];
                    row[a] = 1.0;
                    row
                })
                .collect(),
        }
    }

    pub fn sample(&self, state: usize, rng: &mut RngStream) -> usize {
        let row = &self.probs[state];
        let mut u = rng.uniform();
        for (a, p) in row.iter().enumerate() {
            if u < *p {
                return a;
            }
            u -= p;
        }
        row.len() - 1
    }
}

impl Agent<TabularEnv> for TabularPolicy {
    fn act(&self, obs: &usize, rng: &mut RngStream) -> usize {
        self.sample(*obs, rng)
    }
}

// ---------------------------------------------------------------------------
// Fixed validation toys
// ---------------------------------------------------------------------------

/// Deterministic 3-state chain 0 -> 1 -> 2 -> done with rewards 1, 2, 3 and
/// gamma 0.9. Exact values: v = [5.23, 4.7, 3.0].
pub fn deterministic_chain() -> TabularMdp {
    TabularMdp {
        n_states: 4,
        n_actions: 1,
        transitions: vec![
            vec![vec![(1.0, 1, 1.0)]],
            vec![vec![(1.0, 2, 2.0)]],
            vec![vec![(1.0, 3, 3.0)]],
            vec![vec![]],
        ],
        terminal: vec![false, false, false, true],
        initial: vec![1.0, 0.0, 0.0, 0.0],
        gamma: 0.9,
        max_steps: 10,
    }
}

/// 3-state chain with slip: each step advances with probability 0.9 and
/// reward 1, otherwise stays with reward 0.
pub fn noisy_chain() -> TabularMdp {
    let step = |s: usize| vec![vec![(0.9, s + 1, 1.0), (0.1, s, 0.0)]];
    TabularMdp {
        n_states: 4,
        n_actions: 1,
        transitions: vec![step(0), step(1), step(2), vec![vec![]]],
        terminal: vec![false, false, false, true],
        initial: vec![1.0, 0.0, 0.0, 0.0],
        gamma: 0.9,
        max_steps: 400,
    }
}

/// The fixed stochastic toy used by the estimator validation suite:
/// 5 states (4 active + terminal), 3 actions with distinct advantages.
/// Action 0 advances reliably, action 1 is a risky advance, action 2
/// loiters for a small certain reward.
pub fn toy_mdp() -> TabularMdp {
    let row = |s: usize| {
        vec![
            vec![(0.8, s + 1, 0.3), (0.2, s, 0.0)],
            vec![(0.5, s + 1, 0.6), (0.5, s, -0.2)],
            vec![(1.0, s, 0.05)],
        ]
    };
    TabularMdp {
        n_states: 5,
        n_actions: 3,
        transitions: vec![row(0), row(1), row(2), row(3), vec![vec![], vec![], vec![]]],
        terminal: vec![false, false, false, false, true],
        initial: vec![0.25, 0.25, 0.25, 0.25, 0.0],
        gamma: 0.9,
        max_steps: 300,
    }
}

/// Deterministic 4-state corridor with a goal at the end; the unique
/// optimal policy moves forward everywhere.
pub fn four_state_corridor() -> TabularMdp {
    let fwd = |s: usize| {
        if s == 2 {
            (1.0, 3, 1.0)
        } else {
            (1.0, s + 1, -0.1)
        }
    };
    let back = |s: usize| (1.0, s.saturating_sub(1), -0.1);
    TabularMdp {
        n_states: 4,
        n_actions: 2,
        transitions: (0..3)
            .map(|s| vec![vec![fwd(s)], vec![back(s)]])
            .chain(std::iter::once(vec![vec![], vec![]]))
            .collect(),
        terminal: vec![false, false, false, true],
        initial: vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0],
        gamma: 0.9,
        max_steps: 60,
    }
}

/// 2-context, 3-action bandit: every action terminates immediately with a
/// noisy reward. Expected rewards are [0.2, 0.8, 0.5] in context 0 and
/// [0.9, 0.1, 0.4] in context 1.
pub fn two_context_bandit() -> TabularMdp {
    let arm = |mean: f64| vec![(0.5, 2, mean + 0.1), (0.5, 2, mean - 0.1)];
    TabularMdp {
        n_states: 3,
        n_actions: 3,
        transitions: vec![
            vec![arm(0.2), arm(0.8), arm(0.5)],
            vec![arm(0.9), arm(0.1), arm(0.4)],
            vec![vec![], vec![], vec![]],
        ],
        terminal: vec![false, false, true],
        initial: vec![0.5, 0.5, 0.0],
        gamma: 0.0,
        max_steps: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timegrid::derive_stream;

    #[test]
    fn toys_are_well_formed() {
        for mdp in [
            deterministic_chain(),
            noisy_chain(),
            toy_mdp(),
            four_state_corridor(),
            two_context_bandit(),
        ] {
            mdp.validate().unwrap();
        }
    }

    #[test]
    fn deterministic_chain_values_are_hand_checkable() {
        let mdp = deterministic_chain();
        let sol = mdp.value_iteration(1e-13);
        assert!((sol.v[2] - 3.0).abs() < 1e-10);
        assert!((sol.v[1] - 4.7).abs() < 1e-10);
        assert!((sol.v[0] - 5.23).abs() < 1e-10);
    }

    #[test]
    fn noisy_chain_policy_evaluation_solves_fixed_point() {
        let mdp = noisy_chain();
        let probs = vec![vec![1.0]; 4];
        let v = mdp.policy_evaluation(&probs, 1e-13);
        // v(s) = 0.9*(1 + 0.9*v(s+1)) + 0.1*0.9*v(s)
        for s in (0..3).rev() {
            let next = if s == 2 { 0.0 } else { v[s + 1] };
            let expected = (0.9 * (1.0 + 0.9 * next)) / (1.0 - 0.1 * 0.9);
            assert!((v[s] - expected).abs() < 1e-9, "state {s}: {} vs {expected}", v[s]);
        }
    }

    #[test]
    fn corridor_optimum_is_forward_everywhere() {
        let mdp = four_state_corridor();
        let sol = mdp.value_iteration(1e-13);
        let greedy = TabularMdp::greedy_policy(&sol.q);
        assert_eq!(&greedy[..3], &[0, 0, 0]);
        // Forward is strictly better than back in every active state.
        for s in 0..3 {
            assert!(sol.q[s][0] > sol.q[s][1] + 1e-9);
        }
    }

    #[test]
    fn toy_mdp_has_distinct_advantages() {
        let mdp = toy_mdp();
        let sol = mdp.value_iteration(1e-13);
        for s in 0..4 {
            let mut q = sol.q[s].clone();
            q.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(q[2] - q[0] > 0.05, "state {s} advantages too flat: {q:?}");
        }
    }

    #[test]
    fn rollouts_hit_the_stationary_distribution() {
        let mdp = toy_mdp();
        let sol = mdp.value_iteration(1e-13);
        let greedy = TabularMdp::greedy_policy(&sol.q);
        let policy = TabularPolicy::deterministic(&greedy, mdp.n_actions);
        let mut env = TabularEnv::new(mdp);
        let mut rng = derive_stream(3, 3);
        let mut returns = Vec::new();
        for _ in 0..4000 {
            let mut obs = env.reset(&mut rng);
            let mut rewards = Vec::new();
            for _ in 0..env.max_steps() {
                if env.mdp.terminal[obs] {
                    break;
                }
                let a = policy.sample(obs, &mut rng);
                let out = env.step(&a);
                rewards.push(out.reward);
                obs = out.observation;
                if out.terminal {
                    break;
                }
            }
            returns.push(crate::timegrid::discounted_return(&rewards, env.gamma()).unwrap());
        }
        let mean = returns.iter().sum::<f64>() / returns.len() as f64;
        let exact = env.mdp.initial_value(&sol.v);
        let se = {
            let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
                / (returns.len() as f64 - 1.0);
            (var / returns.len() as f64).sqrt()
        };
        assert!(
            (mean - exact).abs() < 3.0 * se + 1e-6,
            "mean {mean} vs exact {exact} (se {se})"
        );
    }
}

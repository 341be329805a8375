//! Minimal environment and policy abstractions shared by the platoon
//! environments, the tabular validation MDPs, and the evaluation machinery.

use crate::timegrid::RngStream;

/// Outcome of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome<O> {
    pub observation: O,
    pub reward: f64,
    pub terminal: bool,
}

/// An episodic environment. `reset` must fully re-seed all episode
/// randomness from the given stream so identical streams replay identical
/// episodes.
pub trait Env {
    type Obs;
    type Action;

    fn reset(&mut self, stream: &mut RngStream) -> Self::Obs;
    fn step(&mut self, action: &Self::Action) -> StepOutcome<Self::Obs>;

    /// Feature encoding of the current underlying (perfect) state, used to
    /// fit and query state-value functions.
    fn state_features(&self) -> Vec<f64>;

    fn gamma(&self) -> f64;

    /// Upper bound on episode length, enforced by rollout drivers.
    fn max_steps(&self) -> usize;
}

/// A decision rule over an environment's observations.
pub trait Agent<E: Env + ?Sized> {
    fn act(&self, obs: &E::Obs, rng: &mut RngStream) -> E::Action;
}

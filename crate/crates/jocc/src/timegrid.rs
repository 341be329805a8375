//! Multitimescale indexing, discounted returns, deterministic random
//! streams, and trajectory records shared by the environments and learners.
//!
//! Control decisions happen once per control interval `k`; radio decisions
//! happen once per slot `(k, t)` with `T` slots per control interval. At the
//! defaults (50 ms intervals, T = 50) a slot lasts exactly 1 ms.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-level time grid: `horizon_control_intervals` control intervals, each
/// split into `slots_per_control_interval` communication slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGrid {
    pub control_interval_s: f64,
    pub slots_per_control_interval: u64,
    pub horizon_control_intervals: u64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            control_interval_s: 0.05,
            slots_per_control_interval: 50,
            horizon_control_intervals: 200,
        }
    }
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.control_interval_s > 0.0) || !self.control_interval_s.is_finite() {
            return Err(Error::RejectedInput(format!(
                "control_interval_s must be positive, got {}",
                self.control_interval_s
            )));
        }
        if self.slots_per_control_interval < 1 {
            return Err(Error::RejectedInput(
                "slots_per_control_interval must be at least 1".into(),
            ));
        }
        if self.horizon_control_intervals < 1 {
            return Err(Error::RejectedInput(
                "horizon_control_intervals must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Slot duration in seconds (1 ms at defaults).
    pub fn slot_duration_s(&self) -> f64 {
        self.control_interval_s / self.slots_per_control_interval as f64
    }

    pub fn total_slots(&self) -> u64 {
        self.horizon_control_intervals * self.slots_per_control_interval
    }
}

/// Global slot index of slot `t` within control interval `k`: `k*T + t`.
/// Bijective over valid `(k, t)` pairs and strictly monotone in
/// lexicographic order.
pub fn slot_index(k: u64, t: u64, grid: &TimeGrid) -> Result<u64> {
    if t >= grid.slots_per_control_interval {
        return Err(Error::RejectedInput(format!(
            "slot {} out of range, interval has {} slots",
            t, grid.slots_per_control_interval
        )));
    }
    Ok(k * grid.slots_per_control_interval + t)
}

/// Discounted return `sum_k gamma^k * rewards[k]`, evaluated by Horner's
/// rule from the tail.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::RejectedInput(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    if let Some(bad) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(Error::RejectedInput(format!("non-finite reward {bad}")));
    }
    Ok(rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc))
}

// ---------------------------------------------------------------------------
// Deterministic random streams
// ---------------------------------------------------------------------------

/// Mixes two ids into one, for deriving nested stream ids such as
/// (phase, iteration, episode) without shared mutable state.
/// SplitMix64 finalizer, so nearby inputs land far apart.
pub fn mix_ids(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic, counter-based random stream. Identical `(root_seed,
/// stream_id)` pairs yield identical draw sequences across runs and
/// platforms; distinct stream ids give statistically independent sequences.
#[derive(Debug, Clone)]
pub struct RngStream {
    root_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

/// Derives the stream for `(root_seed, stream_id)`. Pure function of its
/// inputs; no global state.
pub fn derive_stream(root_seed: u64, stream_id: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(stream_id);
    RngStream {
        root_seed,
        stream_id,
        rng,
    }
}

impl RngStream {
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream keyed off this stream's identity plus `salt`,
    /// independent of how many draws have been made so far.
    pub fn substream(&self, salt: u64) -> RngStream {
        derive_stream(self.root_seed, mix_ids(self.stream_id, salt))
    }

    /// A child stream that consumes one draw from this stream, so repeated
    /// forks from the same parent are mutually independent.
    pub fn fork(&mut self, tag: u64) -> RngStream {
        let seed = self.next_u64();
        derive_stream(seed, tag)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits, like rand's Standard distribution for f64.
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is meaningless");
        (self.uniform() * n as f64) as usize % n
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        rand::Rng::sample(&mut self.rng, rand_distr::StandardNormal)
    }

    /// Unit-mean exponential draw (Rayleigh power fading coefficient).
    pub fn exp1(&mut self) -> f64 {
        rand::Rng::sample(&mut self.rng, rand_distr::Exp1)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

// ---------------------------------------------------------------------------
// Trajectory records
// ---------------------------------------------------------------------------

/// One stored transition. `index` is the native-scale step index: control
/// interval `k` for control transitions, global slot index for slot
/// transitions. Rewards are kept at their native resolution and never
/// pre-aggregated across scales.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep<S, A> {
    pub state: S,
    pub action: A,
    pub reward: f64,
    pub next_state: S,
    pub terminal: bool,
    pub index: u64,
}

/// Append-only record of one rollout. Indices must be strictly increasing
/// and rewards finite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord<S, A> {
    steps: Vec<TrajectoryStep<S, A>>,
}

impl<S, A> TrajectoryRecord<S, A> {
    pub fn new() -> Self {
        TrajectoryRecord { steps: Vec::new() }
    }

    pub fn push(&mut self, step: TrajectoryStep<S, A>) -> Result<()> {
        if !step.reward.is_finite() {
            return Err(Error::RejectedInput(format!(
                "non-finite reward {} at index {}",
                step.reward, step.index
            )));
        }
        if let Some(last) = self.steps.last() {
            if step.index <= last.index {
                return Err(Error::RejectedInput(format!(
                    "step index {} does not increase past {}",
                    step.index, last.index
                )));
            }
        }
        self.steps.push(step);
        Ok(())
    }

    pub fn steps(&self) -> &[TrajectoryStep<S, A>] {
        &self.steps
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn discounted_return_examples() {
        assert_eq!(discounted_return(&[5.0, 9.0, 2.0], 0.0).unwrap(), 5.0);
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 1.0).unwrap(), 3.0);
        assert_eq!(discounted_return(&[1.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(discounted_return(&[], 0.9).unwrap(), 0.0);
    }

    #[test]
    fn discounted_return_rejects_bad_input() {
        assert!(discounted_return(&[1.0, f64::NAN], 0.5).is_err());
        assert!(discounted_return(&[1.0, f64::INFINITY], 0.5).is_err());
        assert!(discounted_return(&[1.0], 1.5).is_err());
        assert!(discounted_return(&[1.0], -0.1).is_err());
    }

    #[test]
    fn slot_index_examples() {
        let grid = TimeGrid::default();
        assert_eq!(slot_index(0, 0, &grid).unwrap(), 0);
        assert_eq!(slot_index(1, 0, &grid).unwrap(), 50);
        assert_eq!(slot_index(2, 49, &grid).unwrap(), 149);
        assert!(slot_index(0, 50, &grid).is_err());
    }

    #[test]
    fn grid_defaults_give_one_ms_slots() {
        let grid = TimeGrid::default();
        grid.validate().unwrap();
        assert!((grid.slot_duration_s() - 0.001).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_values() {
        let mut grid = TimeGrid::default();
        grid.control_interval_s = 0.0;
        assert!(grid.validate().is_err());
        let mut grid = TimeGrid::default();
        grid.slots_per_control_interval = 0;
        assert!(grid.validate().is_err());
    }

    #[test]
    fn same_seed_same_draws() {
        let mut a = derive_stream(42, 3);
        let mut b = derive_stream(42, 3);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_stream_ids_decorrelate() {
        let mut a = derive_stream(7, 0);
        let mut b = derive_stream(7, 1);
        let differing = (0..1000).filter(|_| a.next_u64() != b.next_u64()).count();
        assert!(differing >= 990, "only {differing} of 1000 draws differ");
    }

    #[test]
    fn uniform_mean_near_half() {
        let mut s = derive_stream(123, 9);
        let n = 100_000;
        let mean = (0..n).map(|_| s.uniform()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean} too far from 0.5");
    }

    #[test]
    fn substream_is_position_independent() {
        let mut a = derive_stream(5, 1);
        a.uniform();
        a.uniform();
        let b = derive_stream(5, 1);
        let mut sub_a = a.substream(77);
        let mut sub_b = b.substream(77);
        for _ in 0..100 {
            assert_eq!(sub_a.next_u64(), sub_b.next_u64());
        }
    }

    #[test]
    fn trajectory_rejects_regression_and_nan() {
        let mut rec: TrajectoryRecord<u8, u8> = TrajectoryRecord::new();
        rec.push(TrajectoryStep {
            state: 0,
            action: 0,
            reward: 1.0,
            next_state: 1,
            terminal: false,
            index: 0,
        })
        .unwrap();
        let dup = TrajectoryStep {
            state: 1,
            action: 0,
            reward: 1.0,
            next_state: 2,
            terminal: false,
            index: 0,
        };
        assert!(rec.push(dup).is_err());
        let nan = TrajectoryStep {
            state: 1,
            action: 0,
            reward: f64::NAN,
            next_state: 2,
            terminal: false,
            index: 5,
        };
        assert!(rec.push(nan).is_err());
    }

    proptest! {
        #[test]
        fn gamma_zero_keeps_first_term(r in proptest::collection::vec(-100.0f64..100.0, 1..20)) {
            prop_assert_eq!(discounted_return(&r, 0.0).unwrap(), r[0]);
        }

        #[test]
        fn discounted_return_is_linear(
            r1 in proptest::collection::vec(-10.0f64..10.0, 1..12),
            r2 in proptest::collection::vec(-10.0f64..10.0, 1..12),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            gamma in 0.0f64..=1.0,
        ) {
            let n = r1.len().min(r2.len());
            let combo: Vec<f64> = (0..n).map(|i| a * r1[i] + b * r2[i]).collect();
            let lhs = discounted_return(&combo, gamma).unwrap();
            let rhs = a * discounted_return(&r1[..n], gamma).unwrap()
                + b * discounted_return(&r2[..n], gamma).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn slot_index_is_lexicographically_monotone(
            k1 in 0u64..1000, t1 in 0u64..50,
            k2 in 0u64..1000, t2 in 0u64..50,
        ) {
            let grid = TimeGrid::default();
            let i1 = slot_index(k1, t1, &grid).unwrap();
            let i2 = slot_index(k2, t2, &grid).unwrap();
            prop_assert_eq!((k1, t1) < (k2, t2), i1 < i2);
        }
    }
}

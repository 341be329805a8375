//! Desk-scale co-simulation and training harness for vehicular platoon
//! control jointly optimized with V2X radio resource allocation.
//!
//! Two coupled decision processes run on different time scales: platoon
//! acceleration commands every control interval (50 ms by default) and
//! per-link radio decisions every communication slot (1 ms). The value of
//! information estimated on the control side is fed into the slot-level
//! reward so the radio learns which deliveries actually matter.
//!
//! Module map:
//! - [`timegrid`]: multitimescale indexing, discounted returns, seeded
//!   random streams, trajectory records.
//! - [`platoon`]: longitudinal platoon dynamics, leader traces, perfect and
//!   impaired observations.
//! - [`comm`]: slot-level V2V/V2I spectrum sharing, CAM queues, slot rewards.
//! - [`learner`]: from-scratch MLPs, policy-gradient and Q-learning updates,
//!   checkpoints.
//! - [`voi`]: policy evaluation, expected and immediate value-of-information
//!   estimators.
//! - [`cosim`]: the coupled control+radio episode runner.
//! - [`trainer`]: the iterative joint training loop.
//! - [`study`]: experiment front door used by the `jocc` binary.

pub mod comm;
pub mod cosim;
pub mod env;
pub mod error;
pub mod learner;
pub mod platoon;
pub mod study;
pub mod tabular;
pub mod timegrid;
pub mod trainer;
pub mod voi;

pub use error::{Error, Result};

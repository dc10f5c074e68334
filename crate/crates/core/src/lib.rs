//! Policy gradient adaptive control for unknown switched linear systems.
//!
//! The controller identifies the active mode from a sliding window of recent
//! data and takes certainty-equivalent gradient steps on the LQR cost every
//! tick. The [`certificates`] module evaluates the stability bounds for a
//! finished run: strong stability of the gain sequence, per-mode cost bounds,
//! the dwell-time condition and the state-norm envelope.

pub mod certificates;
pub mod controller;
pub mod error;
pub mod experiment;
pub mod lqr;
pub mod numerics;
pub mod plant;
pub mod scenario;
pub mod selftest;
mod serde_matrix;
pub mod sysid;

pub use error::{Error, Result};

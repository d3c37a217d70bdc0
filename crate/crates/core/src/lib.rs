//! Contention-intensity based distributed coordination (CIDC) for periodic
//! safety-message broadcast, next to an 802.11p DCF broadcast baseline.
//!
//! Layers:
//!
//! * [`model`]: scenario parameters, slot/mini-slot arithmetic and the
//!   periodic arrival schedule with per-vehicle random offsets.
//! * [`mac`]: the slot-resolution channel engine shared by both protocols,
//!   per-vehicle contention-intensity estimation, the CIDC entry-point rule,
//!   δ-churn error injection, traces and invariant replay.
//! * [`dcf`]: the random initial back-off baseline.
//! * [`analytics`]: steady-state models (packet-to-slot ratio, saturation,
//!   contention-intensity Markov chain, delay fixed point, collision
//!   probability and its closed-form bound).
//! * [`harness`]: configuration, sweeps, aggregation, CSV and reports.

pub mod analytics;
pub mod dcf;
pub mod error;
pub mod harness;
pub mod mac;
pub mod model;
pub mod seed;

pub use error::{Error, Result};
pub use model::{ArrivalSchedule, ProtocolParams, TimeIndex};

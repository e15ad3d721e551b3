//! Slot-based simulator for downlink multi-user MIMO scheduling in 802.11ac
//! access points.
//!
//! Two schedulers share one vocabulary: the legacy per-AC FIFO scheduler
//! ([`fifo`]) and decoupled per-user virtual queueing ([`dems`]). The
//! [`engine`] drives saturated runs, [`sweep`] runs the (α, β) campaign and
//! [`metrics`] reduces counter grids to throughput-change tables. [`trace`]
//! replays small hand-written workloads deterministically, and [`analytic`]
//! holds the closed-form head-of-line blocking probability.

pub mod analytic;
pub mod dems;
pub mod domain;
pub mod engine;
pub mod error;
pub mod fifo;
pub mod metrics;
pub mod sweep;
pub mod trace;
pub mod traffic;

pub use domain::{
    ac_priority, validate_config, AccessCategory, Frame, FrameQueue, PerAc, ScenarioConfig,
    TransmissionPlan, UserId,
};
pub use engine::{CounterStats, Scheduler};
pub use error::{Error, Result};

//! Spatiotemporal denoising of event-camera streams with cache-like
//! row/column memories.
//!
//! * [`events`]: event types, labeled streams, CSV I/O.
//! * [`filters`]: the cache-like filter (CLF), the BAF / STCF / RCF / SSM
//!   baselines and a brute-force reference.
//! * [`pipeline`]: cycle-level model of the filter's banked memory.
//! * [`synth`]: labeled synthetic streams (moving objects plus Poisson
//!   background activity).
//! * [`analysis`]: precision/recall/accuracy, the timestamp-bitwidth
//!   false-positive study, time-gap statistics and parameter sweeps.
//! * [`cli`]: the `clf` command-line tool.

pub mod analysis;
pub mod cli;
pub mod events;
pub mod filters;
pub mod pipeline;
pub mod synth;

pub use events::{Event, EventStream, Label, Polarity, SensorGeometry};
pub use filters::{ClfConfig, Decision, Denoiser, FilterParams};

/// Version recorded in run manifests.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

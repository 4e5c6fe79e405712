//! Streaming spatiotemporal denoisers.
//!
//! Every filter answers the same question for an incoming event: how many
//! earlier events fall within `D_th` pixels and `T_th` microseconds of it?
//! They differ in what they remember. [`Clf`] keeps the last `s` events of
//! every row and every column; [`Baf`], [`Stcf`] and [`Ssm`] keep a
//! timestamp map; [`Rcf`] keeps one event per row and column; [`Oracle`]
//! keeps everything.

mod baseline;
mod clf;
mod config;
mod memory;
mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Event, EventStream, SensorGeometry};

pub use baseline::{Baf, Rcf, Ssm, Stcf};
pub use clf::Clf;
pub use config::{
    ceil_log2, default_quant_unit, memory_footprint_bits, required_banks, ClfConfig, ConfigError,
    FilterParams,
};
pub use memory::{
    bank_index, block_index, edu_count, quantize_ts, wrapped_diff, BankView, BlockView,
    MemoryBlock, MemoryModule, Probe, StoredEvent,
};
pub use oracle::Oracle;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("event ({x}, {y}) outside {geometry} sensor")]
    EventOutOfRange {
        x: u16,
        y: u16,
        geometry: SensorGeometry,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Classification of one event. `is_signal` holds exactly when
/// `count >= N_CR`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Decision {
    pub is_signal: bool,
    pub count: u32,
}

impl Decision {
    pub fn from_count(count: u32, n_cr: u32) -> Self {
        Self {
            is_signal: count >= n_cr,
            count,
        }
    }
}

pub trait Denoiser {
    fn process(&mut self, event: &Event) -> Result<Decision, FilterError>;

    /// Forgets all stored history.
    fn reset(&mut self);

    fn run(&mut self, stream: &EventStream) -> Result<Vec<Decision>, FilterError> {
        stream.events().iter().map(|e| self.process(e)).collect()
    }
}

pub(crate) fn check_range(geometry: &SensorGeometry, e: &Event) -> Result<(), FilterError> {
    if geometry.contains(e.x, e.y) {
        Ok(())
    } else {
        Err(FilterError::EventOutOfRange {
            x: e.x,
            y: e.y,
            geometry: *geometry,
        })
    }
}

/// Lines `c - d ..= c + d` clipped to `0..len`.
#[inline]
pub(crate) fn window(c: u16, d: u32, len: u16) -> std::ops::Range<u32> {
    let c = u32::from(c);
    c.saturating_sub(d)..(c + d + 1).min(u32::from(len))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Clf,
    Baf,
    Stcf,
    Rcf,
    /// Subsampled shared memory with an `r x r` pixel cell.
    Ssm(u32),
    Oracle,
}

impl FilterKind {
    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Clf => "clf",
            FilterKind::Baf => "baf",
            FilterKind::Stcf => "stcf",
            FilterKind::Rcf => "rcf",
            FilterKind::Ssm(_) => "ssm",
            FilterKind::Oracle => "oracle",
        }
    }
}

/// Builds any filter from a CLF configuration. Baselines take the
/// thresholds from `config.params`; RCF also takes the timestamp format.
pub fn build_filter(
    kind: FilterKind,
    config: &ClfConfig,
    geometry: SensorGeometry,
) -> Result<Box<dyn Denoiser + Send>, FilterError> {
    config.params.validate()?;
    Ok(match kind {
        FilterKind::Clf => Box::new(Clf::new(*config, geometry)?),
        FilterKind::Baf => Box::new(Baf::new(config.params, geometry)),
        FilterKind::Stcf => Box::new(Stcf::new(config.params, geometry)),
        FilterKind::Rcf => Box::new(Rcf::new(
            config.params,
            config.bw_t,
            config.quant_unit,
            geometry,
        )?),
        FilterKind::Ssm(r) => Box::new(Ssm::new(config.params, geometry, r)?),
        FilterKind::Oracle => Box::new(
            Oracle::new(config.params, geometry).with_same_polarity(config.same_polarity_only),
        ),
    })
}

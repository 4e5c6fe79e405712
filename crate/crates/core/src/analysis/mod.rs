//! Metrics, the wraparound false-positive study, time-gap statistics and
//! parameter sweeps.

mod bitwidth;
mod gaps;
mod metrics;
mod sweep;

use thiserror::Error;

pub use bitwidth::{
    bitwidth_study, fp_rate_analytic, fp_rate_closed_form, fp_rate_montecarlo, window_rate,
    BitwidthRow,
};
pub use gaps::{time_gap_stats, time_gap_stats_with_bins, GapHistogram, DEFAULT_BINS};
pub use metrics::{compute_metrics, MetricsReport};
pub use sweep::{
    run_sweep, write_sweep_csv, DatasetSpec, SweepAxes, SweepRow, SweepSpec, SWEEP_CSV_HEADER,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{decisions} decisions for {labels} labels")]
    LengthMismatch { decisions: usize, labels: usize },
    #[error("labels required: event {index} is unlabeled")]
    UnlabeledEvent { index: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dataset {name}: {message}")]
    Dataset { name: String, message: String },
    #[error("run {run}: {message}")]
    Run { run: String, message: String },
}

//! Timing metrics over captured telemetry and latency logs.
//!
//! All operations are pure functions on immutable series. Sampling
//! metrics (rate, longest increment, double-difference jitter) run on the
//! integer-microsecond [`TimingSeries`]; latency statistics run on
//! benchmark [`LatencyRecord`](crate::control_workload::LatencyRecord)
//! sequences.

mod latency;
mod metrics;
mod series;

pub use latency::{latency_summary, LatencyHistogram, LatencySummary};
pub use metrics::{
    double_difference_jitter, double_difference_spread, double_differences, longest_increment,
    mean_sample_rate, phase_metrics, pooled_phase_metrics, quantile_sorted, PhaseMetrics,
};
pub use series::{extract_phase, Phase, PhaseWindow, TimingSeries};

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("tow and sys series lengths differ ({tow} vs {sys})")]
    LengthMismatch { tow: usize, sys: usize },

    /// The sampling timestamp crossed the GPS week boundary. Runs are
    /// seconds long and never legitimately wrap, so this is rejected
    /// rather than unwrapped.
    #[error("tow wraps around the GPS week boundary at sample {index}")]
    TowWraparound { index: usize },

    #[error("tow is not strictly increasing at sample {index}")]
    NonMonotonicTow { index: usize },

    /// The metric is undefined for this few samples.
    #[error("metric undefined: needs at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

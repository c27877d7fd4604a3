//! A stand-in for a real-time driving software stack: a fixed-cost
//! receding-horizon motion controller closed against a simulated vehicle
//! plant, benchmarked with per-iteration monotonic latency capture.
//!
//! The benchmark loop is strictly single-threaded. Given identical
//! configuration and seed, the state and control trajectories are
//! bit-identical across runs; only the timestamps differ.

mod bench;
mod mpc;
mod plant;

pub use bench::{
    parse_latency_csv, run_benchmark, run_benchmark_in_memory, write_latency_csv, BenchmarkConfig,
    BenchmarkRun, LatencyRecord, LATENCY_CSV_HEADER,
};
pub use mpc::{sequence_cost, straight_reference, MpcConfig, MpcController};
pub use plant::{heading_error, normalize_heading, ControlInput, PlantModel, VehicleState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("reference path holds {got} states but the horizon needs {needed}")]
    ReferenceTooShort { needed: usize, got: usize },

    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),

    #[error("monotonic clock resolution is {found_ns} ns, coarser than the 1 us requirement")]
    ClockResolution { found_ns: u64 },

    #[error("latency log sink failed: {0}")]
    LogSink(#[source] std::io::Error),

    #[error("latency log format: {0}")]
    LogFormat(String),
}

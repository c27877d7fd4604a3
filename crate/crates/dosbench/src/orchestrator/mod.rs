//! Config-driven experiment runner: timed attack initiation, repetitions,
//! phase bookkeeping, and pooled reporting across runs.

mod adstack;
mod config;
mod gnss;
mod report;

pub use adstack::run_adstack_experiment;
pub use config::{run_dir, ExperimentConfig, GnssMode, GnssSettings, Scenario, WorkloadSettings};
pub use gnss::{analyze_capture, run_gnss_experiment, CaptureAnalysis};
pub use report::{AdstackPair, AdstackReport, AggregateReport, GnssRunRecord, Provenance};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("experiment configuration: {0}")]
    Config(String),

    #[error("all {0} repetitions failed")]
    AllRunsFailed(usize),

    #[error(transparent)]
    DeviceSim(#[from] crate::device_sim::DeviceSimError),

    #[error(transparent)]
    Workload(#[from] crate::control_workload::WorkloadError),

    #[error(transparent)]
    Flood(#[from] crate::packet_forge::FloodError),

    #[error(transparent)]
    Codec(#[from] crate::stream_codec::CodecError),

    #[error(transparent)]
    Analysis(#[from] crate::timing_analysis::AnalysisError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("report serialization: {0}")]
    Serialize(#[from] serde_json::Error),
}

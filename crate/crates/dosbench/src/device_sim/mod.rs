//! GNSS-RTK device emulation: position solutions generated on a
//! nonuniformly sampled fusion schedule, streamed as binary packets over
//! TCP, with deterministic scripted degradation for reproducible tests.
//!
//! Sampling-clock integrity is the load-bearing property here: `tow`
//! always reflects the scheduled sampling epoch. Degradation drops
//! samples or delays their processing clock; it never shifts the
//! sampling timestamps of survivors.

mod generator;
mod sample;
mod schedule;
mod script;
mod server;

pub use generator::{
    derive_seed, generate_run, GeneratedRun, LatencyModel, NoiseModel, SimulatorConfig,
    TimedSample,
};
pub use sample::{FixStatus, SolutionSample, GPS_WEEK_US};
pub use schedule::{EpochSampler, SamplingSchedule, NOMINAL_BAND_HZ};
pub use script::{apply_script, DegradationScript, OutageEvent, ScriptPreset};
pub use server::{spawn_stream, stream, RunningStream, StreamConfig, StreamSummary, DEFAULT_PORT};

use std::net::SocketAddr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DeviceSimError {
    #[error("device-sim configuration: {0}")]
    Config(String),

    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

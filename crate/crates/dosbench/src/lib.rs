//! `dosbench` — a benchmarking suite for measuring how soft real-time
//! components degrade under flood-style denial-of-service load.
//!
//! The suite has two benchmark targets and the tooling to drive them:
//!
//! - a fixed-cost motion-controller loop ([`control_workload`]) whose
//!   per-iteration latency is captured with the monotonic clock, and
//! - a GNSS-like telemetry device ([`device_sim`]) that streams binary
//!   position solutions over TCP on a nonuniform sampling schedule.
//!
//! [`packet_forge`] generates the flood traffic (raw ICMP echo requests,
//! or UDP datagrams carrying the same bytes when raw sockets are not
//! available). [`stream_codec`] defines the wire format for telemetry
//! packets plus a resynchronizing stream decoder and a capture recorder.
//! [`timing_analysis`] computes the timing metrics: per-phase mean sample
//! rate, longest sampling gap, double-difference jitter, and latency
//! distribution summaries. [`orchestrator`] ties it together into
//! repeatable, config-driven experiments with pooled reporting.
//!
//! Run `cargo run --example <name>` for end-to-end demonstrations of each
//! capability, or use the `dosbench` binary for the CLI.

pub mod control_workload;
pub mod device_sim;
pub mod orchestrator;
pub mod packet_forge;
pub mod stream_codec;
pub mod timing_analysis;

pub use control_workload::{ControlInput, LatencyRecord, VehicleState};
pub use device_sim::{DegradationScript, SamplingSchedule, SolutionSample};
pub use orchestrator::{AggregateReport, ExperimentConfig};
pub use packet_forge::{FloodConfig, FloodStats, IcmpEchoPacket};
pub use timing_analysis::{LatencySummary, PhaseWindow, TimingSeries};

//! Aggregate experiment reports and their provenance.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::packet_forge::FloodStats;
use crate::stream_codec::DecodeDiagnostics;
use crate::timing_analysis::{LatencySummary, PhaseMetrics};

use super::config::{ExperimentConfig, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 over the canonical JSON of the experiment config; a report
    /// plus the recorded captures fully determine every metric.
    pub config_hash: String,
    pub started_unix_us: u64,
    pub finished_unix_us: u64,
    /// Achieved flood rate per repetition, where a real flood ran.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub achieved_flood_rates_pps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Provenance {
    pub fn begin(config: &ExperimentConfig) -> Self {
        Self {
            config_hash: config_hash(config),
            started_unix_us: now_unix_us(),
            finished_unix_us: 0,
            achieved_flood_rates_pps: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix_us = now_unix_us();
    }
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).unwrap_or_default();
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn now_unix_us() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_micros() as u64
}

/// One GNSS repetition: where its artifacts live and what they measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnssRunRecord {
    pub run_index: u32,
    pub capture_file: String,
    pub meta_file: String,
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decode: Option<DecodeDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PhaseMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<PhaseMetrics>,
}

/// One AD-stack repetition: the same workload benchmarked without and
/// with flood load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdstackPair {
    pub run_index: u32,
    pub reference: LatencySummary,
    pub under_attack: LatencySummary,
    pub flood: FloodStats,
}

/// Alias kept for the AD-stack half of the report.
pub type AdstackReport = Vec<AdstackPair>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub scenario: Scenario,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gnss_runs: Vec<GnssRunRecord>,
    /// Pooled over the merged per-run phase series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooled_reference: Option<PhaseMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooled_attack: Option<PhaseMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adstack_pairs: Vec<AdstackPair>,
}

impl AggregateReport {
    pub fn save(&self, path: &std::path::Path) -> Result<(), super::OrchestratorError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, super::OrchestratorError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

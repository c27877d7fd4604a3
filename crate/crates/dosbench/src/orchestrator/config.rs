//! Experiment configuration: a single JSON file, with CLI flags layered
//! on top by the binary.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control_workload::MpcConfig;
use crate::device_sim::{
    DegradationScript, LatencyModel, NoiseModel, SamplingSchedule, ScriptPreset,
};
use crate::packet_forge::{FloodConfig, TransportMode};

use super::OrchestratorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    AdStack,
    Gnss,
}

/// How the GNSS experiment produces its degraded stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GnssMode {
    /// Deterministic: the degradation script stands in for the flood and
    /// captures are synthesized directly, so runs are reproducible and
    /// wall-time free.
    #[default]
    Scripted,
    /// Real traffic: record the device stream over TCP while the flood
    /// runs against the device endpoint.
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnssSettings {
    pub mode: GnssMode,
    /// Degradation preset for scripted mode; an explicit `script` wins.
    pub preset: ScriptPreset,
    pub script: Option<DegradationScript>,
    pub schedule: SamplingSchedule,
    pub noise: NoiseModel,
    pub latency: LatencyModel,
    /// Live mode: external device endpoint; unset means an in-process
    /// device simulator is spawned on an ephemeral port.
    pub endpoint: Option<SocketAddr>,
    /// Live mode with the internal simulator: simulated seconds per wall
    /// second.
    pub time_scale: f64,
}

impl Default for GnssSettings {
    fn default() -> Self {
        Self {
            mode: GnssMode::Scripted,
            preset: ScriptPreset::Single,
            script: None,
            schedule: SamplingSchedule::default(),
            noise: NoiseModel::default(),
            latency: LatencyModel::default(),
            endpoint: None,
            time_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadSettings {
    pub iterations: usize,
    pub dt_s: f64,
    pub mpc: MpcConfig,
    /// Unrecorded controller calls before each measured run.
    pub warmup_iterations: usize,
}

impl Default for WorkloadSettings {
    fn default() -> Self {
        let mpc = MpcConfig::default();
        Self {
            iterations: 50_000,
            dt_s: mpc.dt_s,
            mpc,
            warmup_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_attack_start")]
    pub attack_start_s: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_flood")]
    pub flood: FloodConfig,
    #[serde(default)]
    pub gnss: GnssSettings,
    #[serde(default)]
    pub workload: WorkloadSettings,
}

fn default_duration() -> f64 {
    30.0
}

fn default_attack_start() -> f64 {
    10.0
}

fn default_repetitions() -> u32 {
    10
}

fn default_flood() -> FloodConfig {
    FloodConfig {
        target_address: "127.0.0.1:9".parse().unwrap(),
        attacker_count: 2,
        target_rate_pps: 300_000,
        duration_s: 20.0,
        payload_len: 0,
        transport_mode: TransportMode::UdpFallback,
    }
}

impl ExperimentConfig {
    pub fn gnss_default() -> Self {
        Self {
            scenario: Scenario::Gnss,
            duration_s: default_duration(),
            attack_start_s: default_attack_start(),
            repetitions: default_repetitions(),
            seed: 0,
            flood: default_flood(),
            gnss: GnssSettings::default(),
            workload: WorkloadSettings::default(),
        }
    }

    pub fn adstack_default() -> Self {
        Self {
            scenario: Scenario::AdStack,
            ..Self::gnss_default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if !(self.duration_s > 0.0) {
            return Err(OrchestratorError::Config("duration_s must be positive".into()));
        }
        if !(self.attack_start_s >= 0.0 && self.attack_start_s < self.duration_s) {
            return Err(OrchestratorError::Config(
                "attack_start_s must lie inside the run duration".into(),
            ));
        }
        if self.repetitions < 1 {
            return Err(OrchestratorError::Config("repetitions must be >= 1".into()));
        }
        if !(self.gnss.time_scale > 0.0) {
            return Err(OrchestratorError::Config("time_scale must be positive".into()));
        }
        Ok(())
    }

    /// The degradation script in effect for scripted GNSS runs.
    pub fn effective_script(&self) -> Option<DegradationScript> {
        self.gnss
            .script
            .clone()
            .or_else(|| self.gnss.preset.script(self.attack_start_s))
    }
}

/// Directory layout of one repetition inside the experiment output dir.
pub fn run_dir(out_dir: &Path, run_index: u32) -> PathBuf {
    out_dir.join(format!("run-{run_index}"))
}

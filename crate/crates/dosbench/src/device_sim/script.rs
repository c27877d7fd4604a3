//! Scripted degradation: a deterministic stand-in for live flood load.
//!
//! Live degradation depends on hardware and kernel behavior and is not
//! reproducible in CI; a script applies the same externally visible
//! effects — dropped samples, multi-second outages, inflated processing
//! latency — as a pure filter over a generated run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::generator::{derive_seed, TimedSample};
use super::DeviceSimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEvent {
    pub start_s: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationScript {
    /// Degradation applies to samples at or after this run-relative time.
    pub start_s: f64,
    /// Bernoulli drop probability per sample in the degraded window.
    pub drop_probability: f64,
    /// Windows in which every sample is suppressed.
    #[serde(default)]
    pub outage_events: Vec<OutageEvent>,
    /// Extra processing latency added to surviving degraded samples:
    /// `mean + U(0, spread)` seconds. Zeros disable it.
    #[serde(default)]
    pub extra_latency_mean_s: f64,
    #[serde(default)]
    pub extra_latency_spread_s: f64,
}

impl DegradationScript {
    pub fn validate(&self, run_duration_s: f64) -> Result<(), DeviceSimError> {
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(DeviceSimError::Config("drop_probability outside [0, 1]".into()));
        }
        if self.start_s < 0.0 {
            return Err(DeviceSimError::Config("script start cannot be negative".into()));
        }
        if self.extra_latency_mean_s < 0.0 || self.extra_latency_spread_s < 0.0 {
            return Err(DeviceSimError::Config("extra latency cannot be negative".into()));
        }
        let mut sorted = self.outage_events.clone();
        sorted.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        for event in &sorted {
            if event.duration_s <= 0.0 {
                return Err(DeviceSimError::Config("outage duration must be positive".into()));
            }
            if event.start_s < 0.0 || event.start_s + event.duration_s > run_duration_s {
                return Err(DeviceSimError::Config(format!(
                    "outage [{}, {}) outside the run",
                    event.start_s,
                    event.start_s + event.duration_s
                )));
            }
        }
        for pair in sorted.windows(2) {
            if pair[0].start_s + pair[0].duration_s > pair[1].start_s {
                return Err(DeviceSimError::Config("outage events overlap".into()));
            }
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, DeviceSimError> {
        let text = std::fs::read_to_string(path).map_err(DeviceSimError::Io)?;
        serde_json::from_str(&text)
            .map_err(|e| DeviceSimError::Config(format!("script file: {e}")))
    }
}

/// Built-in scripts reproducing the single- and double-attacker load
/// signatures: roughly half the samples surviving under one attacker,
/// one in twenty plus multi-second outages under two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptPreset {
    None,
    Single,
    Double,
}

impl std::str::FromStr for ScriptPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "single" => Ok(Self::Single),
            "double" => Ok(Self::Double),
            other => Err(format!("unknown preset `{other}` (none, single, double)")),
        }
    }
}

impl ScriptPreset {
    pub fn script(self, attack_start_s: f64) -> Option<DegradationScript> {
        match self {
            ScriptPreset::None => None,
            ScriptPreset::Single => Some(DegradationScript {
                start_s: attack_start_s,
                drop_probability: 0.5,
                outage_events: Vec::new(),
                extra_latency_mean_s: 0.0,
                extra_latency_spread_s: 0.0,
            }),
            ScriptPreset::Double => Some(DegradationScript {
                start_s: attack_start_s,
                drop_probability: 0.95,
                outage_events: vec![
                    OutageEvent {
                        start_s: attack_start_s + 5.0,
                        duration_s: 1.2,
                    },
                    OutageEvent {
                        start_s: attack_start_s + 12.0,
                        duration_s: 2.4,
                    },
                ],
                extra_latency_mean_s: 0.0,
                extra_latency_spread_s: 0.0,
            }),
        }
    }
}

/// Filter a generated run through a script. Sampling timestamps of
/// surviving samples are byte-identical to the unscripted run; only
/// `sys_time` moves, and only when extra latency is configured.
pub fn apply_script(
    samples: &[TimedSample],
    script: &DegradationScript,
    seed: u64,
    run_duration_s: f64,
) -> Result<Vec<TimedSample>, DeviceSimError> {
    script.validate(run_duration_s)?;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, 3));
    let inject_latency = script.extra_latency_mean_s > 0.0 || script.extra_latency_spread_s > 0.0;

    let mut out = Vec::with_capacity(samples.len());
    for ts in samples {
        if ts.t_s < script.start_s {
            out.push(*ts);
            continue;
        }
        let in_outage = script
            .outage_events
            .iter()
            .any(|o| ts.t_s >= o.start_s && ts.t_s < o.start_s + o.duration_s);
        if in_outage {
            continue;
        }
        if script.drop_probability > 0.0 && rng.gen::<f64>() < script.drop_probability {
            continue;
        }
        let mut kept = *ts;
        if inject_latency {
            let extra_s = script.extra_latency_mean_s
                + if script.extra_latency_spread_s > 0.0 {
                    rng.gen_range(0.0..script.extra_latency_spread_s)
                } else {
                    0.0
                };
            kept.sample.sys_time_us += (extra_s * 1e6).round() as u64;
        }
        out.push(kept);
    }

    // delayed processing still emits in order
    if inject_latency {
        let mut prev = 0u64;
        for ts in &mut out {
            ts.sample.sys_time_us = ts.sample.sys_time_us.max(prev);
            prev = ts.sample.sys_time_us;
        }
    }
    Ok(out)
}

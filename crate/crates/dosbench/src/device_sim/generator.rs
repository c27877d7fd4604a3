//! Sample generation: position solutions on the fused sampling schedule
//! with a two-clock timestamp model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::sample::{FixStatus, SolutionSample, GPS_WEEK_US};
use super::schedule::{EpochSampler, SamplingSchedule};
use super::DeviceSimError;

/// Zero-mean Gaussian position scatter for the stationary antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub horizontal_std_m: f64,
    pub vertical_std_m: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            horizontal_std_m: 0.02,
            vertical_std_m: 0.03,
        }
    }
}

/// Per-sample processing latency: `base + U(0, spread)` seconds. The
/// device emits solutions in order, so the processing clock never runs
/// backwards even when a later sample finished faster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub base_s: f64,
    pub spread_s: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            base_s: 0.004,
            spread_s: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorConfig {
    pub schedule: SamplingSchedule,
    pub noise: NoiseModel,
    pub latency: LatencyModel,
    /// Stationary antenna truth in the local tangent frame, meters.
    pub truth_enu_m: [f64; 3],
    pub fix_status: FixStatus,
    pub duration_s: f64,
    pub seed: u64,
    /// Time-of-week at run start; seeded (wrap-safe) when unset.
    pub tow_start_us: Option<u64>,
    /// Device-clock offset from GPS time; seeded when unset. Arbitrary,
    /// since differenced metrics cancel constants.
    pub clock_offset_us: Option<u64>,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            schedule: SamplingSchedule::default(),
            noise: NoiseModel::default(),
            latency: LatencyModel::default(),
            truth_enu_m: [0.0; 3],
            fix_status: FixStatus::Fixed,
            duration_s: 30.0,
            seed: 0,
            tow_start_us: None,
            clock_offset_us: None,
        }
    }
}

/// A sample paired with its run-relative emission epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedSample {
    pub t_s: f64,
    pub sample: SolutionSample,
}

/// A fully generated (undegraded) run.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRun {
    pub samples: Vec<TimedSample>,
    pub tow_start_us: u64,
    pub clock_offset_us: u64,
}

/// Derive an independent RNG stream from a run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(1e-300..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generate the complete sample sequence for one run.
///
/// Degradation is applied afterwards as a pure filter, so the values of
/// surviving samples are identical with or without a script: drops remove
/// samples, they never shift sampling timestamps.
pub fn generate_run(config: &SimulatorConfig) -> Result<GeneratedRun, DeviceSimError> {
    if !(config.duration_s > 0.0) {
        return Err(DeviceSimError::Config("duration must be positive".into()));
    }
    if config.latency.base_s < 0.0 || config.latency.spread_s < 0.0 {
        return Err(DeviceSimError::Config("latency model cannot be negative".into()));
    }

    let duration_us = (config.duration_s * 1e6).round() as u64;
    let mut seed_rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, 0));
    let tow_start_us = match config.tow_start_us {
        Some(t) => t,
        // leave a day of headroom at each end of the week
        None => seed_rng.gen_range(86_400_000_000..GPS_WEEK_US - 86_400_000_000),
    };
    if tow_start_us + duration_us >= GPS_WEEK_US {
        return Err(DeviceSimError::Config(
            "run would cross the GPS week boundary".into(),
        ));
    }
    let clock_offset_us = match config.clock_offset_us {
        Some(o) => o,
        None => seed_rng.gen_range(1_000_000_000..4_000_000_000),
    };

    let mut sampler = EpochSampler::new(&config.schedule, derive_seed(config.seed, 1))?;
    let mut noise_rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, 2));

    let mut samples = Vec::with_capacity((config.duration_s * config.schedule.imu_rate_hz) as usize + 8);
    let mut prev_sys_us = 0u64;
    loop {
        let t_s = sampler.next_sample_time();
        if t_s >= config.duration_s {
            break;
        }
        let east_m = config.truth_enu_m[0] + config.noise.horizontal_std_m * gaussian(&mut noise_rng);
        let north_m = config.truth_enu_m[1] + config.noise.horizontal_std_m * gaussian(&mut noise_rng);
        let up_m = config.truth_enu_m[2] + config.noise.vertical_std_m * gaussian(&mut noise_rng);
        let latency_s = config.latency.base_s
            + if config.latency.spread_s > 0.0 {
                noise_rng.gen_range(0.0..config.latency.spread_s)
            } else {
                0.0
            };

        let tow_us = tow_start_us + (t_s * 1e6).round() as u64;
        let sys_raw_us = tow_us + clock_offset_us + (latency_s * 1e6).round() as u64;
        let sys_time_us = sys_raw_us.max(prev_sys_us);
        prev_sys_us = sys_time_us;

        samples.push(TimedSample {
            t_s,
            sample: SolutionSample {
                tow_us,
                sys_time_us,
                east_mm: (east_m * 1000.0).round() as i32,
                north_mm: (north_m * 1000.0).round() as i32,
                up_mm: (up_m * 1000.0).round() as i32,
                fix_status: config.fix_status,
            },
        });
    }

    Ok(GeneratedRun {
        samples,
        tow_start_us,
        clock_offset_us,
    })
}

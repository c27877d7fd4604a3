//! The nonuniform output schedule of the simulated device.
//!
//! Output epochs come from fusing two incoherently clocked streams: an
//! inertial stream near the nominal output rate and a slow GNSS stream.
//! Output normally happens at each IMU epoch, but when a GNSS epoch falls
//! within the merge window after an IMU epoch, that IMU update is
//! discarded and the output lands on the GNSS epoch instead. The
//! resulting sample-to-sample increments spread out between zero and
//! twice the nominal period instead of sitting on a uniform grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::DeviceSimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    /// Configured medium-output-rate band center; bounds checks and plot
    /// scales use this.
    pub nominal_rate_hz: f64,
    pub imu_rate_hz: f64,
    pub gnss_rate_hz: f64,
    /// A GNSS epoch this close after an IMU epoch replaces it.
    pub merge_window_s: f64,
    /// Uniform per-epoch clock jitter bound on IMU epochs (plus/minus).
    pub imu_jitter_s: f64,
    /// Probability per output that the device stalls and skips a few
    /// sampling epochs entirely, producing an increment well beyond twice
    /// the nominal period even without external load.
    pub rare_spike_probability: f64,
}

/// The medium-output-rate band the device is configured for.
pub const NOMINAL_BAND_HZ: (f64, f64) = (55.0, 65.0);

// A spike skips this many IMU periods.
const SPIKE_SKIP_PERIODS: std::ops::RangeInclusive<u32> = 2..=6;

impl Default for SamplingSchedule {
    fn default() -> Self {
        Self {
            nominal_rate_hz: 60.0,
            imu_rate_hz: 63.0,
            gnss_rate_hz: 5.0,
            merge_window_s: 0.006,
            imu_jitter_s: 0.0004,
            rare_spike_probability: 0.0002,
        }
    }
}

impl SamplingSchedule {
    pub fn validate(&self) -> Result<(), DeviceSimError> {
        if !(self.nominal_rate_hz >= NOMINAL_BAND_HZ.0 && self.nominal_rate_hz <= NOMINAL_BAND_HZ.1)
        {
            return Err(DeviceSimError::Config(format!(
                "nominal_rate_hz {} outside the medium-output band [{}, {}]",
                self.nominal_rate_hz, NOMINAL_BAND_HZ.0, NOMINAL_BAND_HZ.1
            )));
        }
        if !(self.imu_rate_hz > 0.0) || !(self.gnss_rate_hz > 0.0) {
            return Err(DeviceSimError::Config("stream rates must be positive".into()));
        }
        if self.merge_window_s < 0.0 || self.imu_jitter_s < 0.0 {
            return Err(DeviceSimError::Config(
                "merge window and jitter cannot be negative".into(),
            ));
        }
        if self.merge_window_s + 2.0 * self.imu_jitter_s >= 1.0 / self.imu_rate_hz {
            return Err(DeviceSimError::Config(
                "merge window plus jitter must stay below the IMU period".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.rare_spike_probability) {
            return Err(DeviceSimError::Config("spike probability outside [0, 1]".into()));
        }
        Ok(())
    }

    /// Largest increment the fusion rule itself can produce (spikes
    /// excepted): one period stretched by the merge window and jitter.
    pub fn max_regular_increment_s(&self) -> f64 {
        1.0 / self.imu_rate_hz + self.merge_window_s + 2.0 * self.imu_jitter_s
    }
}

/// Deterministic epoch source for one run.
pub struct EpochSampler {
    schedule: SamplingSchedule,
    rng: ChaCha12Rng,
    imu_grid_s: f64,
    gnss_next_s: f64,
    prev_epoch_s: f64,
}

impl EpochSampler {
    pub fn new(schedule: &SamplingSchedule, seed: u64) -> Result<Self, DeviceSimError> {
        schedule.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        // the two streams start at unrelated phases
        let imu_phase = rng.gen_range(0.0..1.0 / schedule.imu_rate_hz);
        let gnss_phase = rng.gen_range(0.0..1.0 / schedule.gnss_rate_hz);
        Ok(Self {
            schedule: *schedule,
            rng,
            imu_grid_s: imu_phase,
            gnss_next_s: gnss_phase,
            prev_epoch_s: f64::NEG_INFINITY,
        })
    }

    /// Next output epoch in seconds from run start; strictly increasing.
    pub fn next_sample_time(&mut self) -> f64 {
        let imu_period = 1.0 / self.schedule.imu_rate_hz;

        if self.schedule.rare_spike_probability > 0.0
            && self.rng.gen::<f64>() < self.schedule.rare_spike_probability
        {
            let skips = self.rng.gen_range(SPIKE_SKIP_PERIODS);
            self.imu_grid_s += f64::from(skips) * imu_period;
        }
        let mut imu_epoch = self.imu_grid_s;
        if self.schedule.imu_jitter_s > 0.0 {
            imu_epoch += self
                .rng
                .gen_range(-self.schedule.imu_jitter_s..=self.schedule.imu_jitter_s);
        }
        self.imu_grid_s += imu_period;

        // GNSS epochs that passed without landing in a window are absorbed
        let gnss_period = 1.0 / self.schedule.gnss_rate_hz;
        while self.gnss_next_s < imu_epoch {
            self.gnss_next_s += gnss_period;
        }

        let mut epoch = imu_epoch;
        if self.gnss_next_s < imu_epoch + self.schedule.merge_window_s {
            epoch = self.gnss_next_s;
            self.gnss_next_s += gnss_period;
        }

        if epoch <= self.prev_epoch_s {
            epoch = self.prev_epoch_s + 1e-6;
        }
        self.prev_epoch_s = epoch;
        epoch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_schedule() -> SamplingSchedule {
        SamplingSchedule {
            imu_jitter_s: 0.0,
            rare_spike_probability: 0.0,
            ..SamplingSchedule::default()
        }
    }

    #[test]
    fn zero_merge_window_gives_uniform_sampling() {
        let schedule = SamplingSchedule {
            merge_window_s: 0.0,
            ..plain_schedule()
        };
        let mut sampler = EpochSampler::new(&schedule, 1).unwrap();
        let epochs: Vec<f64> = (0..500).map(|_| sampler.next_sample_time()).collect();
        let period = 1.0 / schedule.imu_rate_hz;
        for pair in epochs.windows(2) {
            assert!((pair[1] - pair[0] - period).abs() < 1e-12);
        }
    }

    #[test]
    fn increments_stay_inside_the_nonuniform_band() {
        let schedule = SamplingSchedule::default();
        let mut sampler = EpochSampler::new(&schedule, 7).unwrap();
        let mut prev = sampler.next_sample_time();
        let upper = 2.0 / schedule.nominal_rate_hz + 0.001;
        let mut spikes = 0u32;
        let mut merged_band = 0u32;
        for _ in 0..10_000 {
            let t = sampler.next_sample_time();
            let inc = t - prev;
            prev = t;
            assert!(inc > 0.0);
            if inc > upper {
                spikes += 1; // rare stalls may exceed the band
                continue;
            }
            if (inc - 1.0 / schedule.imu_rate_hz).abs() > 2.0 * schedule.imu_jitter_s {
                merged_band += 1;
            }
        }
        assert!(spikes <= 20, "too many spikes: {spikes}");
        // the GNSS merges must actually occur
        assert!(merged_band > 20, "merge rule never fired: {merged_band}");
    }

    #[test]
    fn mean_rate_lands_in_the_medium_output_band() {
        let schedule = SamplingSchedule::default();
        let mut sampler = EpochSampler::new(&schedule, 3).unwrap();
        let n = 10_000;
        let first = sampler.next_sample_time();
        let mut last = first;
        for _ in 1..n {
            last = sampler.next_sample_time();
        }
        let rate = (n - 1) as f64 / (last - first);
        assert!(
            (NOMINAL_BAND_HZ.0..=NOMINAL_BAND_HZ.1).contains(&rate),
            "mean rate {rate}"
        );
    }

    #[test]
    fn same_seed_reproduces_the_epoch_sequence() {
        let schedule = SamplingSchedule::default();
        let mut a = EpochSampler::new(&schedule, 99).unwrap();
        let mut b = EpochSampler::new(&schedule, 99).unwrap();
        for _ in 0..1000 {
            assert_eq!(a.next_sample_time().to_bits(), b.next_sample_time().to_bits());
        }
    }

    #[test]
    fn out_of_band_nominal_rate_is_rejected() {
        let schedule = SamplingSchedule {
            nominal_rate_hz: 40.0,
            ..SamplingSchedule::default()
        };
        assert!(matches!(
            EpochSampler::new(&schedule, 0),
            Err(DeviceSimError::Config(_))
        ));
    }
}

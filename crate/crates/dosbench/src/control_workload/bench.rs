//! Closed-loop latency benchmark: state -> controller -> plant, with the
//! controller timed on the monotonic clock at microsecond resolution.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::mpc::{straight_reference, MpcConfig, MpcController};
use super::plant::{ControlInput, PlantModel, VehicleState};
use super::WorkloadError;

/// Per-iteration controller timing, microseconds on the monotonic clock.
///
/// Enter and exit are captured immediately around the controller call, so
/// any delay from OS preemption lands inside `t_exit - t_enter`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub iteration: u64,
    pub t_enter_us: u64,
    pub t_exit_us: u64,
}

pub const LATENCY_CSV_HEADER: &str = "iteration,t_enter_us,t_exit_us";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub iterations: usize,
    /// Loop period; also the controller's rollout step.
    pub dt_s: f64,
    /// Seeds the initial tracking offset so distinct runs exercise
    /// distinct (but reproducible) trajectories.
    pub seed: u64,
    pub mpc: MpcConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let mpc = MpcConfig::default();
        Self {
            iterations: 50_000,
            dt_s: mpc.dt_s,
            seed: 0,
            mpc,
        }
    }
}

/// Everything a benchmark run produces. The trajectory is retained so
/// determinism can be checked bit for bit.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub records: Vec<LatencyRecord>,
    pub states: Vec<VehicleState>,
    pub controls: Vec<ControlInput>,
}

/// Run the closed loop for the configured number of iterations and keep
/// everything in memory. Only the controller call sits between the two
/// timestamps; plant propagation and record keeping are outside it.
pub fn run_benchmark_in_memory(config: &BenchmarkConfig) -> Result<BenchmarkRun, WorkloadError> {
    check_clock_resolution()?;

    let mut mpc_config = config.mpc;
    mpc_config.dt_s = config.dt_s;
    let mut controller = MpcController::new(mpc_config)?;
    let plant = PlantModel {
        wheelbase_m: mpc_config.wheelbase_m,
    };

    // seeded initial offset from the reference line
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let cruise = VehicleState {
        x_m: 0.0,
        y_m: 0.0,
        heading_rad: 0.0,
        speed_mps: 10.0,
    };
    let mut state = VehicleState {
        y_m: rng.gen_range(-1.5..1.5),
        heading_rad: rng.gen_range(-0.15..0.15),
        speed_mps: cruise.speed_mps + rng.gen_range(-2.0..2.0),
        ..cruise
    };

    // the full reference line is precomputed; each iteration sees the
    // next horizon-length window
    let reference = straight_reference(
        &cruise,
        config.iterations + mpc_config.horizon,
        config.dt_s,
    );

    let mut records = Vec::with_capacity(config.iterations);
    let mut states = Vec::with_capacity(config.iterations + 1);
    let mut controls = Vec::with_capacity(config.iterations);
    states.push(state);

    let origin = Instant::now();
    for i in 0..config.iterations {
        let window = &reference[i..i + mpc_config.horizon];

        let t_enter_us = origin.elapsed().as_micros() as u64;
        let input = controller.step(&state, window)?;
        let t_exit_us = origin.elapsed().as_micros() as u64;

        records.push(LatencyRecord {
            iteration: i as u64,
            t_enter_us,
            t_exit_us,
        });
        state = plant.step(&state, &input, config.dt_s)?;
        states.push(state);
        controls.push(input);
    }

    Ok(BenchmarkRun {
        records,
        states,
        controls,
    })
}

/// Run the benchmark and write the records to `log_sink` as CSV once the
/// run is complete, so logging never perturbs the measurements.
pub fn run_benchmark(
    config: &BenchmarkConfig,
    log_sink: &mut dyn Write,
) -> Result<Vec<LatencyRecord>, WorkloadError> {
    let run = run_benchmark_in_memory(config)?;
    write_latency_csv(&run.records, log_sink).map_err(WorkloadError::LogSink)?;
    Ok(run.records)
}

pub fn write_latency_csv(records: &[LatencyRecord], sink: &mut dyn Write) -> std::io::Result<()> {
    writeln!(sink, "{LATENCY_CSV_HEADER}")?;
    for r in records {
        writeln!(sink, "{},{},{}", r.iteration, r.t_enter_us, r.t_exit_us)?;
    }
    sink.flush()
}

pub fn parse_latency_csv(text: &str) -> Result<Vec<LatencyRecord>, WorkloadError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == LATENCY_CSV_HEADER => {}
        other => {
            return Err(WorkloadError::LogFormat(format!(
                "bad header: {other:?}, expected `{LATENCY_CSV_HEADER}`"
            )))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| -> Result<u64, WorkloadError> {
            fields
                .next()
                .ok_or_else(|| {
                    WorkloadError::LogFormat(format!("line {}: missing {name}", lineno + 2))
                })?
                .trim()
                .parse()
                .map_err(|e| {
                    WorkloadError::LogFormat(format!("line {}: {name}: {e}", lineno + 2))
                })
        };
        records.push(LatencyRecord {
            iteration: next("iteration")?,
            t_enter_us: next("t_enter_us")?,
            t_exit_us: next("t_exit_us")?,
        });
    }
    Ok(records)
}

/// The benchmark requires microsecond timing; abort when the platform's
/// monotonic clock is coarser than that.
fn check_clock_resolution() -> Result<(), WorkloadError> {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    let rc = unsafe { libc::clock_getres(libc::CLOCK_MONOTONIC, &mut ts) };
    if rc != 0 {
        return Err(WorkloadError::ClockResolution { found_ns: u64::MAX });
    }
    let res_ns = ts.tv_sec as u64 * 1_000_000_000 + ts.tv_nsec as u64;
    if res_ns > 1_000 {
        return Err(WorkloadError::ClockResolution { found_ns: res_ns });
    }
    Ok(())
}

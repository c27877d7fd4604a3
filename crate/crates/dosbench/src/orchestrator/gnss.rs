//! The GNSS experiment: repeated 30-second captures with the attack (or
//! its scripted stand-in) initiated mid-run, then per-run and pooled
//! phase analysis.

use std::io::Write;
use std::net::SocketAddr;
use std::path::Path;

use crate::device_sim::{apply_script, derive_seed, generate_run, spawn_stream, SimulatorConfig,
    StreamConfig};
use crate::packet_forge::{flood, FloodConfig, StopHandle};
use crate::stream_codec::{decode_all, encode, record, CaptureMeta, DecodeDiagnostics, FRAME_LEN};
use crate::timing_analysis::{
    extract_phase, phase_metrics, pooled_phase_metrics, double_differences, Phase, PhaseMetrics,
    PhaseWindow, TimingSeries,
};

use super::config::{run_dir, ExperimentConfig, GnssMode, Scenario};
use super::report::{now_unix_us, AggregateReport, GnssRunRecord, Provenance};
use super::OrchestratorError;

/// Everything the analyzer derives from one stored capture.
#[derive(Debug, Clone)]
pub struct CaptureAnalysis {
    pub decode: DecodeDiagnostics,
    /// Run-start epoch on the sampling clock. Taken from the capture
    /// metadata when the producer recorded it, otherwise the first
    /// decoded sample.
    pub t0_us: u64,
    pub reference_series: TimingSeries,
    pub attack_series: TimingSeries,
    pub reference: PhaseMetrics,
    pub attack: PhaseMetrics,
}

/// Analysis is a pure function of the stored artifacts: the raw capture,
/// its metadata, and the phase windows.
pub fn analyze_capture(
    capture_path: &Path,
    meta: &CaptureMeta,
    window: &PhaseWindow,
) -> Result<CaptureAnalysis, OrchestratorError> {
    let bytes = std::fs::read(capture_path)?;
    let (samples, decode) = decode_all(&bytes);
    let series = TimingSeries::from_samples(&samples)?;
    let t0_us = match meta.tow_start_us {
        Some(t0) => t0,
        None => samples.first().map(|s| s.tow_us).unwrap_or(0),
    };
    let reference_series = extract_phase(&series, window, Phase::Reference, t0_us);
    let attack_series = extract_phase(&series, window, Phase::Attack, t0_us);
    Ok(CaptureAnalysis {
        decode,
        t0_us,
        reference: phase_metrics(&reference_series),
        attack: phase_metrics(&attack_series),
        reference_series,
        attack_series,
    })
}

/// Run the full experiment: for every repetition capture a run with the
/// degradation starting at `attack_start_s`, analyze the reference and
/// attack phases, pool the runs, and leave all artifacts under `out_dir`
/// (`run-<k>/capture.anb`, `run-<k>/meta.json`, `report.json`,
/// `plots/*.csv`).
pub fn run_gnss_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<AggregateReport, OrchestratorError> {
    config.validate()?;
    if config.scenario != Scenario::Gnss {
        return Err(OrchestratorError::Config(
            "run_gnss_experiment needs a gnss scenario config".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    let window = PhaseWindow::from_attack_schedule(config.attack_start_s, config.duration_s);
    let mut provenance = Provenance::begin(config);
    let mut runs = Vec::new();
    let mut analyses = Vec::new();

    for k in 0..config.repetitions {
        let dir = run_dir(out_dir, k);
        std::fs::create_dir_all(&dir)?;
        let capture_path = dir.join("capture.anb");
        let meta_path = dir.join("meta.json");

        let produced = match config.gnss.mode {
            GnssMode::Scripted => scripted_run(config, k, &capture_path, &meta_path),
            GnssMode::Live => live_run(config, k, &capture_path, &meta_path, &mut provenance),
        };
        let analyzed = produced.and_then(|meta| analyze_capture(&capture_path, &meta, &window));

        match analyzed {
            Ok(analysis) => {
                runs.push(GnssRunRecord {
                    run_index: k,
                    capture_file: capture_path.to_string_lossy().into_owned(),
                    meta_file: meta_path.to_string_lossy().into_owned(),
                    failed: false,
                    failure: None,
                    decode: Some(analysis.decode),
                    reference: Some(analysis.reference),
                    attack: Some(analysis.attack),
                });
                analyses.push((k, analysis));
            }
            Err(e) => {
                log::warn!("run {k} failed: {e}");
                runs.push(GnssRunRecord {
                    run_index: k,
                    capture_file: capture_path.to_string_lossy().into_owned(),
                    meta_file: meta_path.to_string_lossy().into_owned(),
                    failed: true,
                    failure: Some(e.to_string()),
                    decode: None,
                    reference: None,
                    attack: None,
                });
            }
        }
    }

    if analyses.is_empty() {
        return Err(OrchestratorError::AllRunsFailed(config.repetitions as usize));
    }

    let reference_runs: Vec<TimingSeries> =
        analyses.iter().map(|(_, a)| a.reference_series.clone()).collect();
    let attack_runs: Vec<TimingSeries> =
        analyses.iter().map(|(_, a)| a.attack_series.clone()).collect();
    provenance.finish();

    let report = AggregateReport {
        scenario: Scenario::Gnss,
        provenance,
        gnss_runs: runs,
        pooled_reference: Some(pooled_phase_metrics(&reference_runs)),
        pooled_attack: Some(pooled_phase_metrics(&attack_runs)),
        adstack_pairs: Vec::new(),
    };
    report.save(&out_dir.join("report.json"))?;
    write_plot_data(&out_dir.join("plots"), &report, &analyses)?;
    Ok(report)
}

/// Scripted repetition: synthesize the degraded run and write the capture
/// exactly as a live recording would have stored it.
fn scripted_run(
    config: &ExperimentConfig,
    k: u32,
    capture_path: &Path,
    meta_path: &Path,
) -> Result<CaptureMeta, OrchestratorError> {
    let sim = SimulatorConfig {
        schedule: config.gnss.schedule,
        noise: config.gnss.noise,
        latency: config.gnss.latency,
        duration_s: config.duration_s,
        seed: derive_seed(config.seed, 1_000 + u64::from(k)),
        ..SimulatorConfig::default()
    };
    let run = generate_run(&sim)?;
    let outgoing = match config.effective_script() {
        Some(script) => apply_script(&run.samples, &script, sim.seed, sim.duration_s)?,
        None => run.samples,
    };

    let mut bytes = Vec::with_capacity(outgoing.len() * FRAME_LEN);
    for ts in &outgoing {
        bytes.extend_from_slice(&encode(&ts.sample));
    }
    std::fs::write(capture_path, &bytes)?;

    let meta = CaptureMeta {
        start_unix_us: now_unix_us(),
        endpoint: "scripted".to_string(),
        duration_s: config.duration_s,
        tow_start_us: Some(run.tow_start_us),
        time_scale: 1.0,
    };
    meta.save(meta_path)?;
    Ok(meta)
}

/// Live repetition: record the device stream while the flood runs against
/// the device endpoint from `attack_start_s` onward.
fn live_run(
    config: &ExperimentConfig,
    k: u32,
    capture_path: &Path,
    meta_path: &Path,
    provenance: &mut Provenance,
) -> Result<CaptureMeta, OrchestratorError> {
    let time_scale = config.gnss.time_scale;
    let wall_duration_s = config.duration_s / time_scale;
    let wall_attack_start_s = config.attack_start_s / time_scale;

    // external device, or an in-process simulator on an ephemeral port
    let (endpoint, internal, tow_start_us) = match config.gnss.endpoint {
        Some(ep) => (ep, None, None),
        None => {
            let stream_config = StreamConfig {
                bind_addr: "127.0.0.1:0".parse().unwrap(),
                sim: SimulatorConfig {
                    schedule: config.gnss.schedule,
                    noise: config.gnss.noise,
                    latency: config.gnss.latency,
                    duration_s: config.duration_s,
                    seed: derive_seed(config.seed, 1_000 + u64::from(k)),
                    ..SimulatorConfig::default()
                },
                script: None,
                time_scale,
            };
            let tow0 = generate_run(&stream_config.sim)?.tow_start_us;
            let server = spawn_stream(&stream_config)?;
            (server.local_addr(), Some(server), Some(tow0))
        }
    };

    let stop = StopHandle::new();
    let flood_config = FloodConfig {
        target_address: SocketAddr::new(endpoint.ip(), config.flood.target_address.port()),
        duration_s: (wall_duration_s - wall_attack_start_s).max(0.01),
        ..config.flood.clone()
    };
    let flood_worker = {
        let stop = stop.clone();
        let delay = std::time::Duration::from_secs_f64(wall_attack_start_s);
        std::thread::spawn(move || {
            std::thread::sleep(delay);
            if stop.is_stopped() {
                return None;
            }
            Some(flood(&flood_config, &stop))
        })
    };

    let capture = record(endpoint, capture_path, meta_path, wall_duration_s);
    stop.stop();
    match flood_worker.join().expect("flood thread panicked") {
        Some(Ok(stats)) => provenance.achieved_flood_rates_pps.push(stats.achieved_rate_pps),
        Some(Err(e)) => provenance
            .warnings
            .push(format!("run {k}: flood failed: {e}")),
        None => {}
    }
    if let Some(server) = internal {
        server.stop();
        server.wait();
    }
    let summary = capture?;
    if summary.early_termination {
        provenance
            .warnings
            .push(format!("run {k}: capture terminated early"));
    }

    // the recorder cannot know the sampling-clock start or timebase;
    // patch them in when the device was ours
    let mut meta = CaptureMeta::load(meta_path)?;
    meta.duration_s = config.duration_s;
    meta.time_scale = time_scale;
    meta.tow_start_us = tow_start_us;
    meta.save(meta_path)?;
    Ok(meta)
}

fn write_plot_data(
    plots_dir: &Path,
    report: &AggregateReport,
    analyses: &[(u32, CaptureAnalysis)],
) -> Result<(), OrchestratorError> {
    std::fs::create_dir_all(plots_dir)?;

    let mut metrics = std::fs::File::create(plots_dir.join("per_run_metrics.csv"))?;
    writeln!(
        metrics,
        "run,phase,samples,mean_rate_hz,longest_increment_s,dd_jitter_s"
    )?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.9}")).unwrap_or_default();
    for record in &report.gnss_runs {
        for (phase, m) in [("reference", &record.reference), ("attack", &record.attack)] {
            if let Some(m) = m {
                writeln!(
                    metrics,
                    "{},{},{},{},{},{}",
                    record.run_index,
                    phase,
                    m.sample_count,
                    fmt(m.mean_sample_rate_hz),
                    fmt(m.longest_increment_s),
                    fmt(m.double_difference_jitter_s)
                )?;
            }
        }
    }

    let mut pooled = std::fs::File::create(plots_dir.join("pooled_metrics.csv"))?;
    writeln!(
        pooled,
        "phase,samples,mean_rate_hz,longest_increment_s,dd_jitter_s"
    )?;
    for (phase, m) in [
        ("reference", &report.pooled_reference),
        ("attack", &report.pooled_attack),
    ] {
        if let Some(m) = m {
            writeln!(
                pooled,
                "{},{},{},{},{}",
                phase,
                m.sample_count,
                fmt(m.mean_sample_rate_hz),
                fmt(m.longest_increment_s),
                fmt(m.double_difference_jitter_s)
            )?;
        }
    }

    // sample-to-sample increments and double differences, per phase
    let mut increments = std::fs::File::create(plots_dir.join("increments.csv"))?;
    writeln!(increments, "run,phase,t_rel_s,increment_s")?;
    let mut dd = std::fs::File::create(plots_dir.join("double_differences.csv"))?;
    writeln!(dd, "run,phase,t_rel_s,t_dd_s")?;
    for (k, analysis) in analyses {
        for (phase, series) in [
            ("reference", &analysis.reference_series),
            ("attack", &analysis.attack_series),
        ] {
            let tow = series.tow_us();
            for pair in tow.windows(2) {
                let t_rel = (pair[1] - analysis.t0_us) as f64 / 1e6;
                let inc = (pair[1] - pair[0]) as f64 / 1e6;
                writeln!(increments, "{k},{phase},{t_rel:.6},{inc:.6}")?;
            }
            for (i, value) in double_differences(series).iter().enumerate() {
                let t_rel = (tow[i + 1] - analysis.t0_us) as f64 / 1e6;
                writeln!(dd, "{k},{phase},{t_rel:.6},{:.6}", *value as f64 / 1e6)?;
            }
        }
    }
    Ok(())
}

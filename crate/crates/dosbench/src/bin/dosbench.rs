//! Command-line front end for the benchmarking suite. All functionality
//! lives in the library; this binary only parses flags and wires calls.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use dosbench::control_workload::{parse_latency_csv, run_benchmark, BenchmarkConfig};
use dosbench::device_sim::{
    stream, DegradationScript, ScriptPreset, SimulatorConfig, StreamConfig, DEFAULT_PORT,
};
use dosbench::orchestrator::{
    analyze_capture, run_adstack_experiment, run_gnss_experiment, ExperimentConfig, GnssMode,
    Scenario,
};
use dosbench::packet_forge::{flood, FloodConfig, StopHandle, TransportMode};
use dosbench::stream_codec::{record, CaptureMeta};
use dosbench::timing_analysis::{latency_summary, PhaseWindow};

#[derive(Parser)]
#[command(
    name = "dosbench",
    about = "Benchmarks soft real-time components under flood-style DoS load",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate flood traffic toward a target
    Flood(FloodArgs),
    /// Run the control-loop latency benchmark
    Workload(WorkloadArgs),
    /// Serve the simulated telemetry device over TCP
    DeviceSim(DeviceSimArgs),
    /// Record a device byte stream to a capture file
    Record(RecordArgs),
    /// Analyze a recorded capture into per-phase metrics
    Analyze(AnalyzeArgs),
    /// Summarize a control-loop latency log
    AnalyzeLatency(AnalyzeLatencyArgs),
    /// Run a full config-driven experiment
    Run(RunArgs),
}

#[derive(Args)]
struct FloodArgs {
    /// Target endpoint (ip or ip:port; the port is ignored in icmp mode)
    #[arg(long)]
    target: String,
    /// Aggregate packets per second
    #[arg(long, default_value_t = 100_000)]
    rate: u64,
    /// Logical senders
    #[arg(long, default_value_t = 1)]
    attackers: u32,
    /// Seconds to run
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    /// Echo-request payload bytes
    #[arg(long, default_value_t = 0)]
    payload_len: usize,
    /// icmp (raw sockets, privileged) or udp (unprivileged fallback)
    #[arg(long, default_value = "udp")]
    mode: TransportMode,
}

#[derive(Args)]
struct WorkloadArgs {
    #[arg(long, default_value_t = 50_000)]
    iterations: usize,
    /// Loop period in milliseconds
    #[arg(long, default_value_t = 18.0)]
    dt_ms: f64,
    /// Output CSV (`iteration,t_enter_us,t_exit_us`)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DeviceSimArgs {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
    /// Degradation script JSON (see DegradationScript fields)
    #[arg(long, conflicts_with = "preset")]
    script: Option<PathBuf>,
    #[arg(long, default_value = "none")]
    preset: ScriptPreset,
    /// Run-relative time the preset degradation starts
    #[arg(long, default_value_t = 10.0)]
    attack_at: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Simulated seconds per wall second
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
}

#[derive(Args)]
struct RecordArgs {
    /// Device endpoint, e.g. 127.0.0.1:6001
    #[arg(long)]
    endpoint: SocketAddr,
    /// Capture output (.anb, raw concatenated packets)
    #[arg(long)]
    out: PathBuf,
    /// Sidecar metadata path (defaults to <out>.meta.json)
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    capture: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    /// Attack initiation time; phases carry a 2 s guard band around it
    #[arg(long, default_value_t = 10.0)]
    attack_at: f64,
    /// Run duration bounding the attack phase (defaults to the metadata)
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write increment/jitter series CSVs for plotting
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeLatencyArgs {
    /// Latency CSV produced by `dosbench workload`
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Force live mode (real flood and TCP capture)
    #[arg(long, conflicts_with = "scripted")]
    live: bool,
    /// Force scripted mode (deterministic degradation)
    #[arg(long)]
    scripted: bool,
    /// Output directory (run-<k>/..., report.json, plots/)
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e}");
        let mut source = e.source();
        while let Some(cause) = source {
            eprintln!("  caused by: {cause}");
            source = cause.source();
        }
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Flood(args) => cmd_flood(args),
        Command::Workload(args) => cmd_workload(args),
        Command::DeviceSim(args) => cmd_device_sim(args),
        Command::Record(args) => cmd_record(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::AnalyzeLatency(args) => cmd_analyze_latency(args),
        Command::Run(args) => cmd_run(args),
    }
}

fn cmd_flood(args: FloodArgs) -> Result<(), Box<dyn std::error::Error>> {
    let target_address: SocketAddr = match args.target.parse() {
        Ok(addr) => addr,
        // bare IP: any port works for icmp, port 9 (discard) for udp
        Err(_) => SocketAddr::new(args.target.parse()?, 9),
    };
    let config = FloodConfig {
        target_address,
        attacker_count: args.attackers,
        target_rate_pps: args.rate,
        duration_s: args.duration,
        payload_len: args.payload_len,
        transport_mode: args.mode,
    };

    let stop = StopHandle::new();
    let ctrlc_stop = stop.clone();
    unsafe {
        libc::signal(libc::SIGINT, sigint_handler as *const () as libc::sighandler_t);
    }
    SIGNAL_STOP.with_handle(ctrlc_stop);

    let stats = flood(&config, &stop)?;
    println!(
        "sent {} packets in {:.2} s ({:.0} pps achieved, target {} pps, {} send errors)",
        stats.packets_sent,
        stats.wall_duration_s,
        stats.achieved_rate_pps,
        config.target_rate_pps,
        stats.send_errors
    );
    Ok(())
}

// minimal SIGINT plumbing so a long flood can be interrupted cleanly
struct SignalStop(std::sync::Mutex<Option<StopHandle>>);

impl SignalStop {
    fn with_handle(&self, handle: StopHandle) {
        *self.0.lock().unwrap() = Some(handle);
    }

    fn stop(&self) {
        if let Some(handle) = self.0.lock().unwrap().as_ref() {
            handle.stop();
        }
    }
}

static SIGNAL_STOP: SignalStop = SignalStop(std::sync::Mutex::new(None));

extern "C" fn sigint_handler(_sig: libc::c_int) {
    SIGNAL_STOP.stop();
}

fn cmd_workload(args: WorkloadArgs) -> Result<(), Box<dyn std::error::Error>> {
    let config = BenchmarkConfig {
        iterations: args.iterations,
        dt_s: args.dt_ms / 1000.0,
        seed: args.seed,
        ..BenchmarkConfig::default()
    };
    let mut sink = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    let records = run_benchmark(&config, &mut sink)?;
    let summary = latency_summary(&records)?;
    println!(
        "{} iterations: median {:.3} ms, std {:.3} ms, min {:.3} ms, max {:.3} ms (log: {})",
        records.len(),
        summary.median_s * 1e3,
        summary.std_s * 1e3,
        summary.min_s * 1e3,
        summary.max_s * 1e3,
        args.out.display()
    );
    Ok(())
}

fn cmd_device_sim(args: DeviceSimArgs) -> Result<(), Box<dyn std::error::Error>> {
    let script = match &args.script {
        Some(path) => Some(DegradationScript::load(path)?),
        None => args.preset.script(args.attack_at),
    };
    let config = StreamConfig {
        bind_addr: SocketAddr::from(([0, 0, 0, 0], args.port)),
        sim: SimulatorConfig {
            duration_s: args.duration,
            seed: args.seed,
            ..SimulatorConfig::default()
        },
        script,
        time_scale: args.time_scale,
    };
    println!(
        "serving {} s of telemetry on port {} (time scale {}x)",
        args.duration, args.port, args.time_scale
    );
    let summary = stream(&config)?;
    println!(
        "generated {} samples, sent {}, scripted out {}, queue-dropped {}, clients {}",
        summary.samples_generated,
        summary.samples_sent,
        summary.samples_scripted_out,
        summary.samples_dropped_queue,
        summary.clients_served
    );
    Ok(())
}

fn cmd_record(args: RecordArgs) -> Result<(), Box<dyn std::error::Error>> {
    let meta_path = args
        .meta
        .unwrap_or_else(|| args.out.with_extension("meta.json"));
    let summary = record(args.endpoint, &args.out, &meta_path, args.duration)?;
    println!(
        "captured {} bytes in {:.2} s{} ({} gaps) -> {}",
        summary.bytes_captured,
        summary.wall_duration_s,
        if summary.early_termination {
            ", terminated early"
        } else {
            ""
        },
        summary.connection_gaps,
        args.out.display()
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct CaptureReport {
    t0_us: u64,
    decode: dosbench::stream_codec::DecodeDiagnostics,
    reference: dosbench::timing_analysis::PhaseMetrics,
    attack: dosbench::timing_analysis::PhaseMetrics,
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Box<dyn std::error::Error>> {
    let meta = CaptureMeta::load(&args.meta)?;
    let duration = args.duration.unwrap_or(meta.duration_s);
    let window = PhaseWindow::from_attack_schedule(args.attack_at, duration);
    let analysis = analyze_capture(&args.capture, &meta, &window)?;

    let report = CaptureReport {
        t0_us: analysis.t0_us,
        decode: analysis.decode,
        reference: analysis.reference,
        attack: analysis.attack,
    };
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)?;
    println!("report written to {}", args.out.display());

    if let Some(dir) = args.emit_plot_data {
        std::fs::create_dir_all(&dir)?;
        use std::io::Write;
        let mut f = std::fs::File::create(dir.join("increments.csv"))?;
        writeln!(f, "phase,t_rel_s,increment_s")?;
        for (phase, series) in [
            ("reference", &analysis.reference_series),
            ("attack", &analysis.attack_series),
        ] {
            for pair in series.tow_us().windows(2) {
                writeln!(
                    f,
                    "{phase},{:.6},{:.6}",
                    (pair[1] - analysis.t0_us) as f64 / 1e6,
                    (pair[1] - pair[0]) as f64 / 1e6
                )?;
            }
        }
        println!("plot data written to {}", dir.display());
    }
    Ok(())
}

fn cmd_analyze_latency(args: AnalyzeLatencyArgs) -> Result<(), Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(&args.log)?;
    let records = parse_latency_csv(&text)?;
    let summary = latency_summary(&records)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&summary)?)?;
    println!(
        "{} records: median {:.3} ms, p99 {:.3} ms, max {:.3} ms -> {}",
        summary.count,
        summary.median_s * 1e3,
        summary.p99_s * 1e3,
        summary.max_s * 1e3,
        args.out.display()
    );

    if let Some(dir) = args.emit_plot_data {
        std::fs::create_dir_all(&dir)?;
        use std::io::Write;
        let mut hist = std::fs::File::create(dir.join("latency_histogram.csv"))?;
        writeln!(hist, "bin_lo_s,bin_hi_s,count")?;
        let h = &summary.histogram;
        for (i, count) in h.counts.iter().enumerate() {
            writeln!(hist, "{:.9},{:.9},{count}", h.edges_s[i], h.edges_s[i + 1])?;
        }
        let mut durations = std::fs::File::create(dir.join("latency_series.csv"))?;
        writeln!(durations, "iteration,duration_s")?;
        for r in &records {
            writeln!(
                durations,
                "{},{:.9}",
                r.iteration,
                (r.t_exit_us - r.t_enter_us) as f64 / 1e6
            )?;
        }
        println!("plot data written to {}", dir.display());
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if args.live {
        config.gnss.mode = GnssMode::Live;
    } else if args.scripted {
        config.gnss.mode = GnssMode::Scripted;
    }

    let report = match config.scenario {
        Scenario::Gnss => run_gnss_experiment(&config, &args.out)?,
        Scenario::AdStack => run_adstack_experiment(&config, &args.out)?,
    };

    match config.scenario {
        Scenario::Gnss => {
            let fmt = |m: &Option<dosbench::timing_analysis::PhaseMetrics>| {
                m.as_ref()
                    .and_then(|m| m.mean_sample_rate_hz)
                    .map(|r| format!("{r:.2} Hz"))
                    .unwrap_or_else(|| "n/a".into())
            };
            println!(
                "{} runs ({} failed); pooled rate: reference {}, attack {}",
                report.gnss_runs.len(),
                report.gnss_runs.iter().filter(|r| r.failed).count(),
                fmt(&report.pooled_reference),
                fmt(&report.pooled_attack)
            );
        }
        Scenario::AdStack => {
            for p in &report.adstack_pairs {
                println!(
                    "run {}: median {:.3} -> {:.3} ms, p99 {:.3} -> {:.3} ms (flood {:.0} pps)",
                    p.run_index,
                    p.reference.median_s * 1e3,
                    p.under_attack.median_s * 1e3,
                    p.reference.p99_s * 1e3,
                    p.under_attack.p99_s * 1e3,
                    p.flood.achieved_rate_pps
                );
            }
        }
    }
    println!("artifacts in {}", args.out.display());
    Ok(())
}

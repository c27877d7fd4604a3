//! TCP streaming of generated runs: one generation loop paced on the
//! wall clock, one network writer, and a bounded drop-oldest queue
//! between them so a slow or absent client never stalls generation.

use std::collections::VecDeque;
use std::io::Write;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::generator::{generate_run, SimulatorConfig, TimedSample};
use super::script::{apply_script, DegradationScript};
use super::DeviceSimError;
use crate::stream_codec::{encode, FRAME_LEN};

/// The device's standard streaming port.
pub const DEFAULT_PORT: u16 = 6001;

const QUEUE_CAPACITY: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub bind_addr: SocketAddr,
    pub sim: SimulatorConfig,
    /// Scripted mode degrades the stream deterministically; live mode
    /// (no script) leaves degradation to genuine network and host load.
    pub script: Option<DegradationScript>,
    /// Simulated seconds per wall second. 1.0 streams in real time;
    /// larger values compress long protocols into short wall times.
    pub time_scale: f64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            bind_addr: SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)),
            sim: SimulatorConfig::default(),
            script: None,
            time_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub samples_generated: u64,
    /// Samples removed by the degradation script before transmission.
    pub samples_scripted_out: u64,
    pub samples_sent: u64,
    /// Samples displaced from the bounded queue while no client kept up.
    pub samples_dropped_queue: u64,
    pub clients_served: u32,
}

/// A streaming server running on background threads.
pub struct RunningStream {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: std::thread::JoinHandle<StreamSummary>,
}

impl RunningStream {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Ask the server to wind down before its scheduled end.
    pub fn stop(&self) {
        self.stop.store(true, Ordering::Release);
    }

    /// Block until the run completes and return its summary.
    pub fn wait(self) -> StreamSummary {
        self.handle.join().expect("stream server thread panicked")
    }
}

/// Serve the configured run over TCP; returns once the run ends.
pub fn stream(config: &StreamConfig) -> Result<StreamSummary, DeviceSimError> {
    Ok(spawn_stream(config)?.wait())
}

/// Bind and start serving in the background. Binding happens before this
/// returns, so the caller can connect to `local_addr` immediately.
pub fn spawn_stream(config: &StreamConfig) -> Result<RunningStream, DeviceSimError> {
    if !(config.time_scale > 0.0) {
        return Err(DeviceSimError::Config("time_scale must be positive".into()));
    }
    let listener = TcpListener::bind(config.bind_addr).map_err(|e| DeviceSimError::Bind {
        addr: config.bind_addr,
        source: e,
    })?;
    let local_addr = listener.local_addr().map_err(DeviceSimError::Io)?;

    // the whole run is generated up front; pacing only replays it
    let run = generate_run(&config.sim)?;
    let total = run.samples.len() as u64;
    let outgoing: Vec<TimedSample> = match &config.script {
        Some(script) => apply_script(&run.samples, script, config.sim.seed, config.sim.duration_s)?,
        None => run.samples,
    };
    let scripted_out = total - outgoing.len() as u64;

    let stop = Arc::new(AtomicBool::new(false));
    let queue = Arc::new(FrameQueue::new(QUEUE_CAPACITY));
    let done = Arc::new(AtomicBool::new(false));
    let sent = Arc::new(AtomicU64::new(0));
    let clients = Arc::new(AtomicU32::new(0));
    let time_scale = config.time_scale;
    let duration_s = config.sim.duration_s;

    let writer = {
        let queue = Arc::clone(&queue);
        let done = Arc::clone(&done);
        let sent = Arc::clone(&sent);
        let clients = Arc::clone(&clients);
        std::thread::spawn(move || write_loop(listener, &queue, &done, &sent, &clients))
    };

    let handle = {
        let stop = Arc::clone(&stop);
        std::thread::spawn(move || {
            let origin = Instant::now();
            for ts in &outgoing {
                if stop.load(Ordering::Acquire) {
                    break;
                }
                let wall_offset = Duration::from_secs_f64(ts.t_s / time_scale);
                sleep_until(origin + wall_offset, &stop);
                queue.push(encode(&ts.sample));
            }
            if !stop.load(Ordering::Acquire) {
                sleep_until(origin + Duration::from_secs_f64(duration_s / time_scale), &stop);
            }
            done.store(true, Ordering::Release);
            queue.wake_all();
            writer.join().expect("stream writer thread panicked");

            StreamSummary {
                samples_generated: total,
                samples_scripted_out: scripted_out,
                samples_sent: sent.load(Ordering::Relaxed),
                samples_dropped_queue: queue.dropped(),
                clients_served: clients.load(Ordering::Relaxed),
            }
        })
    };

    Ok(RunningStream {
        local_addr,
        stop,
        handle,
    })
}

fn sleep_until(deadline: Instant, stop: &AtomicBool) {
    loop {
        if stop.load(Ordering::Acquire) {
            return;
        }
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        std::thread::sleep((deadline - now).min(Duration::from_millis(20)));
    }
}

fn write_loop(
    listener: TcpListener,
    queue: &FrameQueue,
    done: &AtomicBool,
    sent: &AtomicU64,
    clients: &AtomicU32,
) {
    listener
        .set_nonblocking(true)
        .expect("listener nonblocking");
    loop {
        if done.load(Ordering::Acquire) && queue.is_empty() {
            return;
        }
        match listener.accept() {
            Ok((stream, peer)) => {
                clients.fetch_add(1, Ordering::Relaxed);
                let _ = stream.set_nodelay(true);
                serve_client(stream, peer, queue, done, sent);
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if done.load(Ordering::Acquire) {
                    // run over with nobody connected: the backlog has no
                    // recipient anymore
                    queue.clear();
                    return;
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => {
                log::warn!("accept failed: {e}");
                std::thread::sleep(Duration::from_millis(20));
            }
        }
    }
}

fn serve_client(
    mut stream: TcpStream,
    peer: SocketAddr,
    queue: &FrameQueue,
    done: &AtomicBool,
    sent: &AtomicU64,
) {
    loop {
        match queue.pop_timeout(Duration::from_millis(20)) {
            Some(frame) => {
                if let Err(e) = stream.write_all(&frame) {
                    log::info!("client {peer} disconnected: {e}; listening again");
                    return;
                }
                sent.fetch_add(1, Ordering::Relaxed);
            }
            None => {
                if done.load(Ordering::Acquire) && queue.is_empty() {
                    return;
                }
            }
        }
    }
}

/// Bounded FIFO of encoded frames; pushing onto a full queue displaces
/// the oldest frame.
struct FrameQueue {
    inner: Mutex<VecDeque<[u8; FRAME_LEN]>>,
    ready: Condvar,
    capacity: usize,
    dropped: AtomicU64,
}

impl FrameQueue {
    fn new(capacity: usize) -> Self {
        Self {
            inner: Mutex::new(VecDeque::with_capacity(capacity)),
            ready: Condvar::new(),
            capacity,
            dropped: AtomicU64::new(0),
        }
    }

    fn push(&self, frame: [u8; FRAME_LEN]) {
        let mut q = self.inner.lock().unwrap();
        if q.len() == self.capacity {
            q.pop_front();
            self.dropped.fetch_add(1, Ordering::Relaxed);
        }
        q.push_back(frame);
        drop(q);
        self.ready.notify_one();
    }

    fn pop_timeout(&self, timeout: Duration) -> Option<[u8; FRAME_LEN]> {
        let q = self.inner.lock().unwrap();
        let (mut q, _) = self
            .ready
            .wait_timeout_while(q, timeout, |q| q.is_empty())
            .unwrap();
        q.pop_front()
    }

    fn is_empty(&self) -> bool {
        self.inner.lock().unwrap().is_empty()
    }

    fn clear(&self) {
        self.inner.lock().unwrap().clear();
    }

    fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }

    fn wake_all(&self) {
        self.ready.notify_all();
    }
}

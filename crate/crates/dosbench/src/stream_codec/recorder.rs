//! Byte-transparent TCP capture to disk.
//!
//! The raw stream is written verbatim (never re-framed), so any decoding
//! problem can be reproduced from the file afterwards. A JSON sidecar
//! carries the capture start wall time and endpoint for phase alignment.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::CodecError;

/// Sidecar metadata stored next to a capture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaptureMeta {
    /// Wall-clock capture start, microseconds since the Unix epoch.
    pub start_unix_us: u64,
    pub endpoint: String,
    pub duration_s: f64,
    /// Time-of-week at run start, when the producer knows it (scripted
    /// captures). Live captures leave this unset and analysis falls back
    /// to the first decoded sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tow_start_us: Option<u64>,
    /// Simulated seconds per wall second during capture (1.0 = real time).
    #[serde(default = "default_time_scale")]
    pub time_scale: f64,
}

fn default_time_scale() -> f64 {
    1.0
}

impl CaptureMeta {
    pub fn load(path: &Path) -> Result<Self, CodecError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), CodecError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CaptureSummary {
    pub bytes_captured: u64,
    pub wall_duration_s: f64,
    /// Server closed the connection before the requested duration.
    pub early_termination: bool,
    /// Silent periods of at least one second while connected.
    pub connection_gaps: u32,
}

/// Record the raw byte stream from `endpoint` into `out_path` for
/// `duration_s` seconds, writing the sidecar metadata to `meta_path`.
pub fn record(
    endpoint: SocketAddr,
    out_path: &Path,
    meta_path: &Path,
    duration_s: f64,
) -> Result<CaptureSummary, CodecError> {
    let mut stream = TcpStream::connect_timeout(&endpoint, Duration::from_secs(5))
        .map_err(|e| CodecError::Endpoint { addr: endpoint, source: e })?;
    stream.set_read_timeout(Some(Duration::from_millis(50)))?;

    let start_wall = SystemTime::now();
    let meta = CaptureMeta {
        start_unix_us: start_wall.duration_since(UNIX_EPOCH).unwrap_or_default().as_micros()
            as u64,
        endpoint: endpoint.to_string(),
        duration_s,
        tow_start_us: None,
        time_scale: 1.0,
    };
    meta.save(meta_path)?;

    let mut out = BufWriter::new(File::create(out_path)?);
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(duration_s);
    let mut buf = [0u8; 8192];
    let mut bytes_captured = 0u64;
    let mut early_termination = false;
    let mut connection_gaps = 0u32;
    let mut last_data = Instant::now();
    let mut in_gap = false;

    while Instant::now() < deadline {
        match stream.read(&mut buf) {
            Ok(0) => {
                early_termination = true;
                break;
            }
            Ok(n) => {
                out.write_all(&buf[..n])?;
                bytes_captured += n as u64;
                last_data = Instant::now();
                in_gap = false;
            }
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                if !in_gap && last_data.elapsed() >= Duration::from_secs(1) {
                    connection_gaps += 1;
                    in_gap = true;
                }
            }
            Err(e) => {
                early_termination = true;
                let _ = e;
                break;
            }
        }
    }
    out.flush()?;

    Ok(CaptureSummary {
        bytes_captured,
        wall_duration_s: started.elapsed().as_secs_f64(),
        early_termination,
        connection_gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;

    #[test]
    fn zero_length_capture_writes_empty_file() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (_stream, _) = listener.accept().unwrap();
            std::thread::sleep(Duration::from_millis(100));
        });

        let dir = tempfile::tempdir().unwrap();
        let anb = dir.path().join("cap.anb");
        let meta = dir.path().join("meta.json");
        let summary = record(addr, &anb, &meta, 0.0).unwrap();
        server.join().unwrap();

        assert_eq!(summary.bytes_captured, 0);
        assert_eq!(std::fs::metadata(&anb).unwrap().len(), 0);
        let loaded = CaptureMeta::load(&meta).unwrap();
        assert_eq!(loaded.endpoint, addr.to_string());
    }

    #[test]
    fn capture_is_byte_transparent() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let payload: Vec<u8> = (0..=255u8).cycle().take(4096).collect();
        let expected = payload.clone();
        let server = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            stream.write_all(&payload).unwrap();
            // keep the socket open past the capture window
            std::thread::sleep(Duration::from_millis(400));
        });

        let dir = tempfile::tempdir().unwrap();
        let anb = dir.path().join("cap.anb");
        let meta = dir.path().join("meta.json");
        let summary = record(addr, &anb, &meta, 0.3).unwrap();
        server.join().unwrap();

        assert_eq!(summary.bytes_captured, expected.len() as u64);
        assert!(!summary.early_termination);
        assert_eq!(std::fs::read(&anb).unwrap(), expected);
    }

    #[test]
    fn server_close_flags_early_termination() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            stream.write_all(b"abc").unwrap();
        });

        let dir = tempfile::tempdir().unwrap();
        let summary = record(
            addr,
            &dir.path().join("cap.anb"),
            &dir.path().join("meta.json"),
            2.0,
        )
        .unwrap();
        server.join().unwrap();

        assert!(summary.early_termination);
        assert_eq!(summary.bytes_captured, 3);
        assert!(summary.wall_duration_s < 2.0);
    }

    #[test]
    fn unreachable_endpoint_is_an_endpoint_error() {
        // bind then drop to get a port with no listener
        let addr = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap()
        };
        let dir = tempfile::tempdir().unwrap();
        let err = record(
            addr,
            &dir.path().join("cap.anb"),
            &dir.path().join("meta.json"),
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, CodecError::Endpoint { .. }));
    }
}

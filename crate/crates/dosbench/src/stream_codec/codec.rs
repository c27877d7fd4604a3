//! Solution packet framing: encoder and resynchronizing stream decoder.
//!
//! Frame layout (all multi-byte integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     2  sync      0xA5 0x5A
//!      2     1  version   0x01
//!      3     1  msg_id    0x10 (position solution)
//!      4     2  payload_len = 30
//!      6    30  payload: tow_us u64, sys_time_us u64,
//!                        east_mm i32, north_mm i32, up_mm i32,
//!                        fix_status u8, pad u8 = 0
//!     36     2  crc       CRC-16/CCITT-FALSE over bytes 2..36
//! ```

use crate::device_sim::{FixStatus, SolutionSample};

use super::crc::crc16_ccitt_false;

pub const SYNC: [u8; 2] = [0xA5, 0x5A];
pub const VERSION: u8 = 0x01;
pub const MSG_SOLUTION: u8 = 0x10;
pub const PAYLOAD_LEN: usize = 30;
/// Full frame size: sync + version + msg_id + length + payload + crc.
pub const FRAME_LEN: usize = 6 + PAYLOAD_LEN + 2;

/// Serialize one sample into its fixed 38-byte frame.
pub fn encode(sample: &SolutionSample) -> [u8; FRAME_LEN] {
    let mut frame = [0u8; FRAME_LEN];
    frame[0..2].copy_from_slice(&SYNC);
    frame[2] = VERSION;
    frame[3] = MSG_SOLUTION;
    frame[4..6].copy_from_slice(&(PAYLOAD_LEN as u16).to_le_bytes());
    frame[6..14].copy_from_slice(&sample.tow_us.to_le_bytes());
    frame[14..22].copy_from_slice(&sample.sys_time_us.to_le_bytes());
    frame[22..26].copy_from_slice(&sample.east_mm.to_le_bytes());
    frame[26..30].copy_from_slice(&sample.north_mm.to_le_bytes());
    frame[30..34].copy_from_slice(&sample.up_mm.to_le_bytes());
    frame[34] = sample.fix_status.as_u8();
    frame[35] = 0; // pad
    let crc = crc16_ccitt_false(&frame[2..36]);
    frame[36..38].copy_from_slice(&crc.to_le_bytes());
    frame
}

/// Counters accumulated while decoding a stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DecodeDiagnostics {
    pub packets_ok: u64,
    /// Frames with a plausible header whose CRC (or payload validation)
    /// failed.
    pub crc_failures: u64,
    /// Bytes consumed without contributing to an accepted frame.
    pub bytes_skipped: u64,
    /// Bytes of an incomplete frame left at end of input.
    pub truncated_trailing_bytes: u64,
}

/// Incremental decoder: feed arbitrary byte chunks, get samples out.
///
/// Scans for the sync word, validates header fields and CRC, and on any
/// failure advances a single byte past the failed sync candidate before
/// rescanning — after corruption, at most the corrupted frame plus the
/// bytes up to the next valid sync word are lost.
#[derive(Debug, Default)]
pub struct StreamDecoder {
    buf: Vec<u8>,
    diagnostics: DecodeDiagnostics,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn diagnostics(&self) -> DecodeDiagnostics {
        self.diagnostics
    }

    /// Bytes buffered but not yet resolvable into a frame.
    pub fn pending_bytes(&self) -> usize {
        self.buf.len()
    }

    /// Consume a chunk, appending every decodable sample to `out`.
    pub fn feed(&mut self, bytes: &[u8], out: &mut Vec<SolutionSample>) {
        self.buf.extend_from_slice(bytes);
        let mut pos = 0usize;

        while pos < self.buf.len() {
            if self.buf[pos] != SYNC[0] {
                pos += 1;
                self.diagnostics.bytes_skipped += 1;
                continue;
            }
            if pos + 1 >= self.buf.len() {
                break; // possible sync split across chunks
            }
            if self.buf[pos + 1] != SYNC[1] {
                pos += 1;
                self.diagnostics.bytes_skipped += 1;
                continue;
            }
            if pos + FRAME_LEN > self.buf.len() {
                break; // incomplete frame, wait for more input
            }
            let frame = &self.buf[pos..pos + FRAME_LEN];
            match parse_frame(frame) {
                FrameResult::Ok(sample) => {
                    out.push(sample);
                    self.diagnostics.packets_ok += 1;
                    pos += FRAME_LEN;
                }
                FrameResult::BadHeader => {
                    pos += 1;
                    self.diagnostics.bytes_skipped += 1;
                }
                FrameResult::BadCrc => {
                    self.diagnostics.crc_failures += 1;
                    pos += 1;
                    self.diagnostics.bytes_skipped += 1;
                }
            }
        }
        self.buf.drain(..pos);
    }

    /// End of input: any buffered remainder is a truncated final frame.
    pub fn finish(mut self) -> DecodeDiagnostics {
        self.diagnostics.truncated_trailing_bytes = self.buf.len() as u64;
        self.diagnostics
    }
}

enum FrameResult {
    Ok(SolutionSample),
    BadHeader,
    BadCrc,
}

fn parse_frame(frame: &[u8]) -> FrameResult {
    debug_assert_eq!(frame.len(), FRAME_LEN);
    if frame[2] != VERSION || frame[3] != MSG_SOLUTION {
        return FrameResult::BadHeader;
    }
    let len = u16::from_le_bytes([frame[4], frame[5]]);
    if len as usize != PAYLOAD_LEN {
        return FrameResult::BadHeader;
    }
    let stored = u16::from_le_bytes([frame[36], frame[37]]);
    if crc16_ccitt_false(&frame[2..36]) != stored {
        return FrameResult::BadCrc;
    }
    let Some(fix_status) = FixStatus::from_u8(frame[34]) else {
        return FrameResult::BadCrc;
    };
    FrameResult::Ok(SolutionSample {
        tow_us: u64::from_le_bytes(frame[6..14].try_into().unwrap()),
        sys_time_us: u64::from_le_bytes(frame[14..22].try_into().unwrap()),
        east_mm: i32::from_le_bytes(frame[22..26].try_into().unwrap()),
        north_mm: i32::from_le_bytes(frame[26..30].try_into().unwrap()),
        up_mm: i32::from_le_bytes(frame[30..34].try_into().unwrap()),
        fix_status,
    })
}

/// Decode a complete in-memory stream in one call.
pub fn decode_all(bytes: &[u8]) -> (Vec<SolutionSample>, DecodeDiagnostics) {
    let mut decoder = StreamDecoder::new();
    let mut out = Vec::new();
    decoder.feed(bytes, &mut out);
    let diagnostics = decoder.finish();
    (out, diagnostics)
}

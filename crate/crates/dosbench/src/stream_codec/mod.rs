//! Binary wire protocol for telemetry samples: bit-exact framing with a
//! CRC trailer, a stream decoder that resynchronizes after corruption,
//! and a byte-transparent capture recorder.

mod codec;
mod crc;
mod recorder;

pub use codec::{
    decode_all, encode, DecodeDiagnostics, StreamDecoder, FRAME_LEN, MSG_SOLUTION, PAYLOAD_LEN,
    SYNC, VERSION,
};
pub use crc::crc16_ccitt_false;
pub use recorder::{record, CaptureMeta, CaptureSummary};

use std::net::SocketAddr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("cannot reach capture endpoint {addr}: {source}")]
    Endpoint {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("capture metadata: {0}")]
    Meta(#[from] serde_json::Error),
}

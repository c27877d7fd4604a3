//! ICMP echo request construction and sustained flood traffic generation.
//!
//! The flood engine paces one or more logical attacker workers against an
//! aggregate packet-per-second target. Raw ICMP (protocol 1) is used when
//! the process has the privileges for it; a UDP fallback carries the same
//! serialized echo-request bytes so rate control and timing behave
//! identically without elevated privileges.

mod flood;
mod icmp;

pub use flood::{flood, raw_icmp_available, FloodConfig, FloodStats, StopHandle, TransportMode};
pub use icmp::{
    build_echo_request, compute_checksum, verify_checksum, IcmpEchoPacket, ICMP_HEADER_LEN,
    IP_HEADER_LEN, MAX_PAYLOAD_LEN,
};

use std::net::SocketAddr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FloodError {
    /// Payload would push the serialized packet past the MTU budget.
    #[error("payload of {got} bytes exceeds the {max}-byte MTU budget")]
    PayloadTooLarge { got: usize, max: usize },

    /// Socket creation failed for lack of privileges.
    #[error(
        "raw ICMP sockets require elevated privileges (CAP_NET_RAW or root); \
         re-run privileged or select the udp transport mode"
    )]
    Privilege(#[source] std::io::Error),

    /// The target address is unusable (unroutable, wrong family, ...).
    #[error("target endpoint {addr} is unusable: {source}")]
    Endpoint {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid flood configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Binary framing between robot and edge.
//!
//! Every frame is an 18-byte little-endian header, a kind-specific payload,
//! and a CRC-32 trailer over both. Physical quantities travel as fixed-point
//! integers: millimetres and microradians.
//!
//! ```text
//! offset size field
//!      0    2 magic 0xED6E
//!      2    1 version (1)
//!      3    1 kind: 1 ImuBatch, 2 Rtt, 3 Command, 4 Heartbeat
//!      4    4 seq
//!      8    8 timestamp_us
//!     16    2 payload_len
//!     18    n payload
//!   18+n    4 crc32(header ‖ payload)
//! ```

mod codec;
mod crc;
mod frame;

pub use codec::{decode_frame, encode_frame, write_frame, FrameReader};
pub use crc::crc32;
pub use frame::{
    metres_to_mm, mm_to_metres, radians_to_urad, range_to_mm, Command, Frame, FrameKind, ImuTick, Payload,
    ResidualQuantizer, TickQuantizer, CRC_LEN, HEADER_LEN, IMU_TICK_LEN, MAGIC, MAX_PAYLOAD_LEN, MIN_FRAME_LEN, MM,
    URAD, VERSION,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad magic {0:#06x}")]
    BadMagic(u16),
    #[error("CRC mismatch: trailer {found:#010x}, computed {computed:#010x}")]
    CorruptFrame { found: u32, computed: u32 },
    #[error("unknown frame kind {0}")]
    UnknownKind(u8),
    #[error("truncated frame: {have} of {needed} bytes")]
    Truncated { needed: usize, have: usize },
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("payload of {0} bytes exceeds the 65535-byte limit")]
    PayloadTooLarge(usize),
    #[error("an IMU batch needs at least one tick")]
    EmptyBatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

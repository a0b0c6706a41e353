use std::io::{self, Read, Write};

use crate::geom::Timestamp;

use super::frame::*;
use super::{crc32, WireError};

/// Serializes a frame: header ‖ payload ‖ CRC-32 of both, little-endian.
pub fn encode_frame(f: &Frame) -> Result<Vec<u8>, WireError> {
    let payload_len = f.payload.encoded_len();
    if payload_len > MAX_PAYLOAD_LEN {
        return Err(WireError::PayloadTooLarge(payload_len));
    }
    let mut b = Vec::with_capacity(MIN_FRAME_LEN + payload_len);
    b.extend_from_slice(&MAGIC.to_le_bytes());
    b.push(VERSION);
    b.push(f.kind().code());
    b.extend_from_slice(&f.seq.to_le_bytes());
    b.extend_from_slice(&f.timestamp.0.to_le_bytes());
    b.extend_from_slice(&(payload_len as u16).to_le_bytes());
    match &f.payload {
        Payload::ImuBatch(ticks) => {
            if ticks.is_empty() {
                return Err(WireError::EmptyBatch);
            }
            b.extend_from_slice(&(ticks.len() as u16).to_le_bytes());
            for t in ticks {
                b.extend_from_slice(&t.dt_us.to_le_bytes());
                b.extend_from_slice(&t.dd_mm.to_le_bytes());
                b.extend_from_slice(&t.dtheta_urad.to_le_bytes());
            }
        }
        Payload::Rtt { ap_id, range_mm } => {
            b.push(*ap_id);
            b.extend_from_slice(&range_mm.to_le_bytes());
        }
        Payload::Command(c) => {
            b.extend_from_slice(&c.v_mmps.to_le_bytes());
            b.extend_from_slice(&c.omega_urad_ps.to_le_bytes());
            b.extend_from_slice(&c.duration_ms.to_le_bytes());
        }
        Payload::Heartbeat => {}
    }
    let crc = crc32(&b);
    b.extend_from_slice(&crc.to_le_bytes());
    Ok(b)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn i32_at(b: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Whether `payload_len` is a size a frame of `kind` can have, also checking
/// the batch count when its bytes are present.
fn length_fits_kind(kind: FrameKind, payload_len: usize, payload: &[u8]) -> bool {
    match kind {
        FrameKind::ImuBatch => {
            let ticks = payload_len.saturating_sub(2) / IMU_TICK_LEN;
            payload_len == 2 + IMU_TICK_LEN * ticks
                && ticks >= 1
                && (payload.len() < 2 || u16_at(payload, 0) as usize == ticks)
        }
        FrameKind::Rtt => payload_len == 5,
        FrameKind::Command => payload_len == 10,
        FrameKind::Heartbeat => payload_len == 0,
    }
}

/// Total frame size announced by an undamaged-looking header, `None` if the
/// header is incomplete, `Some(Err(()))` if it is self-inconsistent.
fn announced_len(b: &[u8]) -> Option<Result<usize, ()>> {
    if b.len() < HEADER_LEN {
        return None;
    }
    let Some(kind) = FrameKind::from_code(b[3]) else {
        return Some(Err(()));
    };
    let payload_len = u16_at(b, 16) as usize;
    let payload = &b[HEADER_LEN..b.len().min(HEADER_LEN + payload_len)];
    if b[2] != VERSION || !length_fits_kind(kind, payload_len, payload) {
        return Some(Err(()));
    }
    Some(Ok(MIN_FRAME_LEN + payload_len))
}

/// Parses exactly one frame occupying all of `b`.
///
/// When the CRC does not match, the error says why as far as the bytes
/// allow: a buffer whose intact-looking header announces more bytes than
/// are present is `Truncated`; a magic more than one bit away from ours is
/// `BadMagic`; anything else is `CorruptFrame`. Every single-bit error in a
/// valid encoding therefore reports `CorruptFrame`.
pub fn decode_frame(b: &[u8]) -> Result<Frame, WireError> {
    let n = b.len();
    if n < 2 {
        return Err(WireError::Truncated {
            needed: MIN_FRAME_LEN,
            have: n,
        });
    }
    let magic = u16_at(b, 0);
    let crc_ok = n >= MIN_FRAME_LEN && crc32(&b[..n - CRC_LEN]) == u32_at(b, n - CRC_LEN);
    if !crc_ok {
        if (magic ^ MAGIC).count_ones() > 1 {
            return Err(WireError::BadMagic(magic));
        }
        if magic == MAGIC {
            match announced_len(b) {
                None => {
                    return Err(WireError::Truncated {
                        needed: MIN_FRAME_LEN,
                        have: n,
                    })
                }
                Some(Ok(total)) if total > n => return Err(WireError::Truncated { needed: total, have: n }),
                _ => {}
            }
        }
        if n < MIN_FRAME_LEN {
            return Err(WireError::Truncated {
                needed: MIN_FRAME_LEN,
                have: n,
            });
        }
        return Err(WireError::CorruptFrame {
            found: u32_at(b, n - CRC_LEN),
            computed: crc32(&b[..n - CRC_LEN]),
        });
    }

    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    if b[2] != VERSION {
        return Err(WireError::UnsupportedVersion(b[2]));
    }
    let kind = FrameKind::from_code(b[3]).ok_or(WireError::UnknownKind(b[3]))?;
    let seq = u32_at(b, 4);
    let timestamp = Timestamp(u64_at(b, 8));
    let payload_len = u16_at(b, 16) as usize;
    if payload_len != n - MIN_FRAME_LEN {
        return Err(WireError::Malformed(format!(
            "payload_len {payload_len} but {} payload bytes present",
            n - MIN_FRAME_LEN
        )));
    }
    let p = &b[HEADER_LEN..HEADER_LEN + payload_len];
    if !length_fits_kind(kind, payload_len, p) {
        return Err(WireError::Malformed(format!("{payload_len}-byte payload for {kind:?}")));
    }
    let payload = match kind {
        FrameKind::ImuBatch => Payload::ImuBatch(
            p[2..]
                .chunks_exact(IMU_TICK_LEN)
                .map(|c| ImuTick {
                    dt_us: u32_at(c, 0),
                    dd_mm: i32_at(c, 4),
                    dtheta_urad: i32_at(c, 8),
                })
                .collect(),
        ),
        FrameKind::Rtt => Payload::Rtt {
            ap_id: p[0],
            range_mm: u32_at(p, 1),
        },
        FrameKind::Command => Payload::Command(Command {
            v_mmps: i32_at(p, 0),
            omega_urad_ps: i32_at(p, 4),
            duration_ms: u16_at(p, 8),
        }),
        FrameKind::Heartbeat => Payload::Heartbeat,
    };
    Ok(Frame {
        seq,
        timestamp,
        payload,
    })
}

/// Writes one encoded frame.
pub fn write_frame<W: Write>(w: &mut W, f: &Frame) -> Result<(), WireError> {
    w.write_all(&encode_frame(f)?)?;
    Ok(())
}

/// Splits a byte stream into frames using the header's `payload_len`.
#[derive(Debug)]
pub struct FrameReader<R> {
    inner: R,
    buf: Vec<u8>,
}

impl<R: Read> FrameReader<R> {
    pub fn new(inner: R) -> Self {
        FrameReader {
            inner,
            buf: Vec::with_capacity(256),
        }
    }

    pub fn get_ref(&self) -> &R {
        &self.inner
    }

    pub fn into_inner(self) -> R {
        self.inner
    }

    /// Reads into `buf[from..]`; returns the number of bytes actually read
    /// before end of stream.
    fn fill(&mut self, from: usize) -> io::Result<usize> {
        let mut at = from;
        while at < self.buf.len() {
            match self.inner.read(&mut self.buf[at..]) {
                Ok(0) => break,
                Ok(k) => at += k,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        Ok(at - from)
    }

    /// Next frame, or `None` on a clean end of stream between frames.
    ///
    /// A CRC failure consumes exactly the announced frame, so the stream
    /// stays aligned. A bad magic leaves the stream position undefined.
    pub fn next_frame(&mut self) -> Result<Option<Frame>, WireError> {
        self.buf.clear();
        self.buf.resize(HEADER_LEN, 0);
        let got = self.fill(0)?;
        if got == 0 {
            return Ok(None);
        }
        if got < HEADER_LEN {
            return Err(decode_frame(&self.buf[..got]).err().unwrap_or(WireError::Truncated {
                needed: MIN_FRAME_LEN,
                have: got,
            }));
        }
        let magic = u16_at(&self.buf, 0);
        if magic != MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        let rest = u16_at(&self.buf, 16) as usize + CRC_LEN;
        self.buf.resize(HEADER_LEN + rest, 0);
        let got = self.fill(HEADER_LEN)?;
        if got < rest {
            return Err(WireError::Truncated {
                needed: HEADER_LEN + rest,
                have: HEADER_LEN + got,
            });
        }
        decode_frame(&self.buf).map(Some)
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<Frame, WireError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

//! Byte-stream plumbing shared by the robot and the edge: an in-process pipe
//! for loopback runs and an incremental frame assembler for non-blocking
//! receivers.

use std::io::{self, Read, Write};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};

use crate::wire::{decode_frame, Frame, WireError, HEADER_LEN, MAGIC, MIN_FRAME_LEN};

/// An unbounded in-memory byte pipe. Dropping the writer ends the stream.
pub fn pipe() -> (PipeWriter, PipeReader) {
    let (tx, rx) = mpsc::channel();
    (
        PipeWriter { tx },
        PipeReader {
            rx,
            chunk: Vec::new(),
            pos: 0,
        },
    )
}

#[derive(Debug, Clone)]
pub struct PipeWriter {
    tx: Sender<Vec<u8>>,
}

impl Write for PipeWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        self.tx
            .send(buf.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "pipe reader dropped"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug)]
pub struct PipeReader {
    rx: Receiver<Vec<u8>>,
    chunk: Vec<u8>,
    pos: usize,
}

impl PipeReader {
    /// Appends whatever is available without blocking. Returns `false` once
    /// the writer is gone and everything has been read.
    pub fn read_available(&mut self, out: &mut Vec<u8>) -> bool {
        out.extend_from_slice(&self.chunk[self.pos..]);
        self.chunk.clear();
        self.pos = 0;
        loop {
            match self.rx.try_recv() {
                Ok(c) => out.extend_from_slice(&c),
                Err(TryRecvError::Empty) => return true,
                Err(TryRecvError::Disconnected) => return false,
            }
        }
    }
}

impl Read for PipeReader {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if self.pos == self.chunk.len() {
            match self.rx.recv() {
                Ok(c) => {
                    self.chunk = c;
                    self.pos = 0;
                }
                Err(_) => return Ok(0),
            }
        }
        let k = buf.len().min(self.chunk.len() - self.pos);
        buf[..k].copy_from_slice(&self.chunk[self.pos..self.pos + k]);
        self.pos += k;
        Ok(k)
    }
}

/// Accumulates received bytes and yields complete frames.
#[derive(Debug, Default)]
pub struct FrameAssembler {
    buf: Vec<u8>,
}

impl FrameAssembler {
    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Next complete frame, if one is buffered. On a bad magic the buffer is
    /// discarded, since frame boundaries are lost.
    pub fn next_frame(&mut self) -> Option<Result<Frame, WireError>> {
        if self.buf.len() < HEADER_LEN {
            return None;
        }
        let magic = u16::from_le_bytes([self.buf[0], self.buf[1]]);
        if magic != MAGIC {
            self.buf.clear();
            return Some(Err(WireError::BadMagic(magic)));
        }
        let total = MIN_FRAME_LEN + u16::from_le_bytes([self.buf[16], self.buf[17]]) as usize;
        if self.buf.len() < total {
            return None;
        }
        let r = decode_frame(&self.buf[..total]);
        self.buf.drain(..total);
        Some(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Timestamp;
    use crate::wire::{encode_frame, FrameReader};

    #[test]
    fn pipe_carries_frames_and_ends() {
        let (mut w, r) = pipe();
        for k in 0..3 {
            w.write_all(&encode_frame(&Frame::heartbeat(k, Timestamp(k as u64))).unwrap())
                .unwrap();
        }
        drop(w);
        let seqs: Vec<u32> = FrameReader::new(r).map(|f| f.unwrap().seq).collect();
        assert_eq!(seqs, vec![0, 1, 2]);
    }

    #[test]
    fn assembler_handles_split_input() {
        let mut bytes = Vec::new();
        for k in 0..4 {
            bytes.extend(encode_frame(&Frame::heartbeat(k, Timestamp(7))).unwrap());
        }
        let mut a = FrameAssembler::default();
        let mut got = Vec::new();
        for piece in bytes.chunks(5) {
            a.push(piece);
            while let Some(f) = a.next_frame() {
                got.push(f.unwrap().seq);
            }
        }
        assert_eq!(got, vec![0, 1, 2, 3]);
        assert_eq!(a.buffered(), 0);
    }

    #[test]
    fn non_blocking_read_reports_closure() {
        let (mut w, mut r) = pipe();
        w.write_all(b"abc").unwrap();
        let mut out = Vec::new();
        assert!(r.read_available(&mut out));
        assert_eq!(out, b"abc");
        drop(w);
        assert!(!r.read_available(&mut out));
    }
}

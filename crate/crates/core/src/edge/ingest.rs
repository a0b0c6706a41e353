use crate::geom::Timestamp;
use crate::sim::{OdometrySample, RttSample};
use crate::wire::{mm_to_metres, Frame, Payload};

use super::EdgeError;

/// Rejects repeated or regressed sequence numbers and counts gaps.
#[derive(Debug, Clone, Default)]
pub struct SeqTracker {
    last: Option<u32>,
    gaps: u64,
    duplicates: u64,
}

impl SeqTracker {
    /// Accepts `seq` if it is newer than everything seen. Returns how many
    /// sequence numbers were skipped on the way.
    pub fn accept(&mut self, seq: u32) -> Result<u32, EdgeError> {
        match self.last {
            Some(last) if seq <= last => {
                self.duplicates += 1;
                Err(EdgeError::DuplicateFrame { seq, last })
            }
            last => {
                let gap = last.map_or(seq, |l| seq - l - 1);
                self.gaps += gap as u64;
                self.last = Some(seq);
                Ok(gap)
            }
        }
    }

    /// Sequence numbers never received.
    pub fn gaps(&self) -> u64 {
        self.gaps
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }
}

/// Estimator input carried by a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IngestEvent {
    Odometry(OdometrySample),
    Range(RttSample),
    Heartbeat(Timestamp),
}

impl IngestEvent {
    pub fn time(&self) -> Timestamp {
        match self {
            IngestEvent::Odometry(o) => o.t,
            IngestEvent::Range(r) => r.t,
            IngestEvent::Heartbeat(t) => *t,
        }
    }
}

/// Unpacks a frame into time-ordered events. Commands are robot-bound and
/// yield nothing.
pub fn unpack(frame: &Frame) -> Vec<IngestEvent> {
    match &frame.payload {
        Payload::ImuBatch(_) => frame.odometry().into_iter().map(IngestEvent::Odometry).collect(),
        Payload::Rtt { ap_id, range_mm } => vec![IngestEvent::Range(RttSample {
            t: frame.timestamp,
            ap_id: *ap_id,
            range: mm_to_metres(*range_mm as i64),
        })],
        Payload::Heartbeat => vec![IngestEvent::Heartbeat(frame.timestamp)],
        Payload::Command(_) => Vec::new(),
    }
}

use std::collections::VecDeque;

use crate::wire::FrameKind;

/// Default transmit buffer capacity, in frames.
pub const DEFAULT_TX_CAPACITY: usize = 64;

/// An encoded frame waiting for the link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueuedFrame {
    pub kind: FrameKind,
    /// IMU ticks carried, zero for other kinds.
    pub ticks: usize,
    pub bytes: Vec<u8>,
}

/// What happened to a frame offered to a full or non-full buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PushOutcome {
    Queued,
    /// Queued after evicting this older frame.
    QueuedEvicting(QueuedFrame),
    /// The offered frame was discarded.
    Dropped(QueuedFrame),
}

/// Bounded FIFO that sheds IMU batches before anything else.
///
/// When full, a new frame evicts the oldest queued IMU batch. With no IMU
/// batch queued the new frame itself is dropped. Order among surviving
/// frames is preserved.
#[derive(Debug, Clone)]
pub struct TxBuffer {
    capacity: usize,
    queue: VecDeque<QueuedFrame>,
}

impl TxBuffer {
    pub fn new(capacity: usize) -> Self {
        TxBuffer {
            capacity: capacity.max(1),
            queue: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() >= self.capacity
    }

    pub fn front(&self) -> Option<&QueuedFrame> {
        self.queue.front()
    }

    pub fn pop_front(&mut self) -> Option<QueuedFrame> {
        self.queue.pop_front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &QueuedFrame> {
        self.queue.iter()
    }

    pub fn push(&mut self, frame: QueuedFrame) -> PushOutcome {
        if !self.is_full() {
            self.queue.push_back(frame);
            return PushOutcome::Queued;
        }
        match self.queue.iter().position(|q| q.kind == FrameKind::ImuBatch) {
            Some(k) => {
                let evicted = self.queue.remove(k).expect("index from position");
                self.queue.push_back(frame);
                PushOutcome::QueuedEvicting(evicted)
            }
            None => PushOutcome::Dropped(frame),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(kind: FrameKind, tag: u8) -> QueuedFrame {
        QueuedFrame {
            kind,
            ticks: if kind == FrameKind::ImuBatch { 20 } else { 0 },
            bytes: vec![tag],
        }
    }

    #[test]
    fn not_full_always_queues() {
        let mut b = TxBuffer::new(3);
        for k in 0..3 {
            assert_eq!(b.push(q(FrameKind::Rtt, k)), PushOutcome::Queued);
        }
        assert!(b.is_full());
    }

    #[test]
    fn rtt_evicts_oldest_imu() {
        let mut b = TxBuffer::new(3);
        b.push(q(FrameKind::ImuBatch, 0));
        b.push(q(FrameKind::ImuBatch, 1));
        b.push(q(FrameKind::ImuBatch, 2));
        assert_eq!(
            b.push(q(FrameKind::Rtt, 3)),
            PushOutcome::QueuedEvicting(q(FrameKind::ImuBatch, 0))
        );
        let tags: Vec<u8> = b.iter().map(|f| f.bytes[0]).collect();
        assert_eq!(tags, vec![1, 2, 3]);
    }

    #[test]
    fn full_of_rtt_drops_the_newcomer() {
        let mut b = TxBuffer::new(2);
        b.push(q(FrameKind::Rtt, 0));
        b.push(q(FrameKind::Rtt, 1));
        assert_eq!(
            b.push(q(FrameKind::ImuBatch, 2)),
            PushOutcome::Dropped(q(FrameKind::ImuBatch, 2))
        );
        assert_eq!(b.push(q(FrameKind::Rtt, 3)), PushOutcome::Dropped(q(FrameKind::Rtt, 3)));
    }

    #[test]
    fn imu_replaces_older_imu_behind_rtt() {
        let mut b = TxBuffer::new(2);
        b.push(q(FrameKind::Rtt, 0));
        b.push(q(FrameKind::ImuBatch, 1));
        assert_eq!(
            b.push(q(FrameKind::ImuBatch, 2)),
            PushOutcome::QueuedEvicting(q(FrameKind::ImuBatch, 1))
        );
        let tags: Vec<u8> = b.iter().map(|f| f.bytes[0]).collect();
        assert_eq!(tags, vec![0, 2]);
    }
}

//! The robot node: a thin sensor relay.
//!
//! It batches odometry ticks into frames, queues them in a bounded transmit
//! buffer that sheds IMU data first under congestion, streams them to the
//! edge and logs the commands that come back. In closed-loop mode those
//! commands drive a simulated unicycle.

mod buffer;
mod link;
mod session;
mod source;

pub use buffer::{PushOutcome, QueuedFrame, TxBuffer, DEFAULT_TX_CAPACITY};
pub use link::{Link, PipeLink, StalledLink, TcpLink};
pub use session::{
    apply_command, run_robot, CommandLog, KindCounts, RobotConfig, RobotSession, SessionReport, SessionStats,
    StallWindow,
};
pub use source::{ClosedLoopSource, OpenLoopSource, SensorSource, SensorTick};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RobotError {
    #[error("transport failed after {} frames sent: {source}", stats.sent_total())]
    Transport {
        source: std::io::Error,
        stats: Box<SessionStats>,
    },
}

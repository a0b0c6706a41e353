//! The edge controller: the robot's offloaded brain.
//!
//! Frames from the robot are decoded and sequence-checked on an ingest
//! thread, then a control task aligns 100 Hz odometry with 5 Hz RTT epochs,
//! builds one keyframe per epoch, re-solves the pose graph periodically and
//! plans velocity commands toward the next waypoint.

mod controller;
mod ingest;
mod planner;
mod scheduler;

pub use controller::{
    run_edge, EdgeConfig, EdgeController, EdgeReport, EdgeStats, EdgeStatus, EdgeTuning, EstimateState, SolveRecord,
};
pub use ingest::{unpack, IngestEvent, SeqTracker};
pub use planner::{plan_command, Plan, PlannerConfig};
pub use scheduler::{Action, Scheduler, SchedulerConfig};

use thiserror::Error;

use crate::estimator::EstimatorError;
use crate::wire::WireError;

#[derive(Debug, Error)]
pub enum EdgeError {
    #[error("frame seq {seq} is not newer than {last}")]
    DuplicateFrame { seq: u32, last: u32 },
    #[error("no waypoints left to plan toward")]
    NoWaypoints,
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

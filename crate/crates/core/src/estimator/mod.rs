//! Localization: dead reckoning, RTT-fingerprint loop closures and a robust
//! 2D pose-graph back end.
//!
//! Keyframes are created once per RTT epoch. The odometry between two
//! keyframes becomes one relative-pose edge, and fingerprint matches become
//! position-only loop edges whose influence is scaled by Dynamic Covariance
//! Scaling when the solver runs in robust mode.

mod backend;
mod fingerprint;
mod graph;
mod keyframe;
mod loops;
mod pdr;
mod residuals;
mod solver;
pub mod sparse;

pub use backend::{IncrementalSolver, SolveOutcome};
pub use fingerprint::{fingerprint_distance, Fingerprint};
pub use graph::{KeyframeNode, LoopEdge, OdomEdge, PoseGraph};
pub use keyframe::{
    make_keyframe, odometry_variance, KeyframeBuilder, KeyframeConfig, OdomAccumulator, VARIANCE_FLOOR,
};
pub use loops::{detect_loop_closures, detect_new_loop_closures, LoopConfig};
pub use pdr::{increment_pose, pdr_integrate};
pub use residuals::{dcs_cost, dcs_weight, residual_loop, residual_odom};
pub use solver::{loop_weights, optimize, optimize_in_place, total_chi2, SolveStats, SolverConfig};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("invalid pose graph: {0}")]
    InvalidGraph(String),
    #[error("graph dump line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("solver diverged after {} iterations", .0.iterations)]
    SolverDiverged(Box<SolveStats>),
}

//! Trajectory metrics and the three-method experiment harness.

mod experiment;
mod metrics;
mod output;
mod pipeline;
mod svg;

pub use experiment::{
    improvement_ratio, median, run_experiment, Aggregate, ExperimentConfig, ExperimentReport, FalsePositiveConfig,
    GraphSummary, MethodResult, MethodRun,
};
pub use metrics::{cdf, endpoint_error, error_series, percentile, rmse, ErrorSeries, MetricsReport};
pub use output::{write_cdf_csv, write_trajectory_csv};
pub use pipeline::{choose_false_positives, keyframe_times, run_graph, run_pdr, GraphRun, Method, PipelineConfig};

use thiserror::Error;

use crate::estimator::EstimatorError;
use crate::geom::Timestamp;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("error series is empty")]
    Empty,
    #[error("quantile {0} is outside (0, 1]")]
    BadQuantile(f64),
    #[error("estimate at {0} lies outside the ground-truth time span")]
    OutsideGroundTruth(Timestamp),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

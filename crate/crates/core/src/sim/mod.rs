//! Ground-truth trajectories and noisy sensor streams.
//!
//! The robot follows a waypoint polyline at constant speed. The IMU front end
//! is modelled directly as body-frame odometry increments `(dd, dθ)` per tick,
//! and WiFi RTT as per-AP ranges at every RTT epoch. Everything is a pure
//! function of `(scenario, seed)`.

mod scenario;
mod sensors;
mod trajectory;
mod world;

pub use scenario::{build_scenario, ImuNoiseModel, RttNoiseModel, Scenario, ScenarioConfig};
pub(crate) use sensors::stream_rng;
pub use sensors::{synthesize_imu, synthesize_rtt, ImuSynth, OdometrySample, RttSample, RttSynth, SensorStreams};
pub use trajectory::{sample_ground_truth, GroundTruthTrajectory};
pub use world::UnicycleWorld;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("a scenario needs at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("invalid area {0:?}")]
    InvalidArea([f64; 2]),
    #[error("{what} {point:?} lies outside the area")]
    OutsideArea { what: &'static str, point: [f64; 2] },
    #[error("scenario has no access points")]
    NoAccessPoints,
    #[error("at most 256 access points are addressable, got {0}")]
    TooManyAccessPoints(usize),
    #[error("speed must be positive, got {0}")]
    InvalidSpeed(f64),
    #[error("imu rate {imu} Hz must divide 1 MHz and be an integer multiple of rtt rate {rtt} Hz")]
    RateMismatch { imu: u32, rtt: u32 },
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

/// Simulates a scenario end to end: ground truth plus both sensor streams.
pub fn simulate(scenario: &Scenario) -> (GroundTruthTrajectory, SensorStreams) {
    let gt = sample_ground_truth(scenario);
    let cfg = scenario.config();
    let odometry = synthesize_imu(&gt, &cfg.imu_noise, cfg.seed);
    let rtt = synthesize_rtt(&gt, scenario, &cfg.rtt_noise, cfg.seed);
    (gt, SensorStreams { odometry, rtt })
}

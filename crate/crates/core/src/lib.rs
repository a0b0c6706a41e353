//! Edge-offloaded robot localization.
//!
//! A simulated robot streams odometry and WiFi RTT ranges over a framed
//! binary protocol to an edge controller, which estimates the trajectory with
//! dead reckoning plus a robust pose graph and sends velocity commands back.

pub mod config;
pub mod edge;
pub mod estimator;
pub mod eval;
pub mod geom;
pub mod robot;
pub mod sim;
pub mod system;
pub mod transport;
pub mod wire;

pub use geom::{between, compose, inverse, wrap_angle, Angle, Mat3Sym, Pose2, Timestamp};

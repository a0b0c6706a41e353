use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geom::{wrap, Pose2};
use crate::wire::Command;

use super::EdgeError;

/// Gains and limits of the proportional waypoint follower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// 1/s
    pub k_v: f64,
    /// 1/s
    pub k_omega: f64,
    /// m/s
    pub v_max: f64,
    /// rad/s
    pub omega_max: f64,
    /// m
    pub capture_radius: f64,
    /// How long the robot follows a command without a newer one.
    pub command_duration_ms: u16,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            k_v: 0.8,
            k_omega: 1.5,
            v_max: 1.4,
            omega_max: 1.5,
            capture_radius: 0.3,
            command_duration_ms: 1000,
        }
    }
}

/// One planning decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plan {
    pub command: Command,
    /// The first waypoint was reached and should be removed.
    pub reached: bool,
}

/// Unicycle law toward `waypoints[0]`.
///
/// Inside the capture radius the robot is told to stop and the waypoint is
/// reported reached. Otherwise `ω = k_ω·wrap(bearing − θ)` and `v = k_v·d`,
/// each clamped, with `v = 0` while the target is abeam or behind.
pub fn plan_command(pose: &Pose2, waypoints: &[[f64; 2]], cfg: &PlannerConfig) -> Result<Plan, EdgeError> {
    let target = waypoints.first().ok_or(EdgeError::NoWaypoints)?;
    let (dx, dy) = (target[0] - pose.x, target[1] - pose.y);
    let dist = dx.hypot(dy);
    if dist <= cfg.capture_radius {
        return Ok(Plan {
            command: Command::from_velocity(0.0, 0.0, cfg.command_duration_ms),
            reached: true,
        });
    }
    let err = wrap(dy.atan2(dx) - pose.heading());
    let omega = (cfg.k_omega * err).clamp(-cfg.omega_max, cfg.omega_max);
    let v = if err.abs() >= FRAC_PI_2 {
        0.0
    } else {
        (cfg.k_v * dist).clamp(0.0, cfg.v_max)
    };
    Ok(Plan {
        command: Command::from_velocity(v, omega, cfg.command_duration_ms),
        reached: false,
    })
}

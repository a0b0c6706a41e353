use crate::geom::{wrap, Pose2};
use crate::sim::OdometrySample;

/// One dead-reckoning step: advance `dd` along the mean heading of the tick.
#[inline]
pub fn pdr_integrate(pose: &Pose2, od: &OdometrySample) -> Pose2 {
    let th = pose.heading();
    let (s, c) = (th + 0.5 * od.dtheta).sin_cos();
    Pose2::new(pose.x + od.dd * c, pose.y + od.dd * s, wrap(th + od.dtheta))
}

/// The same step as a relative pose, so increments can be composed.
#[inline]
pub fn increment_pose(dd: f64, dtheta: f64) -> Pose2 {
    let (s, c) = (0.5 * dtheta).sin_cos();
    Pose2::new(dd * c, dd * s, dtheta)
}

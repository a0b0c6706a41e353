use crate::geom::{wrap, Pose2, Timestamp};

/// Unicycle kinematics driven by velocity commands, for closed-loop runs.
///
/// A command holds for its duration and then the robot halts. Each tick
/// advances `v·dt` along the mean heading of the tick, the same rule the
/// estimator's dead reckoning uses, so noise-free odometry integrates back to
/// the true pose exactly.
#[derive(Debug, Clone)]
pub struct UnicycleWorld {
    pose: Pose2,
    now: Timestamp,
    period_us: u64,
    v: f64,
    omega: f64,
    until: Timestamp,
}

impl UnicycleWorld {
    pub fn new(start: Pose2, period_us: u64) -> Self {
        UnicycleWorld {
            pose: start,
            now: Timestamp::ZERO,
            period_us,
            v: 0.0,
            omega: 0.0,
            until: Timestamp::ZERO,
        }
    }

    pub fn pose(&self) -> Pose2 {
        self.pose
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    /// Follow `(v, omega)` from the current time for `duration_ms`.
    pub fn set_velocity(&mut self, v: f64, omega: f64, duration_ms: u16) {
        self.v = v;
        self.omega = omega;
        self.until = self.now + duration_ms as u64 * 1000;
    }

    /// Advances one tick; returns the tick's timestamp and true increments.
    pub fn step(&mut self) -> (Timestamp, f64, f64) {
        let dt = self.period_us as f64 * 1e-6;
        let (dd, dtheta) = if self.now < self.until {
            (self.v * dt, self.omega * dt)
        } else {
            (0.0, 0.0)
        };
        let mid = self.pose.heading() + 0.5 * dtheta;
        self.pose = Pose2::new(
            self.pose.x + dd * mid.cos(),
            self.pose.y + dd * mid.sin(),
            wrap(self.pose.heading() + dtheta),
        );
        self.now = self.now + self.period_us;
        (self.now, dd, dtheta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_second_at_one_metre_per_second() {
        let mut w = UnicycleWorld::new(Pose2::new(1.0, 2.0, 0.3), 10_000);
        w.set_velocity(1.0, 0.0, 500);
        for _ in 0..100 {
            w.step();
        }
        let p = w.pose();
        assert!((p.x - (1.0 + 0.5 * 0.3f64.cos())).abs() < 1e-6);
        assert!((p.y - (2.0 + 0.5 * 0.3f64.sin())).abs() < 1e-6);
    }

    #[test]
    fn zero_command_halts() {
        let mut w = UnicycleWorld::new(Pose2::IDENTITY, 10_000);
        w.set_velocity(1.0, 0.5, 1000);
        w.step();
        w.set_velocity(0.0, 0.0, 1000);
        let before = w.pose();
        for _ in 0..10 {
            let (_, dd, dth) = w.step();
            assert_eq!((dd, dth), (0.0, 0.0));
        }
        assert_eq!(w.pose(), before);
    }
}

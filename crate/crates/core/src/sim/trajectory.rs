use std::io::{self, Write};

use crate::geom::{wrap, Pose2, Timestamp};

use super::Scenario;

/// Ground truth `g(t)`, one sample per IMU tick.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrajectory {
    pub samples: Vec<(Timestamp, Pose2)>,
    pub path_length: f64,
}

impl GroundTruthTrajectory {
    pub fn from_samples(samples: Vec<(Timestamp, Pose2)>) -> Self {
        let path_length = samples.windows(2).map(|w| w[0].1.distance(&w[1].1)).sum();
        GroundTruthTrajectory { samples, path_length }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> Option<Timestamp> {
        self.samples.first().map(|s| s.0)
    }

    pub fn end(&self) -> Option<Timestamp> {
        self.samples.last().map(|s| s.0)
    }

    pub fn duration_secs(&self) -> f64 {
        match (self.start(), self.end()) {
            (Some(a), Some(b)) => (b.0 - a.0) as f64 * 1e-6,
            _ => 0.0,
        }
    }

    /// Position linearly interpolated at `t`; `None` outside the sampled span.
    pub fn position_at(&self, t: Timestamp) -> Option<(f64, f64)> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].0 || t > s[s.len() - 1].0 {
            return None;
        }
        let k = s.partition_point(|(ts, _)| *ts <= t);
        if k == 0 {
            return Some((s[0].1.x, s[0].1.y));
        }
        let (t0, p0) = s[k - 1];
        if t0 == t || k == s.len() {
            return Some((p0.x, p0.y));
        }
        let (t1, p1) = s[k];
        let a = (t.0 - t0.0) as f64 / (t1.0 - t0.0) as f64;
        Some((p0.x + a * (p1.x - p0.x), p0.y + a * (p1.y - p0.y)))
    }

    /// Exact sample at `t`, if one exists.
    pub fn pose_at(&self, t: Timestamp) -> Option<Pose2> {
        self.samples
            .binary_search_by_key(&t, |s| s.0)
            .ok()
            .map(|i| self.samples[i].1)
    }

    /// `t_us,x,y,theta`
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_us,x,y,theta")?;
        for (t, p) in &self.samples {
            writeln!(w, "{},{:.6},{:.6},{:.6}", t.0, p.x, p.y, p.heading())?;
        }
        Ok(())
    }
}

/// Constant-speed traversal of the waypoint polyline, sampled at the IMU rate.
///
/// Each leg is split into a whole number of ticks so that every waypoint is
/// hit exactly by a sample. A change of direction takes one extra tick during
/// which the robot turns in place, so heading steps from the old leg's
/// direction straight to the new one.
pub fn sample_ground_truth(scenario: &Scenario) -> GroundTruthTrajectory {
    let cfg = scenario.config();
    let period = scenario.imu_period_us();
    let step = cfg.speed * period as f64 * 1e-6;
    let wps = &cfg.waypoints;

    let first_heading = wps
        .windows(2)
        .find(|w| w[0] != w[1])
        .map(|w| (w[1][1] - w[0][1]).atan2(w[1][0] - w[0][0]))
        .unwrap_or(0.0);

    let mut tick: u64 = 0;
    let mut heading = wrap(first_heading);
    let mut samples = vec![(Timestamp(0), Pose2::new(wps[0][0], wps[0][1], heading))];

    for leg in wps.windows(2) {
        let (a, b) = (leg[0], leg[1]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        if len == 0.0 {
            continue;
        }
        let leg_heading = wrap(dy.atan2(dx));
        if leg_heading != heading {
            heading = leg_heading;
            tick += 1;
            samples.push((Timestamp(tick * period), Pose2::new(a[0], a[1], heading)));
        }
        let n = ((len / step).round() as u64).max(1);
        for i in 1..=n {
            tick += 1;
            let (x, y) = if i == n {
                (b[0], b[1])
            } else {
                let f = i as f64 / n as f64;
                (a[0] + dx * f, a[1] + dy * f)
            };
            samples.push((Timestamp(tick * period), Pose2::new(x, y, heading)));
        }
    }
    GroundTruthTrajectory::from_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_scenario, ScenarioConfig};
    use std::f64::consts::FRAC_PI_2;

    fn scenario(waypoints: Vec<[f64; 2]>) -> Scenario {
        let mut cfg = ScenarioConfig::exp1();
        cfg.waypoints = waypoints;
        build_scenario(cfg).unwrap()
    }

    #[test]
    fn straight_leg_uniform_motion() {
        let gt = sample_ground_truth(&scenario(vec![[1.0, 1.0], [2.0, 1.0]]));
        assert_eq!(gt.len(), 101);
        for (k, (t, p)) in gt.samples.iter().enumerate() {
            assert_eq!(t.0, k as u64 * 10_000);
            assert!((p.x - (1.0 + 0.01 * k as f64)).abs() < 1e-12);
            assert_eq!(p.y, 1.0);
            assert_eq!(p.heading(), 0.0);
        }
        assert!((gt.path_length - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_loop_returns_to_start() {
        let gt = sample_ground_truth(&scenario(vec![[1.0, 1.0], [4.0, 1.0], [4.0, 3.0], [1.0, 1.0]]));
        let (a, b) = (gt.samples[0].1, gt.samples.last().unwrap().1);
        assert!(a.distance(&b) < 1e-9);
    }

    #[test]
    fn l_shape_heading_steps_at_corner() {
        let gt = sample_ground_truth(&scenario(vec![[1.0, 1.0], [2.0, 1.0], [2.0, 2.0]]));
        let headings: Vec<f64> = gt.samples.iter().map(|s| s.1.heading()).collect();
        // 100 ticks east, one turn tick, 100 ticks north.
        assert_eq!(gt.len(), 202);
        assert!(headings[..=100].iter().all(|&h| h == 0.0));
        assert!(headings[101..].iter().all(|&h| h == FRAC_PI_2));
        // The corner is occupied by both headings.
        assert_eq!(gt.samples[100].1.x, 2.0);
        assert_eq!(gt.samples[101].1.x, 2.0);
        assert_eq!(gt.samples[101].1.y, 1.0);
    }

    #[test]
    fn path_length_is_additive_over_legs() {
        let a = sample_ground_truth(&scenario(vec![[1.0, 1.0], [3.3, 1.0]]));
        let b = sample_ground_truth(&scenario(vec![[3.3, 1.0], [3.3, 4.1], [7.2, 2.0]]));
        let ab = sample_ground_truth(&scenario(vec![[1.0, 1.0], [3.3, 1.0], [3.3, 4.1], [7.2, 2.0]]));
        assert!((a.path_length + b.path_length - ab.path_length).abs() < 1e-9);
    }

    #[test]
    fn interpolation_between_samples() {
        let gt = sample_ground_truth(&scenario(vec![[1.0, 1.0], [2.0, 1.0]]));
        let (x, y) = gt.position_at(Timestamp(15_000)).unwrap();
        assert!((x - 1.015).abs() < 1e-12);
        assert_eq!(y, 1.0);
        assert!(gt.position_at(Timestamp(1_000_001)).is_none());
    }

    #[test]
    fn exp1_path_length_matches_reference_walk() {
        let gt = sample_ground_truth(&build_scenario(ScenarioConfig::exp1()).unwrap());
        assert!((gt.path_length - 308.8).abs() / 308.8 < 0.01, "{}", gt.path_length);
    }
}

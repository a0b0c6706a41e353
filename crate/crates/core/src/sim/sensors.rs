use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::geom::{wrap, Timestamp};

use super::{GroundTruthTrajectory, ImuNoiseModel, RttNoiseModel, Scenario};

const IMU_STREAM: u64 = 1;
const RTT_STREAM: u64 = 2;

/// One body-frame odometry increment per IMU tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometrySample {
    pub t: Timestamp,
    /// Forward increment, m.
    pub dd: f64,
    /// Heading increment, rad.
    pub dtheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RttSample {
    pub t: Timestamp,
    pub ap_id: u8,
    /// m, never negative.
    pub range: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SensorStreams {
    pub odometry: Vec<OdometrySample>,
    pub rtt: Vec<RttSample>,
}

impl SensorStreams {
    /// `t_us,dd,dtheta`
    pub fn write_odometry_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_us,dd,dtheta")?;
        for o in &self.odometry {
            writeln!(w, "{},{:.9},{:.9}", o.t.0, o.dd, o.dtheta)?;
        }
        Ok(())
    }

    /// `t_us,ap_id,range`
    pub fn write_rtt_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_us,ap_id,range")?;
        for r in &self.rtt {
            writeln!(w, "{},{},{:.6}", r.t.0, r.ap_id, r.range)?;
        }
        Ok(())
    }
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Incremental odometry corruption; the batch and live simulators share it.
#[derive(Debug, Clone)]
pub struct ImuSynth {
    rng: ChaCha8Rng,
    noise: ImuNoiseModel,
    dt: f64,
}

impl ImuSynth {
    pub fn new(noise: ImuNoiseModel, seed: u64, period_us: u64) -> Self {
        ImuSynth {
            rng: stream_rng(seed, IMU_STREAM),
            noise,
            dt: period_us as f64 * 1e-6,
        }
    }

    pub fn corrupt(&mut self, t: Timestamp, true_dd: f64, true_dtheta: f64) -> OdometrySample {
        let n = &self.noise;
        let sqrt_dt = self.dt.sqrt();
        let z_d: f64 = self.rng.sample(StandardNormal);
        let z_g: f64 = self.rng.sample(StandardNormal);
        OdometrySample {
            t,
            dd: true_dd * (1.0 + n.odom_scale_err) + n.odom_sigma * sqrt_dt * z_d,
            dtheta: true_dtheta + n.gyro_bias * self.dt + n.gyro_sigma * sqrt_dt * z_g,
        }
    }
}

/// Incremental range generation for one set of access points.
#[derive(Debug, Clone)]
pub struct RttSynth {
    rng: ChaCha8Rng,
    noise: RttNoiseModel,
    aps: Vec<[f64; 2]>,
}

impl RttSynth {
    pub fn new(noise: RttNoiseModel, seed: u64, aps: Vec<[f64; 2]>) -> Self {
        RttSynth {
            rng: stream_rng(seed, RTT_STREAM),
            noise,
            aps,
        }
    }

    /// Ranges from `(x, y)` to every AP at one epoch, minus dropouts.
    ///
    /// Four variates are drawn per AP whether or not they are used, so the
    /// stream for one AP never shifts when another AP's outcome changes.
    pub fn epoch(&mut self, t: Timestamp, x: f64, y: f64, out: &mut Vec<RttSample>) {
        let n = self.noise;
        for (id, ap) in self.aps.iter().enumerate() {
            let u_drop: f64 = self.rng.random();
            let z: f64 = self.rng.sample(StandardNormal);
            let u_mp: f64 = self.rng.random();
            let e: f64 = self.rng.sample(Exp1);
            if u_drop < n.dropout_prob {
                continue;
            }
            let mut range = (x - ap[0]).hypot(y - ap[1]) + n.range_sigma * z;
            if u_mp < n.multipath_prob {
                range += (n.multipath_bias_mean * e).max(1e-9);
            }
            out.push(RttSample {
                t,
                ap_id: id as u8,
                range: range.max(0.0),
            });
        }
    }
}

/// Per-tick odometry from consecutive ground-truth samples.
pub fn synthesize_imu(gt: &GroundTruthTrajectory, noise: &ImuNoiseModel, seed: u64) -> Vec<OdometrySample> {
    let Some(period) = gt.samples.get(1).map(|s| s.0 .0 - gt.samples[0].0 .0) else {
        return Vec::new();
    };
    let mut synth = ImuSynth::new(*noise, seed, period);
    gt.samples
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].1, w[1].1);
            synth.corrupt(w[1].0, a.distance(&b), wrap(b.heading() - a.heading()))
        })
        .collect()
}

/// Ranges at every RTT epoch `t = m · rtt_period`, `m ≥ 1`.
pub fn synthesize_rtt(
    gt: &GroundTruthTrajectory,
    scenario: &Scenario,
    noise: &RttNoiseModel,
    seed: u64,
) -> Vec<RttSample> {
    let every = scenario.ticks_per_epoch() as usize;
    let mut synth = RttSynth::new(*noise, seed, scenario.aps().to_vec());
    let mut out = Vec::with_capacity(gt.len() / every * scenario.aps().len() + 1);
    for (t, p) in gt.samples.iter().skip(every).step_by(every) {
        synth.epoch(*t, p.x, p.y, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::pdr_integrate;
    use crate::geom::Pose2;
    use crate::sim::{build_scenario, sample_ground_truth, ScenarioConfig};

    fn straight(seconds: f64) -> Scenario {
        let mut cfg = ScenarioConfig::exp1();
        cfg.waypoints = vec![[0.5, 2.0], [0.5 + seconds, 2.0]];
        build_scenario(cfg).unwrap()
    }

    fn integrate(start: Pose2, odo: &[OdometrySample]) -> Vec<Pose2> {
        let mut p = start;
        let mut out = vec![p];
        for o in odo {
            p = pdr_integrate(&p, o);
            out.push(p);
        }
        out
    }

    #[test]
    fn zero_noise_odometry_reproduces_ground_truth() {
        let s = build_scenario(ScenarioConfig::exp1()).unwrap();
        let gt = sample_ground_truth(&s);
        let odo = synthesize_imu(&gt, &ImuNoiseModel::zero(), 3);
        assert_eq!(odo.len(), gt.len() - 1);
        let poses = integrate(gt.samples[0].1, &odo);
        let worst = poses
            .iter()
            .zip(&gt.samples)
            .map(|(p, g)| p.distance(&g.1))
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "worst {worst}");
    }

    #[test]
    fn gyro_bias_accumulates_linearly() {
        let s = straight(8.0);
        let gt = sample_ground_truth(&s);
        let b = 0.01;
        let noise = ImuNoiseModel {
            gyro_bias: b,
            ..ImuNoiseModel::zero()
        };
        let odo = synthesize_imu(&gt, &noise, 0);
        let end = integrate(gt.samples[0].1, &odo).pop().unwrap();
        let t = gt.duration_secs();
        assert!((end.heading() - b * t).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_stream() {
        let s = build_scenario(ScenarioConfig::exp1()).unwrap();
        let gt = sample_ground_truth(&s);
        let n = ImuNoiseModel::default();
        assert_eq!(synthesize_imu(&gt, &n, 11), synthesize_imu(&gt, &n, 11));
        assert_ne!(synthesize_imu(&gt, &n, 11), synthesize_imu(&gt, &n, 12));
        let r = RttNoiseModel::default();
        assert_eq!(synthesize_rtt(&gt, &s, &r, 5), synthesize_rtt(&gt, &s, &r, 5));
    }

    #[test]
    fn zero_noise_ranges_are_distances() {
        let s = build_scenario(ScenarioConfig::exp1()).unwrap();
        let gt = sample_ground_truth(&s);
        let rtt = synthesize_rtt(&gt, &s, &RttNoiseModel::zero(), 0);
        assert_eq!(rtt.len(), (gt.len() - 1) / 20 * 4);
        for r in &rtt {
            let p = gt.pose_at(r.t).unwrap();
            let ap = s.aps()[r.ap_id as usize];
            assert!((r.range - (p.x - ap[0]).hypot(p.y - ap[1])).abs() < 1e-9);
            assert_eq!(r.t.0 % 200_000, 0);
            assert!(r.t.0 > 0);
        }
    }

    #[test]
    fn multipath_is_positive_only() {
        let s = build_scenario(ScenarioConfig::exp1()).unwrap();
        let gt = sample_ground_truth(&s);
        let noise = RttNoiseModel {
            multipath_prob: 1.0,
            ..RttNoiseModel::zero()
        };
        for r in synthesize_rtt(&gt, &s, &noise, 9) {
            let p = gt.pose_at(r.t).unwrap();
            let ap = s.aps()[r.ap_id as usize];
            assert!(r.range > (p.x - ap[0]).hypot(p.y - ap[1]));
        }
    }

    #[test]
    fn multipath_fraction_monte_carlo() {
        let noise = RttNoiseModel {
            multipath_prob: 0.1,
            ..RttNoiseModel::zero()
        };
        let mut synth = RttSynth::new(noise, 77, vec![[3.0, 4.0]]);
        let mut out = Vec::new();
        let epochs = 100_000;
        for k in 0..epochs {
            synth.epoch(Timestamp(k), 0.0, 0.0, &mut out);
        }
        let outliers = out.iter().filter(|r| r.range > 5.0).count();
        let frac = outliers as f64 / epochs as f64;
        assert!((frac - 0.1).abs() <= 0.01, "{frac}");
    }

    #[test]
    fn ranges_never_negative() {
        let noise = RttNoiseModel {
            range_sigma: 5.0,
            ..RttNoiseModel::default()
        };
        let mut synth = RttSynth::new(noise, 1, vec![[0.1, 0.1], [0.0, 0.0]]);
        let mut out = Vec::new();
        for k in 0..10_000 {
            synth.epoch(Timestamp(k), 0.0, 0.0, &mut out);
        }
        assert!(out.iter().all(|r| r.range >= 0.0));
        assert!(out.iter().any(|r| r.range == 0.0));
    }
}

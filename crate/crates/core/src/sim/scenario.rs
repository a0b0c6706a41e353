use serde::{Deserialize, Serialize};

use super::SimError;

/// Body-frame odometry corruption applied per IMU tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImuNoiseModel {
    /// Constant gyro bias, rad/s.
    pub gyro_bias: f64,
    /// Gyro white noise, rad/√s.
    pub gyro_sigma: f64,
    /// Multiplicative step-length error.
    pub odom_scale_err: f64,
    /// Step-length white noise, m/√s.
    pub odom_sigma: f64,
}

impl Default for ImuNoiseModel {
    fn default() -> Self {
        ImuNoiseModel {
            gyro_bias: 0.005,
            gyro_sigma: 0.002,
            odom_scale_err: 0.01,
            odom_sigma: 0.01,
        }
    }
}

impl ImuNoiseModel {
    pub fn zero() -> Self {
        ImuNoiseModel {
            gyro_bias: 0.0,
            gyro_sigma: 0.0,
            odom_scale_err: 0.0,
            odom_sigma: 0.0,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let all = [self.gyro_bias, self.gyro_sigma, self.odom_scale_err, self.odom_sigma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidNoise("non-finite IMU noise parameter".into()));
        }
        if self.gyro_sigma < 0.0 || self.odom_sigma < 0.0 {
            return Err(SimError::InvalidNoise("IMU sigmas must be >= 0".into()));
        }
        Ok(())
    }
}

/// Range corruption for WiFi RTT measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RttNoiseModel {
    pub range_sigma: f64,
    pub multipath_prob: f64,
    /// Mean of the exponential, positive-only multipath bias, m.
    pub multipath_bias_mean: f64,
    pub dropout_prob: f64,
}

impl Default for RttNoiseModel {
    fn default() -> Self {
        RttNoiseModel {
            range_sigma: 0.1,
            multipath_prob: 0.1,
            multipath_bias_mean: 1.5,
            dropout_prob: 0.05,
        }
    }
}

impl RttNoiseModel {
    pub fn zero() -> Self {
        RttNoiseModel {
            range_sigma: 0.0,
            multipath_prob: 0.0,
            multipath_bias_mean: 1.0,
            dropout_prob: 0.0,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if !(self.range_sigma.is_finite() && self.range_sigma >= 0.0) {
            return Err(SimError::InvalidNoise("range_sigma must be >= 0".into()));
        }
        for (name, p) in [
            ("multipath_prob", self.multipath_prob),
            ("dropout_prob", self.dropout_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidNoise(format!("{name} must be in [0, 1]")));
            }
        }
        if !(self.multipath_bias_mean.is_finite() && self.multipath_bias_mean > 0.0) {
            return Err(SimError::InvalidNoise("multipath_bias_mean must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Preset name this config was derived from, if any.
    pub name: String,
    /// Width and height of the area, m. Positions live in `[0, w] × [0, h]`.
    pub area: [f64; 2],
    pub waypoints: Vec<[f64; 2]>,
    /// m/s
    pub speed: f64,
    pub imu_rate: u32,
    pub rtt_rate: u32,
    pub aps: Vec<[f64; 2]>,
    pub imu_noise: ImuNoiseModel,
    pub rtt_noise: RttNoiseModel,
    pub seed: u64,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    cfg: ScenarioConfig,
    imu_period_us: u64,
    rtt_every: u64,
}

impl Scenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn name(&self) -> &str {
        &self.cfg.name
    }

    pub fn imu_period_us(&self) -> u64 {
        self.imu_period_us
    }

    pub fn rtt_period_us(&self) -> u64 {
        self.imu_period_us * self.rtt_every
    }

    /// IMU ticks per RTT epoch.
    pub fn ticks_per_epoch(&self) -> u64 {
        self.rtt_every
    }

    pub fn aps(&self) -> &[[f64; 2]] {
        &self.cfg.aps
    }

    pub fn waypoints(&self) -> &[[f64; 2]] {
        &self.cfg.waypoints
    }

    pub fn seed(&self) -> u64 {
        self.cfg.seed
    }
}

fn inside(p: &[f64; 2], area: &[f64; 2]) -> bool {
    p[0].is_finite() && p[1].is_finite() && (0.0..=area[0]).contains(&p[0]) && (0.0..=area[1]).contains(&p[1])
}

/// Validates a configuration into a [`Scenario`].
pub fn build_scenario(cfg: ScenarioConfig) -> Result<Scenario, SimError> {
    if cfg.waypoints.len() < 2 {
        return Err(SimError::TooFewWaypoints(cfg.waypoints.len()));
    }
    if !(cfg.area[0] > 0.0 && cfg.area[1] > 0.0 && cfg.area.iter().all(|v| v.is_finite())) {
        return Err(SimError::InvalidArea(cfg.area));
    }
    if let Some(w) = cfg.waypoints.iter().find(|w| !inside(w, &cfg.area)) {
        return Err(SimError::OutsideArea {
            what: "waypoint",
            point: *w,
        });
    }
    if cfg.aps.is_empty() {
        return Err(SimError::NoAccessPoints);
    }
    if cfg.aps.len() > u8::MAX as usize + 1 {
        return Err(SimError::TooManyAccessPoints(cfg.aps.len()));
    }
    if let Some(a) = cfg.aps.iter().find(|a| !inside(a, &cfg.area)) {
        return Err(SimError::OutsideArea {
            what: "access point",
            point: *a,
        });
    }
    if !(cfg.speed.is_finite() && cfg.speed > 0.0) {
        return Err(SimError::InvalidSpeed(cfg.speed));
    }
    if cfg.imu_rate == 0 || cfg.rtt_rate == 0 || !cfg.imu_rate.is_multiple_of(cfg.rtt_rate) {
        return Err(SimError::RateMismatch {
            imu: cfg.imu_rate,
            rtt: cfg.rtt_rate,
        });
    }
    if 1_000_000 % cfg.imu_rate != 0 {
        return Err(SimError::RateMismatch {
            imu: cfg.imu_rate,
            rtt: cfg.rtt_rate,
        });
    }
    cfg.imu_noise.validate()?;
    cfg.rtt_noise.validate()?;
    Ok(Scenario {
        imu_period_us: 1_000_000 / cfg.imu_rate as u64,
        rtt_every: (cfg.imu_rate / cfg.rtt_rate) as u64,
        cfg,
    })
}

/// A counter-clockwise rectangular lap with lower-left corner `corner`,
/// starting and ending at `start` on its bottom edge.
fn rectangle_lap(corner: [f64; 2], w: f64, h: f64, start: [f64; 2]) -> Vec<[f64; 2]> {
    let [x, y] = corner;
    vec![[x + w, y], [x + w, y + h], [x, y + h], [x, y], start]
}

impl ScenarioConfig {
    /// Named presets: `exp1` (house floor, 10 m × 5 m) and `exp2` (house plus
    /// garden and road, 20 m × 35 m).
    pub fn preset(name: &str) -> Result<Self, SimError> {
        match name {
            "exp1" => Ok(Self::exp1()),
            "exp2" => Ok(Self::exp2()),
            other => Err(SimError::UnknownPreset(other.to_string())),
        }
    }

    /// Fourteen laps of the corridor ring of a 10 m × 5 m floor, 22.16 m each
    /// and 310.24 m in total. Every lap starts and ends mid-corridor at
    /// (3, 1), so the walk finishes on a stretch it has passed many times.
    ///
    /// Leg lengths are whole centimetres and each lap, including one in-place
    /// turn tick per corner, lasts a whole number of RTT epochs at 1 m/s. Every
    /// lap therefore puts its keyframes on the same spots, and without noise
    /// every revisit matches exactly.
    pub fn exp1() -> Self {
        let start = [3.0, 1.0];
        let lap = rectangle_lap([1.0, 1.0], 8.0, 3.08, start);
        let mut waypoints = vec![start];
        for _ in 0..14 {
            waypoints.extend_from_slice(&lap);
        }
        ScenarioConfig {
            name: "exp1".into(),
            area: [10.0, 5.0],
            waypoints,
            speed: 1.0,
            imu_rate: 100,
            rtt_rate: 5,
            aps: vec![[0.5, 0.5], [9.5, 0.8], [8.0, 4.6], [2.5, 4.4]],
            imu_noise: ImuNoiseModel::default(),
            rtt_noise: RttNoiseModel::default(),
            seed: 0,
        }
    }

    /// A large outdoor loop, a shorter loop through the garden, and the large
    /// loop again: 236.48 m inside 20 m × 35 m.
    pub fn exp2() -> Self {
        let start = [6.0, 2.0];
        let corner = [2.0, 2.0];
        let big = rectangle_lap(corner, 16.0, 30.08, start);
        let small = rectangle_lap(corner, 16.0, 10.08, start);
        let mut waypoints = vec![start];
        for lap in [&big, &small, &big] {
            waypoints.extend_from_slice(lap);
        }
        ScenarioConfig {
            name: "exp2".into(),
            area: [20.0, 35.0],
            waypoints,
            speed: 1.0,
            imu_rate: 100,
            rtt_rate: 5,
            aps: vec![[3.0, 3.0], [17.0, 4.0], [16.0, 20.0], [4.0, 31.0]],
            imu_noise: ImuNoiseModel::default(),
            rtt_noise: RttNoiseModel::default(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn noise_free(mut self) -> Self {
        self.imu_noise = ImuNoiseModel::zero();
        self.rtt_noise = RttNoiseModel::zero();
        self
    }
}

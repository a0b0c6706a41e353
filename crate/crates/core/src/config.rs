//! The TOML file shared by every subcommand.
//!
//! Scenario keys sit at the top level and override a preset (`exp1` unless
//! `preset` says otherwise). Each subsystem reads its own table.
//!
//! ```toml
//! preset = "exp1"
//! seed = 0
//! area = [10.0, 5.0]
//! waypoints = [[3.0, 1.0], [9.0, 1.0], [9.0, 4.08], [3.0, 1.0]]
//! speed = 1.0
//! rates = { imu = 100, rtt = 5 }
//! aps = [[0.5, 0.5], [9.5, 0.8]]
//!
//! [noise]
//! gyro_bias = 0.005
//! range_sigma = 0.1
//!
//! [eval]
//! seeds = [0, 1, 2]
//! methods = ["pdr", "traditional", "robust"]
//! false_positives = { clusters = 30, cluster_len = 10, min_distance = 6.0 }
//!
//! [pipeline]
//! solve_every = 100
//!
//! [robot]
//! tx_capacity = 64
//! stall = { start_ms = 60000, duration_ms = 1000 }
//!
//! [edge.scheduler]
//! solve_every_k = 5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edge::EdgeTuning;
use crate::eval::{ExperimentConfig, FalsePositiveConfig, Method, PipelineConfig};
use crate::robot::RobotConfig;
use crate::sim::{build_scenario, Scenario, ScenarioConfig, SimError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Scenario(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub imu: Option<u32>,
    pub rtt: Option<u32>,
}

/// Any subset of the IMU and RTT noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseOverrides {
    pub gyro_bias: Option<f64>,
    pub gyro_sigma: Option<f64>,
    pub odom_scale_err: Option<f64>,
    pub odom_sigma: Option<f64>,
    pub range_sigma: Option<f64>,
    pub multipath_prob: Option<f64>,
    pub multipath_bias_mean: Option<f64>,
    pub dropout_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub seeds: Option<Vec<u64>>,
    pub methods: Option<Vec<Method>>,
    pub false_positives: FalsePositiveConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub name: Option<String>,
    pub area: Option<[f64; 2]>,
    pub waypoints: Option<Vec<[f64; 2]>>,
    pub speed: Option<f64>,
    pub rates: Rates,
    pub aps: Option<Vec<[f64; 2]>>,
    pub seed: Option<u64>,
    pub noise: NoiseOverrides,
    pub eval: EvalSection,
    pub pipeline: PipelineConfig,
    pub robot: RobotConfig,
    pub edge: EdgeTuning,
}

fn set<T: Copy>(dst: &mut T, src: Option<T>) {
    if let Some(v) = src {
        *dst = v;
    }
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// The preset with every key present in the file applied on top.
    pub fn scenario_config(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut c = ScenarioConfig::preset(self.preset.as_deref().unwrap_or("exp1"))?;
        if let Some(n) = &self.name {
            c.name = n.clone();
        }
        set(&mut c.area, self.area);
        if let Some(w) = &self.waypoints {
            c.waypoints = w.clone();
        }
        set(&mut c.speed, self.speed);
        set(&mut c.imu_rate, self.rates.imu);
        set(&mut c.rtt_rate, self.rates.rtt);
        if let Some(a) = &self.aps {
            c.aps = a.clone();
        }
        set(&mut c.seed, self.seed);
        let n = &self.noise;
        set(&mut c.imu_noise.gyro_bias, n.gyro_bias);
        set(&mut c.imu_noise.gyro_sigma, n.gyro_sigma);
        set(&mut c.imu_noise.odom_scale_err, n.odom_scale_err);
        set(&mut c.imu_noise.odom_sigma, n.odom_sigma);
        set(&mut c.rtt_noise.range_sigma, n.range_sigma);
        set(&mut c.rtt_noise.multipath_prob, n.multipath_prob);
        set(&mut c.rtt_noise.multipath_bias_mean, n.multipath_bias_mean);
        set(&mut c.rtt_noise.dropout_prob, n.dropout_prob);
        Ok(c)
    }

    /// Validated scenario at the configured seed.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        Ok(build_scenario(self.scenario_config()?)?)
    }

    /// Seeds default to the scenario seed, methods to all three.
    pub fn experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        let scenario = self.scenario_config()?;
        Ok(ExperimentConfig {
            seeds: self.eval.seeds.clone().unwrap_or_else(|| vec![scenario.seed]),
            methods: self.eval.methods.clone().unwrap_or_else(|| Method::ALL.to_vec()),
            false_positives: self.eval.false_positives,
            pipeline: self.pipeline,
            scenario,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_exp1_preset() {
        let f = FileConfig::from_toml("").unwrap();
        assert_eq!(f.scenario_config().unwrap(), ScenarioConfig::exp1());
        let e = f.experiment().unwrap();
        assert_eq!(e.seeds, vec![0]);
        assert_eq!(e.methods, Method::ALL.to_vec());
        assert_eq!(f.robot, RobotConfig::default());
    }

    #[test]
    fn documented_keys_override_the_preset() {
        let text = r#"
            preset = "exp2"
            seed = 7
            speed = 0.8
            rates = { imu = 50, rtt = 5 }
            aps = [[1.0, 1.0], [2.0, 2.0]]
            [noise]
            range_sigma = 0.25
            gyro_bias = 0.0
            [eval]
            seeds = [3, 4]
            methods = ["robust", "pdr"]
            [pipeline]
            solve_every = 10
            [pipeline.loops]
            match_threshold = 0.5
            [robot]
            tx_capacity = 8
            stall = { start_ms = 1000, duration_ms = 500 }
            [edge.scheduler]
            solve_every_k = 2
        "#;
        let f = FileConfig::from_toml(text).unwrap();
        let c = f.scenario_config().unwrap();
        assert_eq!(c.name, "exp2");
        assert_eq!((c.seed, c.speed, c.imu_rate, c.rtt_rate), (7, 0.8, 50, 5));
        assert_eq!(c.aps.len(), 2);
        assert_eq!(c.rtt_noise.range_sigma, 0.25);
        assert_eq!(c.imu_noise.gyro_bias, 0.0);
        assert_eq!(c.imu_noise.gyro_sigma, ScenarioConfig::exp2().imu_noise.gyro_sigma);
        let e = f.experiment().unwrap();
        assert_eq!(e.seeds, vec![3, 4]);
        assert_eq!(e.methods, vec![Method::Robust, Method::Pdr]);
        assert_eq!(e.pipeline.solve_every, 10);
        assert_eq!(e.pipeline.loops.match_threshold, 0.5);
        assert_eq!(f.robot.tx_capacity, 8);
        assert_eq!(f.robot.stall.unwrap().duration_ms, 500);
        assert_eq!(f.edge.scheduler.solve_every_k, 2);
        assert!(f.scenario().is_ok());
    }

    #[test]
    fn unknown_keys_and_presets_are_errors() {
        assert!(matches!(
            FileConfig::from_toml("sped = 1.0"),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            FileConfig::from_toml("[noise]\nrange_sgima = 1.0"),
            Err(ConfigError::Parse(_))
        ));
        let f = FileConfig::from_toml("preset = \"exp9\"").unwrap();
        assert!(matches!(f.scenario_config(), Err(ConfigError::Scenario(_))));
    }
}

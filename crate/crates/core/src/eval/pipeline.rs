use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimator::{
    pdr_integrate, IncrementalSolver, KeyframeBuilder, KeyframeConfig, LoopConfig, PoseGraph, SolveStats, SolverConfig,
};
use crate::geom::{Pose2, Timestamp};
use crate::sim::{stream_rng, GroundTruthTrajectory, Scenario, SensorStreams};

use super::EvalError;

const FP_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Dead reckoning only.
    Pdr,
    /// Pose graph with unit loop weights.
    Traditional,
    /// Pose graph with DCS loop weights.
    Robust,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pdr, Method::Traditional, Method::Robust];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pdr => "pdr",
            Method::Traditional => "traditional",
            Method::Robust => "robust",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, EvalError> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| EvalError::UnknownMethod(s.to_string()))
    }
}

/// Estimator settings shared by the offline pipeline and the edge controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub keyframe: KeyframeConfig,
    pub loops: LoopConfig,
    pub solver: SolverConfig,
    /// Keyframes between solver runs.
    pub solve_every: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            keyframe: KeyframeConfig::default(),
            loops: LoopConfig::default(),
            solver: SolverConfig::default(),
            solve_every: 100,
        }
    }
}

/// Result of one graph-based estimate.
#[derive(Debug, Clone)]
pub struct GraphRun {
    pub trajectory: Vec<(Timestamp, Pose2)>,
    pub graph: PoseGraph,
    pub last_stats: Option<SolveStats>,
    pub solves: usize,
    pub failed_solves: usize,
}

/// Keyframe times: the anchor at `t = 0`, then every RTT epoch within the run.
pub fn keyframe_times(scenario: &Scenario, gt: &GroundTruthTrajectory) -> Vec<Timestamp> {
    let end = gt.end().unwrap_or_default().0;
    let p = scenario.rtt_period_us();
    (0..=end / p).map(|m| Timestamp(m * p)).collect()
}

/// Dead reckoning from the true start pose, sampled at keyframe times.
pub fn run_pdr(scenario: &Scenario, gt: &GroundTruthTrajectory, streams: &SensorStreams) -> Vec<(Timestamp, Pose2)> {
    let mut pose = gt.samples[0].1;
    let mut odo = streams.odometry.iter().peekable();
    keyframe_times(scenario, gt)
        .into_iter()
        .map(|t| {
            while let Some(o) = odo.next_if(|o| o.t <= t) {
                pose = pdr_integrate(&pose, o);
            }
            (t, pose)
        })
        .collect()
}

/// Picks `count` false closures between keyframes that are at least
/// `min_distance` apart in truth, each repeated over `cluster_len`
/// consecutive keyframe pairs, as a fingerprint collision along a corridor
/// would produce.
pub fn choose_false_positives(
    scenario: &Scenario,
    gt: &GroundTruthTrajectory,
    count: usize,
    cluster_len: usize,
    min_distance: f64,
    min_separation: usize,
    seed: u64,
) -> Vec<(usize, usize)> {
    let times = keyframe_times(scenario, gt);
    let pos: Vec<(f64, f64)> = times.iter().map(|t| gt.position_at(*t).unwrap_or_default()).collect();
    let n = pos.len();
    let len = cluster_len.max(1);
    let mut rng = stream_rng(seed, FP_STREAM);
    let mut out = Vec::new();
    let far = |i: usize, j: usize| (pos[i].0 - pos[j].0).hypot(pos[i].1 - pos[j].1) >= min_distance;
    if n < min_separation + len + 2 {
        return out;
    }
    let mut attempts = 0;
    while out.len() < count * len && attempts < 100_000 {
        attempts += 1;
        let j = rng.random_range(min_separation + 1..n - len + 1);
        let i = rng.random_range(1..=j - min_separation);
        if (0..len).all(|k| far(i + k, j + k)) {
            out.extend((0..len).map(|k| (i + k, j + k)));
        }
    }
    out.sort_by_key(|&(i, j)| (j, i));
    out
}

/// Offline keyframe, loop detection and optimization pipeline. Loop closures
/// are detected and the graph re-solved every `solve_every` keyframes and at
/// the end; `injected` closures join the graph once both endpoints exist.
pub fn run_graph(
    scenario: &Scenario,
    gt: &GroundTruthTrajectory,
    streams: &SensorStreams,
    cfg: &PipelineConfig,
    robust: bool,
    injected: &[(usize, usize)],
) -> Result<GraphRun, EvalError> {
    let solver = SolverConfig { robust, ..cfg.solver };
    let mut builder = KeyframeBuilder::new(
        Timestamp::ZERO,
        gt.samples[0].1,
        scenario.aps().len(),
        scenario.imu_period_us(),
        cfg.keyframe,
    );
    let mut odo = streams.odometry.iter().peekable();
    let mut rtt = streams.rtt.iter().peekable();
    let mut run = GraphRun {
        trajectory: Vec::new(),
        graph: PoseGraph::default(),
        last_stats: None,
        solves: 0,
        failed_solves: 0,
    };
    let every = cfg.solve_every.max(1);
    let mut backend = IncrementalSolver::new(cfg.loops, solver).with_injected(injected.to_vec());
    let mut solve = |graph: &mut PoseGraph, run: &mut GraphRun| -> Result<(), EvalError> {
        let out = backend.solve(graph)?;
        run.solves += 1;
        run.failed_solves += out.diverged as usize;
        run.last_stats = Some(out.stats);
        Ok(())
    };

    let times = keyframe_times(scenario, gt);
    for &t in &times[1..] {
        while let Some(o) = odo.next_if(|o| o.t <= t) {
            builder.push_odometry(o);
        }
        while let Some(r) = rtt.next_if(|r| r.t <= t) {
            if r.t == t {
                builder.push_range(r);
            }
        }
        let id = builder.close_epoch(t);
        if id.is_multiple_of(every) {
            solve(builder.graph_mut(), &mut run)?;
        }
    }
    if !builder.keyframe_count().is_multiple_of(every) || builder.keyframe_count() == 0 {
        solve(builder.graph_mut(), &mut run)?;
    }
    run.graph = builder.into_graph();
    run.trajectory = run.graph.nodes.iter().map(|n| (n.t, n.pose)).collect();
    Ok(run)
}

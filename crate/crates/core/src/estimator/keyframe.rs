use serde::{Deserialize, Serialize};

use crate::geom::{Mat3Sym, Pose2, Timestamp};
use crate::sim::{OdometrySample, RttSample};

use super::pdr::increment_pose;
use super::{Fingerprint, KeyframeNode, OdomEdge, PoseGraph};

/// Variance floor for every diagonal entry, in m² or rad².
pub const VARIANCE_FLOOR: f64 = 1e-4;

/// Diagonal odometry covariance model for one keyframe interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyframeConfig {
    /// Translation variance per metre travelled, m²/m.
    pub trans_per_m: f64,
    /// Heading variance per radian turned, rad²/rad.
    pub rot_per_rad: f64,
    /// Heading variance per second elapsed, rad²/s.
    pub rot_per_s: f64,
    /// Extra translation variance per second of missing odometry, m²/s.
    pub gap_trans_per_s: f64,
    /// Extra heading variance per second of missing odometry, rad²/s.
    pub gap_rot_per_s: f64,
}

impl Default for KeyframeConfig {
    fn default() -> Self {
        KeyframeConfig {
            trans_per_m: 5e-4,
            rot_per_rad: 1e-3,
            rot_per_s: 5e-5,
            gap_trans_per_s: 2.0,
            gap_rot_per_s: 0.5,
        }
    }
}

/// Odometry composed since the last keyframe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdomAccumulator {
    pub delta: Pose2,
    /// Σ|dd|, m.
    pub distance: f64,
    /// Σ|dθ|, rad.
    pub turn: f64,
    pub samples: usize,
}

impl Default for OdomAccumulator {
    fn default() -> Self {
        OdomAccumulator {
            delta: Pose2::IDENTITY,
            distance: 0.0,
            turn: 0.0,
            samples: 0,
        }
    }
}

impl OdomAccumulator {
    pub fn add(&mut self, od: &OdometrySample) {
        self.delta = self.delta.compose(&increment_pose(od.dd, od.dtheta));
        self.distance += od.dd.abs();
        self.turn += od.dtheta.abs();
        self.samples += 1;
    }
}

/// Diagonal `(σ²_xy, σ²_θ)` for an interval of `elapsed_s`, of which
/// `missing_s` had no odometry.
pub fn odometry_variance(cfg: &KeyframeConfig, acc: &OdomAccumulator, elapsed_s: f64, missing_s: f64) -> (f64, f64) {
    let trans = (cfg.trans_per_m * acc.distance).max(VARIANCE_FLOOR) + cfg.gap_trans_per_s * missing_s;
    let rot =
        (cfg.rot_per_rad * acc.turn + cfg.rot_per_s * elapsed_s).max(VARIANCE_FLOOR) + cfg.gap_rot_per_s * missing_s;
    (trans, rot)
}

/// Builds the next keyframe after `prev` from the odometry accumulated since.
///
/// Odometry expected at `imu_period_us` but absent from `acc` counts as a
/// gap and widens the edge covariance.
pub fn make_keyframe(
    prev: &KeyframeNode,
    acc: &OdomAccumulator,
    t: Timestamp,
    fingerprint: Option<Fingerprint>,
    cfg: &KeyframeConfig,
    imu_period_us: u64,
) -> (KeyframeNode, OdomEdge) {
    let elapsed_us = t.saturating_sub(prev.t);
    let covered_us = acc.samples as u64 * imu_period_us;
    let missing_s = elapsed_us.saturating_sub(covered_us) as f64 * 1e-6;
    let (vt, vr) = odometry_variance(cfg, acc, elapsed_us as f64 * 1e-6, missing_s);
    let id = prev.id + 1;
    let node = KeyframeNode {
        id,
        t,
        pose: prev.pose.compose(&acc.delta),
        fingerprint,
    };
    let edge = OdomEdge {
        i: prev.id,
        j: id,
        delta: acc.delta,
        info: Mat3Sym::diagonal(1.0 / vt, 1.0 / vt, 1.0 / vr),
    };
    (node, edge)
}

/// Turns odometry and range streams into a growing pose graph, one keyframe
/// per closed epoch.
#[derive(Debug, Clone)]
pub struct KeyframeBuilder {
    cfg: KeyframeConfig,
    imu_period_us: u64,
    n_aps: usize,
    graph: PoseGraph,
    acc: OdomAccumulator,
    pending: Option<Fingerprint>,
}

impl KeyframeBuilder {
    pub fn new(anchor_t: Timestamp, anchor: Pose2, n_aps: usize, imu_period_us: u64, cfg: KeyframeConfig) -> Self {
        KeyframeBuilder {
            cfg,
            imu_period_us,
            n_aps,
            graph: PoseGraph::with_anchor(anchor_t, anchor),
            acc: OdomAccumulator::default(),
            pending: None,
        }
    }

    pub fn push_odometry(&mut self, od: &OdometrySample) {
        self.acc.add(od);
    }

    /// Adds a range to the fingerprint of the epoch at `r.t`.
    pub fn push_range(&mut self, r: &RttSample) {
        let n = self.n_aps;
        let fp = self.pending.get_or_insert_with(|| Fingerprint::empty(r.t, n));
        if fp.t != r.t {
            *fp = Fingerprint::empty(r.t, n);
        }
        fp.set(r.ap_id, r.range);
    }

    /// Closes the epoch at `t`, appending its keyframe. Returns the new node id.
    pub fn close_epoch(&mut self, t: Timestamp) -> usize {
        let fp = match self.pending.take() {
            Some(fp) if fp.t == t => fp,
            _ => Fingerprint::empty(t, self.n_aps),
        };
        let prev = self.graph.nodes.last().expect("graph always holds the anchor");
        let (node, edge) = make_keyframe(prev, &self.acc, t, Some(fp), &self.cfg, self.imu_period_us);
        let id = node.id;
        self.graph.push(node, edge);
        self.acc = OdomAccumulator::default();
        id
    }

    pub fn graph(&self) -> &PoseGraph {
        &self.graph
    }

    pub fn graph_mut(&mut self) -> &mut PoseGraph {
        &mut self.graph
    }

    pub fn into_graph(self) -> PoseGraph {
        self.graph
    }

    /// Keyframes built so far, excluding the anchor.
    pub fn keyframe_count(&self) -> usize {
        self.graph.len() - 1
    }

    /// Dead-reckoned pose at the latest odometry sample.
    pub fn current_pose(&self) -> Pose2 {
        self.graph
            .nodes
            .last()
            .map(|n| n.pose)
            .unwrap_or_default()
            .compose(&self.acc.delta)
    }
}

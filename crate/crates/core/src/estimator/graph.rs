use std::fmt::Write as _;

use crate::geom::{Mat3Sym, Pose2, Timestamp};

use super::{EstimatorError, Fingerprint};

#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeNode {
    pub id: usize,
    pub t: Timestamp,
    pub pose: Pose2,
    /// The anchor and keyframes built from a dump carry no fingerprint.
    pub fingerprint: Option<Fingerprint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdomEdge {
    pub i: usize,
    pub j: usize,
    pub delta: Pose2,
    pub info: Mat3Sym,
}

/// Same-place hypothesis between two keyframes: `p_i == p_j`, heading free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopEdge {
    pub i: usize,
    pub j: usize,
    pub sigma: f64,
    pub phi: f64,
    pub weight: f64,
}

impl LoopEdge {
    pub fn new(i: usize, j: usize, sigma: f64, phi: f64) -> Self {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        LoopEdge {
            i,
            j,
            sigma,
            phi,
            weight: 1.0,
        }
    }
}

/// Keyframe poses chained by odometry, plus loop closures. Node 0 is the anchor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseGraph {
    pub nodes: Vec<KeyframeNode>,
    pub odom_edges: Vec<OdomEdge>,
    pub loop_edges: Vec<LoopEdge>,
}

impl PoseGraph {
    pub fn with_anchor(t: Timestamp, pose: Pose2) -> Self {
        PoseGraph {
            nodes: vec![KeyframeNode {
                id: 0,
                t,
                pose,
                fingerprint: None,
            }],
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn poses(&self) -> Vec<Pose2> {
        self.nodes.iter().map(|n| n.pose).collect()
    }

    pub fn set_poses(&mut self, poses: &[Pose2]) {
        for (n, p) in self.nodes.iter_mut().zip(poses) {
            n.pose = *p;
        }
    }

    /// Appends a node chained to the current last node.
    pub fn push(&mut self, node: KeyframeNode, edge: OdomEdge) {
        debug_assert_eq!(node.id, self.nodes.len());
        debug_assert_eq!((edge.i + 1, edge.j), (edge.j, node.id));
        self.nodes.push(node);
        self.odom_edges.push(edge);
    }

    /// Structural checks: dense ids, one odometry edge per consecutive pair,
    /// loop endpoints in range with `i < j`, positive definite information.
    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |m: String| Err(EstimatorError::InvalidGraph(m));
        if self.nodes.is_empty() {
            return bad("graph has no nodes".into());
        }
        if let Some(n) = self.nodes.iter().enumerate().find(|(k, n)| n.id != *k) {
            return bad(format!("node ids are not dense at {}", n.0));
        }
        if self.odom_edges.len() + 1 != self.nodes.len() {
            return bad("graph is not one odometry chain".into());
        }
        for (k, e) in self.odom_edges.iter().enumerate() {
            if e.i != k || e.j != k + 1 {
                return bad(format!("odometry edge {k} links {} -> {}", e.i, e.j));
            }
            if !e.info.is_positive_definite() {
                return bad(format!("odometry edge {k} information is not positive definite"));
            }
        }
        for e in &self.loop_edges {
            if e.i >= e.j || e.j >= self.nodes.len() {
                return bad(format!("loop edge ({}, {}) out of range", e.i, e.j));
            }
            if !(e.sigma > 0.0 && e.phi > 0.0) {
                return bad(format!("loop edge ({}, {}) needs sigma, phi > 0", e.i, e.j));
            }
        }
        Ok(())
    }

    /// Line-oriented text dump; floats are written in round-trip precision.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for n in &self.nodes {
            let _ = writeln!(s, "NODE {} {} {} {}", n.id, n.pose.x, n.pose.y, n.pose.heading());
        }
        for e in &self.odom_edges {
            let _ = write!(
                s,
                "EDGE_ODOM {} {} {} {} {}",
                e.i,
                e.j,
                e.delta.x,
                e.delta.y,
                e.delta.heading()
            );
            for v in e.info.to_row_major() {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        for e in &self.loop_edges {
            let _ = writeln!(s, "EDGE_LOOP {} {} {} {}", e.i, e.j, e.sigma, e.phi);
        }
        s
    }

    /// Parses [`PoseGraph::dump`] output. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<PoseGraph, EstimatorError> {
        let mut g = PoseGraph::default();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| EstimatorError::Parse {
                line: ln + 1,
                msg: msg.to_string(),
            };
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or_default();
            let fields: Vec<&str> = it.collect();
            let idx = |k: usize| -> Result<usize, EstimatorError> { fields[k].parse().map_err(|_| err("bad index")) };
            let num = |k: usize| -> Result<f64, EstimatorError> { fields[k].parse().map_err(|_| err("bad number")) };
            match (tag, fields.len()) {
                ("NODE", 4) => {
                    let pose = Pose2::try_new(num(1)?, num(2)?, num(3)?).map_err(|e| err(&e.to_string()))?;
                    g.nodes.push(KeyframeNode {
                        id: idx(0)?,
                        t: Timestamp::ZERO,
                        pose,
                        fingerprint: None,
                    });
                }
                ("EDGE_ODOM", 14) => {
                    let delta = Pose2::try_new(num(2)?, num(3)?, num(4)?).map_err(|e| err(&e.to_string()))?;
                    let mut m = [0.0; 9];
                    for (k, v) in m.iter_mut().enumerate() {
                        *v = num(5 + k)?;
                    }
                    let info = Mat3Sym::from_row_major(m).map_err(|e| err(&e.to_string()))?;
                    g.odom_edges.push(OdomEdge {
                        i: idx(0)?,
                        j: idx(1)?,
                        delta,
                        info,
                    });
                }
                ("EDGE_LOOP", 4) => g.loop_edges.push(LoopEdge::new(idx(0)?, idx(1)?, num(2)?, num(3)?)),
                _ => return Err(err("unrecognised record")),
            }
        }
        g.nodes.sort_by_key(|n| n.id);
        g.validate()?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PoseGraph {
        let mut g = PoseGraph::with_anchor(Timestamp::ZERO, Pose2::new(1.0, 1.0, 0.0));
        for k in 1..4 {
            let delta = Pose2::new(0.1 * k as f64, 0.01, 0.3);
            let pose = g.nodes[k - 1].pose.compose(&delta);
            g.push(
                KeyframeNode {
                    id: k,
                    t: Timestamp(k as u64),
                    pose,
                    fingerprint: None,
                },
                OdomEdge {
                    i: k - 1,
                    j: k,
                    delta,
                    info: Mat3Sym::diagonal(100.0, 100.0 / 3.0, 1e4),
                },
            );
        }
        g.loop_edges.push(LoopEdge::new(3, 0, 0.5, 1.0));
        g
    }

    #[test]
    fn dump_round_trips() {
        let g = sample();
        let text = g.dump();
        assert!(text.contains("EDGE_LOOP 0 3 0.5 1\n"));
        let back = PoseGraph::parse(&text).unwrap();
        assert_eq!(back.poses(), g.poses());
        assert_eq!(back.odom_edges, g.odom_edges);
        assert_eq!(back.loop_edges, g.loop_edges);
    }

    #[test]
    fn parse_rejects_broken_chain() {
        let text = "NODE 0 0 0 0\nNODE 1 1 0 0\n";
        assert!(matches!(PoseGraph::parse(text), Err(EstimatorError::InvalidGraph(_))));
        assert!(matches!(
            PoseGraph::parse("NODE 0 0 0"),
            Err(EstimatorError::Parse { line: 1, .. })
        ));
    }
}

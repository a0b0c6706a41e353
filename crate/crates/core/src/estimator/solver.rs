use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::Pose2;

use super::residuals::{dcs_cost, dcs_weight, residual_loop, residual_odom};
use super::sparse::{BlockCholesky, BlockPattern};
use super::{EstimatorError, PoseGraph};

const LAMBDA_MAX: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub lambda_init: f64,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub rel_tol: f64,
    /// DCS parameter given to newly detected loop closures.
    pub phi: f64,
    /// Off gives every loop closure unit weight.
    pub robust: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 50,
            lambda_init: 1e-4,
            rel_tol: 1e-8,
            phi: 1.0,
            robust: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveStats {
    pub initial_chi2: f64,
    pub final_chi2: f64,
    /// Linearizations performed.
    pub iterations: usize,
    /// Cost after each accepted step, starting with the initial cost.
    pub chi2_history: Vec<f64>,
    /// Final weight of each loop closure, in graph order.
    pub loop_weights: Vec<f64>,
    pub converged: bool,
}

/// Weighted cost: odometry `rᵀΩr` plus loop terms, robustified when enabled.
pub fn total_chi2(graph: &PoseGraph, poses: &[Pose2], robust: bool) -> f64 {
    let mut f = 0.0;
    for e in &graph.odom_edges {
        let (r, _, _) = residual_odom(e, &poses[e.i], &poses[e.j]);
        f += e.info.quadratic_form(&r);
    }
    for e in &graph.loop_edges {
        let chi2 = residual_loop(e, &poses[e.i], &poses[e.j]).0.norm_squared();
        f += if robust { dcs_cost(chi2, e.phi) } else { chi2 };
    }
    f
}

/// Current weight of every loop closure.
pub fn loop_weights(graph: &PoseGraph, poses: &[Pose2], robust: bool) -> Vec<f64> {
    graph
        .loop_edges
        .iter()
        .map(|e| {
            if robust {
                let chi2 = residual_loop(e, &poses[e.i], &poses[e.j]).0.norm_squared();
                dcs_weight(chi2, e.phi)
            } else {
                1.0
            }
        })
        .collect()
}

/// Gauss-Newton system over nodes `1..n`; block `k` is node `k + 1`.
fn linearize(graph: &PoseGraph, poses: &[Pose2], robust: bool, h: &mut BlockCholesky<'_>, g: &mut [Vector3<f64>]) {
    g.iter_mut().for_each(|v| *v = Vector3::zeros());
    let mut add = |i: usize,
                   j: usize,
                   hii: Matrix3<f64>,
                   hij: Matrix3<f64>,
                   hjj: Matrix3<f64>,
                   gi: Vector3<f64>,
                   gj: Vector3<f64>| {
        if i > 0 {
            h.add_diag(i - 1, &hii);
            g[i - 1] += gi;
        }
        if j > 0 {
            h.add_diag(j - 1, &hjj);
            g[j - 1] += gj;
        }
        if i > 0 && j > 0 {
            h.add_offdiag(i - 1, j - 1, &hij);
        }
    };
    for e in &graph.odom_edges {
        let (r, ji, jj) = residual_odom(e, &poses[e.i], &poses[e.j]);
        let om = e.info.matrix();
        let (ai, aj) = (ji.transpose() * om, jj.transpose() * om);
        add(e.i, e.j, ai * ji, ai * jj, aj * jj, ai * r, aj * r);
    }
    for e in &graph.loop_edges {
        let (r, ji, jj) = residual_loop(e, &poses[e.i], &poses[e.j]);
        let w2 = if robust {
            dcs_weight(r.norm_squared(), e.phi).powi(2)
        } else {
            1.0
        };
        let (ai, aj) = (ji.transpose() * w2, jj.transpose() * w2);
        add(e.i, e.j, ai * ji, ai * jj, aj * jj, ai * r, aj * r);
    }
}

/// Levenberg-Marquardt over all poses except the anchor, node 0.
///
/// Loop weights are recomputed from the current residuals at every
/// linearization. A trial step is accepted only if it lowers
/// [`total_chi2`]; the damping halves on acceptance and quadruples on
/// rejection. On success the graph holds the optimized poses and weights.
pub fn optimize_in_place(graph: &mut PoseGraph, cfg: &SolverConfig) -> Result<SolveStats, EstimatorError> {
    graph.validate()?;
    let n = graph.len() - 1;
    let mut poses = graph.poses();
    let f0 = total_chi2(graph, &poses, cfg.robust);
    let mut stats = SolveStats {
        initial_chi2: f0,
        final_chi2: f0,
        chi2_history: vec![f0],
        ..Default::default()
    };
    let finish = |graph: &mut PoseGraph, poses: &[Pose2], stats: &mut SolveStats| {
        graph.set_poses(poses);
        let w = loop_weights(graph, poses, cfg.robust);
        for (e, w) in graph.loop_edges.iter_mut().zip(&w) {
            e.weight = *w;
        }
        stats.loop_weights = w;
    };
    if n == 0 || !f0.is_finite() {
        stats.converged = n == 0;
        finish(graph, &poses, &mut stats);
        return if stats.converged {
            Ok(stats)
        } else {
            Err(EstimatorError::SolverDiverged(Box::new(stats)))
        };
    }

    let pattern = BlockPattern::new(
        n,
        graph
            .odom_edges
            .iter()
            .map(|e| (e.i, e.j))
            .chain(graph.loop_edges.iter().map(|e| (e.i, e.j)))
            .filter(|&(i, j)| i > 0 && j > 0)
            .map(|(i, j)| (i - 1, j - 1)),
    );
    let mut lambda = cfg.lambda_init;
    let mut f = f0;
    let mut g = vec![Vector3::zeros(); n];

    'outer: while stats.iterations < cfg.max_iters {
        if f <= f64::MIN_POSITIVE {
            stats.converged = true;
            break;
        }
        stats.iterations += 1;
        let mut base = BlockCholesky::new(&pattern);
        linearize(graph, &poses, cfg.robust, &mut base, &mut g);
        let neg_g: Vec<Vector3<f64>> = g.iter().map(|v| -v).collect();
        loop {
            let mut h = base.clone();
            h.damp(lambda);
            if h.factor().is_err() {
                lambda *= 4.0;
                if lambda > LAMBDA_MAX {
                    break 'outer;
                }
                continue;
            }
            let step = h.solve(&neg_g);
            let mut trial = poses.clone();
            let mut step_norm = 0.0f64;
            for (k, d) in step.iter().enumerate() {
                trial[k + 1] = poses[k + 1].retract(d);
                step_norm = step_norm.max(d.amax());
            }
            let ft = total_chi2(graph, &trial, cfg.robust);
            if ft < f {
                let rel = (f - ft) / f;
                poses = trial;
                f = ft;
                stats.chi2_history.push(f);
                lambda = (lambda * 0.5).max(1e-12);
                if rel < cfg.rel_tol || step_norm < 1e-12 {
                    stats.converged = true;
                    break 'outer;
                }
                continue 'outer;
            }
            // No descent left at the precision of the cost itself.
            if step_norm < 1e-12 || ft - f <= 1e-12 * f {
                stats.converged = true;
                break 'outer;
            }
            lambda *= 4.0;
            if lambda > LAMBDA_MAX {
                break 'outer;
            }
        }
    }
    stats.final_chi2 = f;
    let hit_limit = stats.iterations >= cfg.max_iters;
    finish(graph, &poses, &mut stats);
    if stats.converged || hit_limit {
        Ok(stats)
    } else {
        Err(EstimatorError::SolverDiverged(Box::new(stats)))
    }
}

/// Value-semantics wrapper around [`optimize_in_place`].
pub fn optimize(graph: &PoseGraph, cfg: &SolverConfig) -> Result<(PoseGraph, SolveStats), EstimatorError> {
    let mut g = graph.clone();
    let stats = optimize_in_place(&mut g, cfg)?;
    Ok((g, stats))
}

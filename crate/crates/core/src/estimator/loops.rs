use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{fingerprint_distance, KeyframeNode, LoopEdge};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    /// Minimum `j - i` in keyframes.
    pub min_separation: usize,
    /// Maximum fingerprint distance for a match, m.
    pub match_threshold: f64,
    pub min_aps_for_match: usize,
    /// Standard deviation of the same-place constraint, m.
    pub sigma_lc: f64,
    /// A candidate within this many keyframes (at both ends) of an accepted
    /// closure is redundant. Also the half-width of the local-minimum test.
    pub suppression_window: usize,
    /// A candidate for keyframe `j` must lie within this factor of the best
    /// match `j` has anywhere.
    pub best_match_ratio: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            min_separation: 50,
            match_threshold: 0.8,
            min_aps_for_match: 3,
            sigma_lc: 0.5,
            suppression_window: 10,
            best_match_ratio: 2.0,
        }
    }
}

/// Accepted closures bucketed on a grid so the suppression test is O(1).
struct Suppressor {
    w: usize,
    cells: HashMap<(usize, usize), Vec<(usize, usize)>>,
}

impl Suppressor {
    fn new(w: usize, edges: &[LoopEdge]) -> Self {
        let mut s = Suppressor {
            w,
            cells: HashMap::new(),
        };
        for e in edges {
            s.insert(e.i, e.j);
        }
        s
    }

    fn cell(&self, i: usize, j: usize) -> (usize, usize) {
        (i / (self.w + 1), j / (self.w + 1))
    }

    fn insert(&mut self, i: usize, j: usize) {
        let c = self.cell(i, j);
        self.cells.entry(c).or_default().push((i, j));
    }

    fn covered(&self, i: usize, j: usize) -> bool {
        let (ci, cj) = self.cell(i, j);
        for a in ci.saturating_sub(1)..=ci + 1 {
            for b in cj.saturating_sub(1)..=cj + 1 {
                if let Some(v) = self.cells.get(&(a, b)) {
                    if v.iter()
                        .any(|&(x, y)| x.abs_diff(i) <= self.w && y.abs_diff(j) <= self.w)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Exhaustive pairwise detection over all keyframes. New edges carry the
/// robust kernel parameter `phi`.
pub fn detect_loop_closures(nodes: &[KeyframeNode], cfg: &LoopConfig, phi: f64) -> Vec<LoopEdge> {
    detect_new_loop_closures(nodes, &[], 0, cfg, phi)
}

/// Detection restricted to pairs whose later keyframe has id `>= from`,
/// suppressed against `existing` closures.
///
/// For each later keyframe `j` only matches that are a local minimum of the
/// distance over `i ± suppression_window` and within `best_match_ratio` of
/// `j`'s best match survive; a place seen on several earlier passes thus
/// yields one candidate per pass instead of a smear of neighbours. Survivors
/// are accepted best first, ordered by distance and then by ids, so the
/// result does not depend on iteration order.
pub fn detect_new_loop_closures(
    nodes: &[KeyframeNode],
    existing: &[LoopEdge],
    from: usize,
    cfg: &LoopConfig,
    phi: f64,
) -> Vec<LoopEdge> {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut row: Vec<Option<f64>> = Vec::new();
    let w = cfg.suppression_window;
    for (j, nj) in nodes.iter().enumerate().skip(from.max(cfg.min_separation)) {
        let Some(fj) = &nj.fingerprint else { continue };
        if fj.present() < cfg.min_aps_for_match {
            continue;
        }
        let earlier = &nodes[..=j - cfg.min_separation];
        row.clear();
        row.extend(earlier.iter().map(|ni| {
            let fi = ni.fingerprint.as_ref()?;
            fingerprint_distance(fi, fj, cfg.min_aps_for_match)
        }));
        let Some(best) = row.iter().flatten().copied().min_by(f64::total_cmp) else {
            continue;
        };
        let limit = cfg.match_threshold.min(best * cfg.best_match_ratio);
        for (i, d) in row.iter().enumerate() {
            let Some(d) = *d else { continue };
            if d > limit {
                continue;
            }
            let lo = i.saturating_sub(w);
            let hi = (i + w).min(row.len() - 1);
            let local_min = (lo..=hi).all(|k| match row[k] {
                Some(o) if k < i => o > d,
                Some(o) => o >= d,
                None => true,
            });
            if local_min {
                candidates.push((d, earlier[i].id, nj.id));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut sup = Suppressor::new(cfg.suppression_window, existing);
    let mut out = Vec::new();
    for (_, i, j) in candidates {
        if !sup.covered(i, j) {
            sup.insert(i, j);
            out.push(LoopEdge::new(i, j, cfg.sigma_lc, phi));
        }
    }
    out.sort_by_key(|e| (e.j, e.i));
    out
}

use serde::{Deserialize, Serialize};

use crate::geom::{Pose2, Timestamp};
use crate::sim::{build_scenario, simulate, GroundTruthTrajectory, ScenarioConfig};

use super::{
    choose_false_positives, error_series, run_graph, run_pdr, EvalError, Method, MetricsReport, PipelineConfig,
};

/// Wrong closures added to every graph-based run, to test robustness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FalsePositiveConfig {
    pub clusters: usize,
    /// Consecutive keyframe pairs per cluster.
    pub cluster_len: usize,
    /// Minimum true distance between the two ends, m.
    pub min_distance: f64,
}

impl Default for FalsePositiveConfig {
    fn default() -> Self {
        FalsePositiveConfig {
            clusters: 30,
            cluster_len: 10,
            min_distance: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Base scenario; each seed replaces its seed.
    pub scenario: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub false_positives: FalsePositiveConfig,
    pub pipeline: PipelineConfig,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioConfig) -> Self {
        ExperimentConfig {
            scenario,
            seeds: vec![0],
            methods: Method::ALL.to_vec(),
            false_positives: FalsePositiveConfig::default(),
            pipeline: PipelineConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.seeds.is_empty() {
            return Err(EvalError::InvalidConfig("at least one seed is required".into()));
        }
        if self.methods.is_empty() {
            return Err(EvalError::InvalidConfig("at least one method is required".into()));
        }
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        if m.len() != self.methods.len() {
            return Err(EvalError::InvalidConfig("methods are listed more than once".into()));
        }
        Ok(())
    }
}

/// Graph diagnostics of a pose-graph run.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSummary {
    pub loops: usize,
    pub injected: usize,
    /// Mean final weight of the injected closures.
    pub injected_mean_weight: f64,
    pub solves: usize,
    pub failed_solves: usize,
    pub final_chi2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub metrics: MetricsReport,
    pub trajectory: Vec<(Timestamp, Pose2)>,
    /// Position error at each trajectory sample, m.
    pub errors: Vec<f64>,
    pub graph: Option<GraphSummary>,
}

/// One method on one seed. Failures are kept, not propagated.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: Method,
    pub seed: u64,
    pub outcome: Result<MethodResult, String>,
}

/// Median and mean over the seeds that succeeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub failures: usize,
    pub median_rmse: f64,
    pub mean_rmse: f64,
    pub median_p90: f64,
    pub mean_p90: f64,
    pub median_endpoint: f64,
    pub mean_endpoint: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub scenario: String,
    pub path_length: f64,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub runs: Vec<MethodRun>,
    /// Ground truth of the first seed, for plots.
    pub ground_truth: Option<GroundTruthTrajectory>,
    pub area: [f64; 2],
    pub aps: Vec<[f64; 2]>,
}

/// Middle value; mean of the two middle values for an even count.
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// `(baseline − proposed) / proposed`.
pub fn improvement_ratio(baseline: f64, proposed: f64) -> f64 {
    (baseline - proposed) / proposed
}

impl ExperimentReport {
    pub fn runs_of(&self, method: Method) -> impl Iterator<Item = &MethodRun> {
        self.runs.iter().filter(move |r| r.method == method)
    }

    pub fn aggregate(&self, method: Method) -> Aggregate {
        let ok: Vec<&MetricsReport> = self
            .runs_of(method)
            .filter_map(|r| r.outcome.as_ref().ok())
            .map(|r| &r.metrics)
            .collect();
        let col = |f: fn(&MetricsReport) -> f64| ok.iter().map(|m| f(m)).collect::<Vec<_>>();
        let (rmse, p90, end) = (col(|m| m.rmse), col(|m| m.p90), col(|m| m.endpoint));
        Aggregate {
            runs: ok.len(),
            failures: self.runs_of(method).count() - ok.len(),
            median_rmse: median(&rmse),
            mean_rmse: mean(&rmse),
            median_p90: median(&p90),
            mean_p90: mean(&p90),
            median_endpoint: median(&end),
            mean_endpoint: mean(&end),
        }
    }

    /// Result of `method` on the first seed, if it succeeded.
    pub fn first(&self, method: Method) -> Option<&MethodResult> {
        let seed = *self.seeds.first()?;
        self.runs_of(method)
            .find(|r| r.seed == seed)
            .and_then(|r| r.outcome.as_ref().ok())
    }
}

fn graph_summary(run: &super::GraphRun, injected: &[(usize, usize)]) -> GraphSummary {
    let weights: Vec<f64> = run
        .graph
        .loop_edges
        .iter()
        .filter(|e| injected.binary_search(&(e.i, e.j)).is_ok())
        .map(|e| e.weight)
        .collect();
    GraphSummary {
        loops: run.graph.loop_edges.len(),
        injected: weights.len(),
        injected_mean_weight: mean(&weights),
        solves: run.solves,
        failed_solves: run.failed_solves,
        final_chi2: run.last_stats.as_ref().map_or(f64::NAN, |s| s.final_chi2),
    }
}

/// Runs every method on every seed.
///
/// Graph methods see the same detected closures plus the same injected
/// false ones, so they differ only in how loop closures are weighted.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, EvalError> {
    cfg.validate()?;
    let mut report = ExperimentReport {
        scenario: cfg.scenario.name.clone(),
        path_length: f64::NAN,
        seeds: cfg.seeds.clone(),
        methods: cfg.methods.clone(),
        runs: Vec::new(),
        ground_truth: None,
        area: cfg.scenario.area,
        aps: cfg.scenario.aps.clone(),
    };
    for &seed in &cfg.seeds {
        let scenario = match build_scenario(cfg.scenario.clone().with_seed(seed)) {
            Ok(s) => s,
            Err(e) => {
                for &method in &cfg.methods {
                    report.runs.push(MethodRun {
                        method,
                        seed,
                        outcome: Err(format!("scenario: {e}")),
                    });
                }
                continue;
            }
        };
        let (gt, streams) = simulate(&scenario);
        report.path_length = gt.path_length;
        let fp = &cfg.false_positives;
        let injected = if cfg.methods.iter().any(|m| *m != Method::Pdr) && fp.clusters > 0 {
            let mut v = choose_false_positives(
                &scenario,
                &gt,
                fp.clusters,
                fp.cluster_len,
                fp.min_distance,
                cfg.pipeline.loops.min_separation,
                seed,
            );
            v.sort();
            v
        } else {
            Vec::new()
        };
        for &method in &cfg.methods {
            let outcome = match method {
                Method::Pdr => Ok((run_pdr(&scenario, &gt, &streams), None)),
                Method::Traditional | Method::Robust => run_graph(
                    &scenario,
                    &gt,
                    &streams,
                    &cfg.pipeline,
                    method == Method::Robust,
                    &injected,
                )
                .map(|run| {
                    let g = graph_summary(&run, &injected);
                    (run.trajectory, Some(g))
                }),
            }
            .and_then(|(trajectory, graph)| {
                Ok(MethodResult {
                    metrics: MetricsReport::compute(method.as_str(), &trajectory, &gt)?,
                    errors: error_series(&trajectory, &gt)?.e,
                    trajectory,
                    graph,
                })
            })
            .map_err(|e| e.to_string());
            report.runs.push(MethodRun { method, seed, outcome });
        }
        if report.ground_truth.is_none() {
            report.ground_truth = Some(gt);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn ratio_formula() {
        assert!((improvement_ratio(2.67, 0.13) - 19.538_461_538).abs() < 1e-6);
        assert_eq!(improvement_ratio(1.0, 1.0), 0.0);
    }

    #[test]
    fn empty_seeds_or_methods_are_rejected() {
        let mut c = ExperimentConfig::new(ScenarioConfig::exp1());
        c.seeds.clear();
        assert!(matches!(run_experiment(&c), Err(EvalError::InvalidConfig(_))));
        let mut c = ExperimentConfig::new(ScenarioConfig::exp1());
        c.methods.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn pdr_only_single_seed() {
        let mut c = ExperimentConfig::new(ScenarioConfig::exp1());
        c.methods = vec![Method::Pdr];
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.runs.len(), 1);
        let res = r.first(Method::Pdr).unwrap();
        assert!(res.graph.is_none());
        assert!(res.metrics.rmse > 0.0);
    }

    #[test]
    fn bad_scenario_is_annotated_not_fatal() {
        let mut sc = ScenarioConfig::exp1();
        sc.speed = -1.0;
        let mut c = ExperimentConfig::new(sc);
        c.methods = vec![Method::Pdr, Method::Robust];
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.runs.len(), 2);
        assert!(r.runs.iter().all(|x| x.outcome.is_err()));
        assert_eq!(r.aggregate(Method::Pdr).failures, 1);
    }
}

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::geom::{Pose2, Timestamp};

use super::{improvement_ratio, svg, ExperimentReport, Method};

/// `t_us,x,y,theta`, the same layout as the ground-truth CSV.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &[(Timestamp, Pose2)]) -> io::Result<()> {
    writeln!(w, "t_us,x,y,theta")?;
    for (t, p) in traj {
        writeln!(w, "{},{:.6},{:.6},{:.6}", t.0, p.x, p.y, p.heading())?;
    }
    Ok(())
}

/// `error_m,fraction`
pub fn write_cdf_csv<W: Write>(mut w: W, cdf: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "error_m,fraction")?;
    for (e, f) in cdf {
        writeln!(w, "{e:.6},{f:.6}")?;
    }
    Ok(())
}

fn fmt_metric(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "nan".into()
    }
}

fn create(dir: &Path, name: &str) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

impl ExperimentReport {
    /// `method,seed,rmse,p90,endpoint`, one row per run; failed runs get `nan`.
    pub fn write_metrics_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "method,seed,rmse,p90,endpoint")?;
        for &method in &self.methods {
            for r in self.runs_of(method) {
                let (a, b, c) = match &r.outcome {
                    Ok(res) => (res.metrics.rmse, res.metrics.p90, res.metrics.endpoint),
                    Err(_) => (f64::NAN, f64::NAN, f64::NAN),
                };
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    method,
                    r.seed,
                    fmt_metric(a),
                    fmt_metric(b),
                    fmt_metric(c)
                )?;
            }
        }
        Ok(())
    }

    /// Empirical CDF of the errors of every successful seed pooled together.
    pub fn pooled_cdf(&self, method: Method) -> Vec<(f64, f64)> {
        let errors: Vec<f64> = self
            .runs_of(method)
            .filter_map(|r| r.outcome.as_ref().ok())
            .flat_map(|res| res.errors.iter().copied())
            .collect();
        super::cdf(&errors).unwrap_or_default()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario      {}", self.scenario);
        let _ = writeln!(s, "path_length_m {:.2}", self.path_length);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "seeds         {}", seeds.join(" "));
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<12} {:>4} {:>6} {:>11} {:>9} {:>10} {:>8} {:>15} {:>13}",
            "method",
            "runs",
            "failed",
            "median_rmse",
            "mean_rmse",
            "median_p90",
            "mean_p90",
            "median_endpoint",
            "mean_endpoint"
        );
        for &m in &self.methods {
            let a = self.aggregate(m);
            let _ = writeln!(
                s,
                "{:<12} {:>4} {:>6} {:>11.4} {:>9.4} {:>10.4} {:>8.4} {:>15.4} {:>13.4}",
                m.as_str(),
                a.runs,
                a.failures,
                a.median_rmse,
                a.mean_rmse,
                a.median_p90,
                a.mean_p90,
                a.median_endpoint,
                a.mean_endpoint
            );
        }
        if self.methods.contains(&Method::Robust) {
            let p = self.aggregate(Method::Robust);
            let _ = writeln!(s);
            let _ = writeln!(s, "improvement of robust, (baseline - robust) / robust, on medians:");
            for &b in self.methods.iter().filter(|m| **m != Method::Robust) {
                let a = self.aggregate(b);
                let _ = writeln!(
                    s,
                    "  vs {:<12} rmse {:>9.1}%  p90 {:>9.1}%",
                    b.as_str(),
                    100.0 * improvement_ratio(a.median_rmse, p.median_rmse),
                    100.0 * improvement_ratio(a.median_p90, p.median_p90)
                );
            }
        }
        let graph_runs: Vec<_> = self
            .runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().and_then(|o| o.graph.as_ref()).map(|g| (r, g)))
            .collect();
        if !graph_runs.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{:<12} {:>5} {:>6} {:>8} {:>14} {:>7} {:>7} {:>12}",
                "graph", "seed", "loops", "injected", "injected_mean_w", "solves", "failed", "final_chi2"
            );
            for (r, g) in graph_runs {
                let _ = writeln!(
                    s,
                    "{:<12} {:>5} {:>6} {:>8} {:>14.4} {:>7} {:>7} {:>12.3}",
                    r.method.as_str(),
                    r.seed,
                    g.loops,
                    g.injected,
                    g.injected_mean_weight,
                    g.solves,
                    g.failed_solves,
                    g.final_chi2
                );
            }
        }
        let failures: Vec<_> = self
            .runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().err().map(|e| (r, e)))
            .collect();
        if !failures.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "failures:");
            for (r, e) in failures {
                let _ = writeln!(s, "  {} seed {}: {}", r.method, r.seed, e);
            }
        }
        s
    }

    /// Ground truth and every successful method on the first seed.
    pub fn overlay_svg(&self) -> String {
        let mut series = Vec::new();
        if let Some(gt) = &self.ground_truth {
            series.push(svg::Series {
                label: "ground truth".into(),
                points: gt.samples.iter().map(|(_, p)| (p.x, p.y)).collect(),
            });
        }
        for &m in &self.methods {
            if let Some(res) = self.first(m) {
                series.push(svg::Series {
                    label: m.as_str().into(),
                    points: res.trajectory.iter().map(|(_, p)| (p.x, p.y)).collect(),
                });
            }
        }
        svg::overlay(self.area, &self.aps, &series)
    }

    /// Writes every artifact into `dir`, which must exist.
    pub fn write_outputs(&self, dir: &Path) -> io::Result<()> {
        for &m in &self.methods {
            if let Some(res) = self.first(m) {
                let mut w = create(dir, &format!("trajectory_{m}.csv"))?;
                write_trajectory_csv(&mut w, &res.trajectory)?;
                w.flush()?;
            }
            let mut w = create(dir, &format!("cdf_{m}.csv"))?;
            write_cdf_csv(&mut w, &self.pooled_cdf(m))?;
            w.flush()?;
        }
        if let Some(gt) = &self.ground_truth {
            let mut w = create(dir, "ground_truth.csv")?;
            gt.write_csv(&mut w)?;
            w.flush()?;
        }
        let mut w = create(dir, "metrics.csv")?;
        self.write_metrics_csv(&mut w)?;
        w.flush()?;
        std::fs::write(dir.join("overlay.svg"), self.overlay_svg())?;
        std::fs::write(dir.join("summary.txt"), self.summary())?;
        Ok(())
    }
}

use crate::geom::{Pose2, Timestamp};
use crate::sim::GroundTruthTrajectory;

use super::EvalError;

/// Planar position error of each estimate against interpolated ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub t: Vec<Timestamp>,
    pub e: Vec<f64>,
}

/// Summary metrics for one method on one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub method: String,
    pub rmse: f64,
    pub p90: f64,
    pub endpoint: f64,
    pub cdf: Vec<(f64, f64)>,
    pub path_length: f64,
}

/// `e(i) = ‖l(i) − g(t_i)‖` with ground truth linearly interpolated to `t_i`.
pub fn error_series(est: &[(Timestamp, Pose2)], gt: &GroundTruthTrajectory) -> Result<ErrorSeries, EvalError> {
    if est.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut out = ErrorSeries {
        t: Vec::with_capacity(est.len()),
        e: Vec::with_capacity(est.len()),
    };
    for (t, p) in est {
        let (x, y) = gt.position_at(*t).ok_or(EvalError::OutsideGroundTruth(*t))?;
        out.t.push(*t);
        out.e.push((p.x - x).hypot(p.y - y));
    }
    Ok(out)
}

/// `√(Σ e(i)² / n)`.
pub fn rmse(e: &[f64]) -> Result<f64, EvalError> {
    if e.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok((e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64).sqrt())
}

/// Nearest-rank percentile: the `⌈q·n⌉`-th smallest error, `0 < q ≤ 1`.
pub fn percentile(e: &[f64], q: f64) -> Result<f64, EvalError> {
    if e.is_empty() {
        return Err(EvalError::Empty);
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(EvalError::BadQuantile(q));
    }
    let mut s = e.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    // The small slack keeps q·n that should be an integer from rounding up.
    let rank = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(s[rank - 1])
}

/// Empirical CDF with one step per distinct error value.
pub fn cdf(e: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    if e.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut s = e.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, v) in s.iter().enumerate() {
        let frac = (k + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    if let Some(last) = out.last_mut() {
        last.1 = 1.0;
    }
    Ok(out)
}

/// Error at the final estimate.
pub fn endpoint_error(est: &[(Timestamp, Pose2)], gt: &GroundTruthTrajectory) -> Result<f64, EvalError> {
    let last = est.last().ok_or(EvalError::Empty)?;
    Ok(error_series(std::slice::from_ref(last), gt)?.e[0])
}

impl MetricsReport {
    pub fn compute(method: &str, est: &[(Timestamp, Pose2)], gt: &GroundTruthTrajectory) -> Result<Self, EvalError> {
        let es = error_series(est, gt)?;
        Ok(MetricsReport {
            method: method.to_string(),
            rmse: rmse(&es.e)?,
            p90: percentile(&es.e, 0.9)?,
            endpoint: *es.e.last().expect("nonempty"),
            cdf: cdf(&es.e)?,
            path_length: gt.path_length,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line_gt() -> GroundTruthTrajectory {
        GroundTruthTrajectory::from_samples(
            (0..=100)
                .map(|k| (Timestamp(k * 10_000), Pose2::new(0.01 * k as f64, 0.0, 0.0)))
                .collect(),
        )
    }

    #[test]
    fn identical_and_shifted_estimates() {
        let gt = line_gt();
        assert!(error_series(&gt.samples, &gt).unwrap().e.iter().all(|e| *e == 0.0));
        let shifted: Vec<_> = gt
            .samples
            .iter()
            .map(|(t, p)| (*t, Pose2::new(p.x + 1.0, p.y, 0.0)))
            .collect();
        assert!(error_series(&shifted, &gt)
            .unwrap()
            .e
            .iter()
            .all(|e| (e - 1.0).abs() < 1e-12));
    }

    #[test]
    fn interpolated_midpoint() {
        let gt = line_gt();
        let est = [(Timestamp(255_000), Pose2::new(0.255, 0.0, 0.0))];
        assert!(error_series(&est, &gt).unwrap().e[0] < 1e-12);
        let late = [(Timestamp(2_000_000), Pose2::IDENTITY)];
        assert!(matches!(
            error_series(&late, &gt),
            Err(EvalError::OutsideGroundTruth(_))
        ));
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((rmse(&[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn percentile_examples() {
        let e: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile(&e, 0.9).unwrap(), 9.0);
        assert_eq!(percentile(&e, 1.0).unwrap(), 10.0);
        assert_eq!(percentile(&[2.5; 7], 0.33).unwrap(), 2.5);
        assert!(percentile(&e, 0.0).is_err());
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(
            cdf(&[3.0, 1.0, 2.0]).unwrap(),
            vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]
        );
        assert_eq!(cdf(&[2.0, 2.0]).unwrap(), vec![(2.0, 1.0)]);
    }

    #[test]
    fn endpoint_three_four_five() {
        let gt = line_gt();
        let mut est = gt.samples.clone();
        assert_eq!(endpoint_error(&est, &gt).unwrap(), 0.0);
        let (t, p) = *est.last().unwrap();
        *est.last_mut().unwrap() = (t, Pose2::new(p.x + 3.0, p.y + 4.0, 0.0));
        assert!((endpoint_error(&est, &gt).unwrap() - 5.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_and_consistent(e in proptest::collection::vec(0.0..50.0f64, 1..200), q in 0.001..1.0f64) {
            let c = cdf(&e).unwrap();
            prop_assert!(c.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
            prop_assert_eq!(c.last().unwrap().1, 1.0);
            let p = percentile(&e, q).unwrap();
            let n = e.len() as f64;
            let smallest = c.iter().find(|(_, f)| f * n >= q * n - 1e-9).unwrap().0;
            prop_assert_eq!(p, smallest);
            let r = rmse(&e).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert_eq!(r == 0.0, e.iter().all(|v| *v == 0.0));
        }
    }
}

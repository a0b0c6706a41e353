use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};

use crate::geom::{wrap, Pose2};

use super::{LoopEdge, OdomEdge};

/// Dynamic Covariance Scaling factor `min(1, 2φ/(φ + χ²))`.
#[inline]
pub fn dcs_weight(chi2: f64, phi: f64) -> f64 {
    (2.0 * phi / (phi + chi2)).min(1.0)
}

/// Cost whose gradient in `χ²` is the squared DCS factor: the objective that
/// iteratively reweighted steps with residuals scaled by [`dcs_weight`] descend.
#[inline]
pub fn dcs_cost(chi2: f64, phi: f64) -> f64 {
    if chi2 <= phi {
        chi2
    } else {
        3.0 * phi - 4.0 * phi * phi / (phi + chi2)
    }
}

/// Relative-pose residual `between(delta, between(x_i, x_j))` and its
/// Jacobians with respect to `(x, y, θ)` of each endpoint.
pub fn residual_odom(edge: &OdomEdge, xi: &Pose2, xj: &Pose2) -> (Vector3<f64>, Matrix3<f64>, Matrix3<f64>) {
    let (si, ci) = xi.heading().sin_cos();
    let (sz, cz) = edge.delta.heading().sin_cos();
    let (dx, dy) = (xj.x - xi.x, xj.y - xi.y);
    // q = R_iᵀ (p_j - p_i)
    let (qx, qy) = (ci * dx + si * dy, -si * dx + ci * dy);
    let (ux, uy) = (qx - edge.delta.x, qy - edge.delta.y);
    let r = Vector3::new(
        cz * ux + sz * uy,
        -sz * ux + cz * uy,
        wrap(xj.heading() - xi.heading() - edge.delta.heading()),
    );
    // A = R_zᵀ R_iᵀ = R(θ_i + θ_z)ᵀ
    let (sa, ca) = (xi.heading() + edge.delta.heading()).sin_cos();
    // R_zᵀ (q_y, -q_x)
    let (gx, gy) = (cz * qy - sz * qx, -sz * qy - cz * qx);
    let ji = Matrix3::new(-ca, -sa, gx, sa, -ca, gy, 0.0, 0.0, -1.0);
    let jj = Matrix3::new(ca, sa, 0.0, -sa, ca, 0.0, 0.0, 0.0, 1.0);
    (r, ji, jj)
}

/// Same-place residual `(p_j - p_i) / σ` and its Jacobians; heading is free.
pub fn residual_loop(edge: &LoopEdge, xi: &Pose2, xj: &Pose2) -> (Vector2<f64>, Matrix2x3<f64>, Matrix2x3<f64>) {
    let k = 1.0 / edge.sigma;
    let r = Vector2::new((xj.x - xi.x) * k, (xj.y - xi.y) * k);
    let ji = Matrix2x3::new(-k, 0.0, 0.0, 0.0, -k, 0.0);
    (r, ji, -ji)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Mat3Sym;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn odom(delta: Pose2) -> OdomEdge {
        OdomEdge {
            i: 0,
            j: 1,
            delta,
            info: Mat3Sym::identity(),
        }
    }

    #[test]
    fn dcs_examples() {
        assert_eq!(dcs_weight(0.0, 1.0), 1.0);
        assert_eq!(dcs_weight(1.0, 1.0), 1.0);
        assert_eq!(dcs_weight(3.0, 1.0), 0.5);
    }

    #[test]
    fn dcs_cost_derivative_is_squared_weight() {
        for &x in &[0.1, 0.9, 1.5, 3.0, 40.0] {
            let h = 1e-6;
            let d = (dcs_cost(x + h, 1.0) - dcs_cost(x - h, 1.0)) / (2.0 * h);
            assert!((d - dcs_weight(x, 1.0).powi(2)).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn consistent_odometry_has_zero_residual() {
        let xi = Pose2::new(1.0, -2.0, 2.5);
        let delta = Pose2::new(0.3, 0.1, 1.2);
        let (r, _, _) = residual_odom(&odom(delta), &xi, &xi.compose(&delta));
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn residual_grows_linearly_with_translation() {
        let xi = Pose2::new(0.0, 0.0, 0.4);
        let delta = Pose2::new(0.2, 0.0, 0.0);
        let xj = xi.compose(&delta);
        let n = |eps: f64| {
            residual_odom(&odom(delta), &xi, &Pose2::new(xj.x + eps, xj.y, xj.heading()))
                .0
                .norm()
        };
        assert!((n(1e-3) / 1e-3 - n(2e-3) / 2e-3).abs() < 1e-9);
        assert!((n(1e-3) - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn loop_residual_arithmetic() {
        let e = LoopEdge::new(0, 60, 0.5, 1.0);
        let a = Pose2::new(1.0, 1.0, 0.0);
        assert_eq!(residual_loop(&e, &a, &a).0, Vector2::zeros());
        let (r, _, _) = residual_loop(&e, &a, &Pose2::new(1.5, 1.0, 2.0));
        assert!((r - Vector2::new(1.0, 0.0)).norm() < 1e-15);
    }

    fn pose() -> impl Strategy<Value = Pose2> {
        (-10.0..10.0f64, -10.0..10.0f64, -PI..PI).prop_map(|(x, y, t)| Pose2::new(x, y, t))
    }

    /// Central differences of `f` in each coordinate of `x`, heading included.
    fn numeric<const R: usize>(f: impl Fn(&Pose2) -> [f64; R], x: &Pose2) -> Vec<[f64; R]> {
        let h = 1e-6;
        (0..3)
            .map(|k| {
                let mut d = Vector3::zeros();
                d[k] = h;
                let (a, b) = (f(&x.retract(&d)), f(&x.retract(&-d)));
                let mut col = [0.0; R];
                for r in 0..R {
                    col[r] = (a[r] - b[r]) / (2.0 * h);
                }
                col
            })
            .collect()
    }

    fn rel_err(analytic: f64, numeric: f64) -> f64 {
        (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn odom_jacobians_match_finite_differences(xi in pose(), xj in pose(), z in pose()) {
            let e = odom(z);
            let (_, ji, jj) = residual_odom(&e, &xi, &xj);
            let fi = |p: &Pose2| { let r = residual_odom(&e, p, &xj).0; [r[0], r[1], r[2]] };
            let fj = |p: &Pose2| { let r = residual_odom(&e, &xi, p).0; [r[0], r[1], r[2]] };
            // Skip configurations sitting on the ±π heading seam.
            prop_assume!(residual_odom(&e, &xi, &xj).0[2].abs() < PI - 1e-3);
            for (jac, num) in [(ji, numeric(fi, &xi)), (jj, numeric(fj, &xj))] {
                for c in 0..3 { for r in 0..3 {
                    prop_assert!(rel_err(jac[(r, c)], num[c][r]) < 1e-5, "{r},{c}: {} vs {}", jac[(r, c)], num[c][r]);
                }}
            }
        }

        #[test]
        fn loop_jacobians_match_finite_differences(xi in pose(), xj in pose(), sigma in 0.1..2.0f64) {
            let e = LoopEdge::new(0, 1, sigma, 1.0);
            let (_, ji, jj) = residual_loop(&e, &xi, &xj);
            let fi = |p: &Pose2| { let r = residual_loop(&e, p, &xj).0; [r[0], r[1]] };
            let fj = |p: &Pose2| { let r = residual_loop(&e, &xi, p).0; [r[0], r[1]] };
            for (jac, num) in [(ji, numeric(fi, &xi)), (jj, numeric(fj, &xj))] {
                for c in 0..3 { for r in 0..2 {
                    prop_assert!(rel_err(jac[(r, c)], num[c][r]) < 1e-5);
                }}
            }
        }
    }
}

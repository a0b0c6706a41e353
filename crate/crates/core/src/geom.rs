//! Planar rigid-body geometry, angle arithmetic and session time.
//!
//! Every angle handled by this crate lives in `(-π, π]`. Values are wrapped
//! when they are constructed, so two headings that denote the same direction
//! always compare equal.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite value: {0}")]
    NonFinite(f64),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Wraps a finite angle into `(-π, π]`. `-π` maps to `+π`.
#[inline]
pub fn wrap(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Checked version of [`wrap`].
pub fn wrap_angle(a: f64) -> Result<Angle, GeomError> {
    Angle::new(a)
}

/// A heading in radians, always normalized to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(radians: f64) -> Result<Self, GeomError> {
        if !radians.is_finite() {
            return Err(GeomError::NonFinite(radians));
        }
        Ok(Angle(wrap(radians)))
    }

    /// Wraps without the finiteness check. NaN stays NaN.
    #[inline]
    pub fn wrapped(radians: f64) -> Self {
        Angle(wrap(radians))
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Angle {
    type Error = GeomError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Angle::new(v)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::wrapped(self.0 + rhs.0)
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle::wrapped(self.0 - rhs.0)
    }
}

/// An SE(2) pose: position in meters and heading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: Angle,
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        x: 0.0,
        y: 0.0,
        theta: Angle::ZERO,
    };

    /// Builds a pose, wrapping `theta`. Use [`Pose2::try_new`] for untrusted input.
    #[inline]
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 {
            x,
            y,
            theta: Angle::wrapped(theta),
        }
    }

    pub fn try_new(x: f64, y: f64, theta: f64) -> Result<Self, GeomError> {
        for v in [x, y] {
            if !v.is_finite() {
                return Err(GeomError::NonFinite(v));
            }
        }
        Ok(Pose2 {
            x,
            y,
            theta: Angle::new(theta)?,
        })
    }

    #[inline]
    pub fn heading(&self) -> f64 {
        self.theta.radians()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.radians().is_finite()
    }

    /// `self ⊕ other`: rotate `other`'s translation by `self.theta`, then translate.
    #[inline]
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.heading().sin_cos();
        Pose2::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.heading() + other.heading(),
        )
    }

    #[inline]
    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.heading().sin_cos();
        Pose2::new(-c * self.x - s * self.y, s * self.x - c * self.y, -self.heading())
    }

    /// Relative pose of `other` expressed in the frame of `self`.
    #[inline]
    pub fn between(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.heading().sin_cos();
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        Pose2::new(c * dx + s * dy, -s * dx + c * dy, other.heading() - self.heading())
    }

    pub fn distance(&self, other: &Pose2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.heading())
    }

    /// Additive update on `(x, y, theta)`, heading re-wrapped.
    pub fn retract(&self, delta: &Vector3<f64>) -> Pose2 {
        Pose2::new(self.x + delta[0], self.y + delta[1], self.heading() + delta[2])
    }
}

impl fmt::Display for Pose2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4}, {:.4})", self.x, self.y, self.heading())
    }
}

pub fn compose(a: &Pose2, b: &Pose2) -> Pose2 {
    a.compose(b)
}

pub fn inverse(p: &Pose2) -> Pose2 {
    p.inverse()
}

pub fn between(a: &Pose2, b: &Pose2) -> Pose2 {
    a.between(b)
}

/// Microseconds since session start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn from_secs_f64(s: f64) -> Self {
        Timestamp((s * 1e6).round() as u64)
    }

    #[inline]
    pub fn micros(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-6
    }

    pub fn saturating_sub(self, other: Timestamp) -> u64 {
        self.0.saturating_sub(other.0)
    }
}

impl Add<u64> for Timestamp {
    type Output = Timestamp;
    fn add(self, rhs: u64) -> Timestamp {
        Timestamp(self.0 + rhs)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}

/// Symmetric 3×3 matrix over `(x, y, theta)`; used for information and covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3Sym(Matrix3<f64>);

impl Mat3Sym {
    pub fn identity() -> Self {
        Mat3Sym(Matrix3::identity())
    }

    pub fn diagonal(a: f64, b: f64, c: f64) -> Self {
        Mat3Sym(Matrix3::from_diagonal(&Vector3::new(a, b, c)))
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, GeomError> {
        let scale = m.amax().max(1.0);
        if (m - m.transpose()).amax() > 1e-12 * scale {
            return Err(GeomError::NotSymmetric);
        }
        Ok(Mat3Sym((m + m.transpose()) * 0.5))
    }

    /// Row-major entries, as written by the graph dump format.
    pub fn from_row_major(v: [f64; 9]) -> Result<Self, GeomError> {
        Self::from_matrix(Matrix3::from_row_slice(&v))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn is_positive_definite(&self) -> bool {
        self.0.cholesky().is_some()
    }

    pub fn inverse(&self) -> Result<Mat3Sym, GeomError> {
        let chol = self.0.cholesky().ok_or(GeomError::NotPositiveDefinite)?;
        let inv = chol.inverse();
        Ok(Mat3Sym((inv + inv.transpose()) * 0.5))
    }

    pub fn scaled(&self, k: f64) -> Mat3Sym {
        Mat3Sym(self.0 * k)
    }

    /// `vᵀ M v`
    pub fn quadratic_form(&self, v: &Vector3<f64>) -> f64 {
        v.dot(&(self.0 * v))
    }
}

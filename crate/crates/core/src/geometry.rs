//! Planar primitives: points, cone systems around an apex, bisector
//! projections and the theta-graph spanning ratio.
//!
//! Cones are numbered counterclockwise from the positive x-axis. Cone `i`
//! covers the half-open polar interval `[i·θ, (i+1)·θ)`, so every direction
//! belongs to exactly one cone.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quotients `angle / θ` this close to an integer are treated as lying on
/// that boundary, which then belongs to the upper cone.
const BOUNDARY_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Like [`Point::new`] but rejects NaN and infinite coordinates.
    pub fn checked(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Point { x, y })
        } else {
            Err(Error::NonFinite(x, y))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Point at fraction `t` of the way from `self` to `other`.
    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn unit(angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c, s)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// `k` equal cones of angle `θ = 2π/k` around an apex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSystem {
    k: usize,
    theta: f64,
}

impl ConeSystem {
    /// Any positive `k` is accepted here; constructions that rely on the
    /// spanning ratio additionally need `k >= 7`.
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroCones);
        }
        Ok(ConeSystem {
            k,
            theta: TAU / k as f64,
        })
    }

    /// A cone system suitable for theta graphs (`k >= 7`).
    pub fn for_spanner(k: usize) -> Result<Self> {
        if k <= 6 {
            return Err(Error::ConeCountTooSmall(k));
        }
        Self::new(k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Unit vector along the bisector of cone `i`.
    pub fn bisector(&self, i: usize) -> Point {
        Point::unit((i as f64 + 0.5) * self.theta)
    }

    /// Index of the cone around `apex` that contains `q`.
    pub fn cone_of(&self, apex: Point, q: Point) -> Result<usize> {
        let d = q - apex;
        if d.x == 0.0 && d.y == 0.0 {
            return Err(Error::DegenerateDirection);
        }
        let mut angle = d.y.atan2(d.x);
        if angle < 0.0 {
            angle += TAU;
        }
        let quotient = angle / self.theta;
        let nearest = quotient.round();
        let idx = if (quotient - nearest).abs() < BOUNDARY_SNAP {
            nearest
        } else {
            quotient.floor()
        };
        Ok(idx as usize % self.k)
    }

    /// Length of `q - apex` projected onto the bisector of cone `i`.
    /// Fails with [`Error::WrongCone`] unless `q` lies in cone `i`.
    pub fn bisector_projection(&self, apex: Point, q: Point, i: usize) -> Result<f64> {
        let actual = self.cone_of(apex, q)?;
        if actual != i {
            return Err(Error::WrongCone {
                expected: i,
                actual,
            });
        }
        Ok((q - apex).dot(self.bisector(i)))
    }

    /// `t_θ = 1 / (1 - 2 sin(θ/2))`.
    pub fn spanning_ratio(&self) -> Result<f64> {
        spanning_ratio(self.k)
    }
}

pub fn spanning_ratio(k: usize) -> Result<f64> {
    if k <= 6 {
        return Err(Error::ConeCountTooSmall(k));
    }
    Ok(1.0 / (1.0 - 2.0 * (PI / k as f64).sin()))
}

//! Axis-aligned interval vector `[center ± radius]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::zonogeom::{Interval, Zonotope};

/// A box in `ℝⁿ`, stored as center and per-dimension non-negative radius.
///
/// Every noise and error bound in the filter pipeline (`W`, `V`, `R^f`,
/// `R^g`, `R^h`, `R^d`, `R^o`, the compact state box) is a `BoxSet`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet<T> {
    center: DVector<T>,
    radius: DVector<T>,
}

impl<T: Scalar> BoxSet<T> {
    pub fn new(center: DVector<T>, radius: DVector<T>) -> Result<Self> {
        if center.len() != radius.len() {
            return Err(Error::dims("box center/radius", center.len(), radius.len()));
        }
        if radius.iter().any(|r| *r < T::zero()) {
            return Err(Error::InvalidParameter(
                "box radius must be non-negative in every dimension".into(),
            ));
        }
        Ok(Self { center, radius })
    }

    /// Zero-centered box with the given radius.
    pub fn zero_centered(radius: DVector<T>) -> Result<Self> {
        let n = radius.len();
        Self::new(DVector::zeros(n), radius)
    }

    /// Degenerate box holding a single point.
    pub fn point(center: DVector<T>) -> Self {
        let n = center.len();
        Self {
            center,
            radius: DVector::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    pub fn radius(&self) -> &DVector<T> {
        &self.radius
    }

    pub fn interval(&self, j: usize) -> Interval<T> {
        Interval::from_center_radius(self.center[j], self.radius[j])
            .expect("box radius is non-negative by construction")
    }

    pub fn contains(&self, p: &DVector<T>) -> bool {
        debug_assert_eq!(p.len(), self.dim());
        (0..self.dim()).all(|j| (p[j] - self.center[j]).abs() <= self.radius[j])
    }

    /// Containment with a symmetric slack on every face.
    pub fn contains_with_tol(&self, p: &DVector<T>, tol: T) -> bool {
        (0..self.dim()).all(|j| (p[j] - self.center[j]).abs() <= self.radius[j] + tol)
    }

    /// `{center, diag(radius)}` as a zonotope.
    pub fn to_zonotope(&self) -> Zonotope<T> {
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for j in 0..n {
            g[(j, j)] = self.radius[j];
        }
        Zonotope::new(self.center.clone(), g).expect("square generator matrix matches center")
    }

    /// Minkowski sum of two boxes: centers add, radii add.
    pub fn minkowski_sum(&self, other: &BoxSet<T>) -> Result<BoxSet<T>> {
        if self.dim() != other.dim() {
            return Err(Error::dims("box Minkowski sum", self.dim(), other.dim()));
        }
        BoxSet::new(&self.center + &other.center, &self.radius + &other.radius)
    }

    /// Grows every radius by the same non-negative amount.
    pub fn inflate(&self, amount: T) -> Result<BoxSet<T>> {
        BoxSet::new(self.center.clone(), self.radius.add_scalar(amount))
    }
}

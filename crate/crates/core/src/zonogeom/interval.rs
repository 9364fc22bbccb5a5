//! Closed real interval `[lo, hi]`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "interval requires lo <= hi, got [{:?}, {:?}]",
                lo, hi
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Degenerate single-point interval.
    pub fn point(x: T) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn from_center_radius(center: T, radius: T) -> Result<Self> {
        if radius < T::zero() {
            return Err(Error::InvalidParameter(
                "interval radius must be non-negative".into(),
            ));
        }
        Ok(Self {
            lo: center - radius,
            hi: center + radius,
        })
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn center(&self) -> T {
        (self.lo + self.hi) / crate::scalar::real(2.0)
    }

    pub fn radius(&self) -> T {
        (self.hi - self.lo) / crate::scalar::real(2.0)
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }
}

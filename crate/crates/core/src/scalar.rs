//! Scalar abstraction for the core math.
//!
//! Everything geometric and probabilistic in this crate is written against
//! [`Scalar`] so that the same code runs in `f32` or `f64`. `f64` is the
//! default used by the filters and the harness.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Field the set arithmetic, GP regression, and filters are generic over.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T> Scalar for T where T: RealField + Copy + FromPrimitive + ToPrimitive {}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics if the value is not representable, which cannot happen for the
/// finite constants used in this crate with `f32`/`f64`.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must convert into the scalar type")
}

/// Converts the working scalar into `f64` (used at the LP boundary and for
/// reporting).
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().expect("scalar must convert into f64")
}

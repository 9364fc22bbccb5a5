//! Gaussian-process regression over the single-output surrogate
//! formulation: shared squared-exponential-ARD kernel, per-dimension
//! posterior mean/variance, analytic mean Jacobians, and the
//! confidence-interval scaling β.

mod hyper;
mod kernel;
mod lipschitz;
mod model;

pub use hyper::{optimize_hyperparameters, HyperSearchOptions};
pub use kernel::Kernel;
pub use lipschitz::{estimate_lipschitz, LipschitzConstants};
pub use model::GpModel;

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

/// Confidence-interval scaling `β = B + √(2(γ + ln(1/δ)))`.
pub fn beta_scaling<T: Scalar>(rkhs_bound: T, info_capacity: T, delta: T) -> Result<T> {
    if delta <= T::zero() || delta >= T::one() {
        return Err(Error::InvalidParameter(
            "confidence budget delta must lie in (0, 1)".into(),
        ));
    }
    if rkhs_bound < T::zero() || info_capacity < T::zero() {
        return Err(Error::InvalidParameter(
            "RKHS bound and information capacity must be non-negative".into(),
        ));
    }
    let two = real::<T>(2.0);
    Ok(rkhs_bound + (two * (info_capacity + (T::one() / delta).ln())).sqrt())
}

//! Sampled Lipschitz-constant estimation over a box domain.
//!
//! The consistency bounds need a Lipschitz constant for the posterior-mean
//! gradient and a Hölder-1/2 constant for the posterior standard deviation.
//! Neither is observable in closed form, so both are estimated by seeded
//! maximization over the domain and inflated by a safety factor.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gpcore::GpModel;
use crate::scalar::{real, Scalar};
use crate::zonogeom::BoxSet;

/// Safety factor applied to every sampled maximum.
pub const LIPSCHITZ_SAFETY: f64 = 1.5;

/// Finite-difference step for Hessian columns.
const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzConstants<T> {
    /// Lipschitz constant of the posterior-mean gradient (max Hessian
    /// spectral norm over samples, inflated).
    pub grad_mean: T,
    /// Hölder-1/2 constant of the posterior standard deviation.
    pub std_dev: T,
    /// Lipschitz constant of the posterior mean itself.
    pub function: T,
}

impl<T: Scalar> LipschitzConstants<T> {
    pub fn zero() -> Self {
        Self {
            grad_mean: T::zero(),
            std_dev: T::zero(),
            function: T::zero(),
        }
    }
}

/// Estimates the constants over `domain` from `n_samples` seeded draws.
/// Deterministic for a fixed seed.
pub fn estimate_lipschitz<T: Scalar>(
    model: &GpModel<T>,
    domain: &BoxSet<T>,
    n_samples: usize,
    seed: u64,
) -> Result<LipschitzConstants<T>> {
    if domain.dim() != model.n_in() {
        return Err(Error::dims("Lipschitz domain", model.n_in(), domain.dim()));
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameter(
            "Lipschitz estimation needs at least two samples".into(),
        ));
    }
    if model.n_data() == 0 {
        // zero prior mean; σ is constant
        return Ok(LipschitzConstants::zero());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = model.n_in();
    let sample = |rng: &mut ChaCha8Rng| -> DVector<T> {
        DVector::from_fn(n_in, |i, _| {
            let u: f64 = rng.random_range(-1.0..=1.0);
            domain.center()[i] + domain.radius()[i] * real::<T>(u)
        })
    };

    let h = real::<T>(HESSIAN_STEP);
    let mut max_hessian = T::zero();
    let mut max_grad = T::zero();
    let mut max_std_ratio = T::zero();
    let mut prev: Option<(DVector<T>, T)> = None;

    for _ in 0..n_samples {
        let z = sample(&mut rng);
        let jac = model.mean_jacobian(&z)?;
        max_grad = max_grad.max(spectral_norm(&jac));

        // Hessian of each output via central differences of the Jacobian.
        let mut hess_cols: Vec<DMatrix<T>> = Vec::with_capacity(n_in);
        for i in 0..n_in {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            let jp = model.mean_jacobian(&zp)?;
            let jm = model.mean_jacobian(&zm)?;
            hess_cols.push((jp - jm) / (h + h));
        }
        for j in 0..model.n_out() {
            let mut hess = DMatrix::zeros(n_in, n_in);
            for i in 0..n_in {
                for l in 0..n_in {
                    hess[(l, i)] = hess_cols[i][(j, l)];
                }
            }
            max_hessian = max_hessian.max(spectral_norm(&hess));
        }

        let (_, std) = model.posterior(&z)?;
        if let Some((pz, pstd)) = &prev {
            let dist = (&z - pz).norm();
            if dist > real::<T>(1e-12) {
                let ratio = (std[0] - *pstd).abs() / dist.sqrt();
                max_std_ratio = max_std_ratio.max(ratio);
            }
        }
        prev = Some((z, std[0]));
    }

    let safety = real::<T>(LIPSCHITZ_SAFETY);
    Ok(LipschitzConstants {
        grad_mean: max_hessian * safety,
        std_dev: max_std_ratio * safety,
        function: max_grad * safety,
    })
}

fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(T::zero(), |acc, s| acc.max(*s))
}

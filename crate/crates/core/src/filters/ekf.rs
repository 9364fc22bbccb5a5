//! GP-EKF baseline: an extended Kalman filter whose process and
//! measurement covariances are inflated by the GP posterior variances.
//! Reconstructed from the reduction argument relating it to the zonotopic
//! filter; uses the Joseph-form covariance update throughout.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};
use crate::uncertainty::stack;

use super::{Estimator, EstimateRecord, SetDescriptor, SystemSpec};

/// Jitter added to a singular innovation covariance.
const INNOVATION_JITTER: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EkfState<T> {
    pub mean: DVector<T>,
    pub covariance: DMatrix<T>,
    pub last_gain: Option<DMatrix<T>>,
}

impl<T: Scalar> EkfState<T> {
    pub fn init(mean: DVector<T>, covariance: DMatrix<T>) -> Result<Self> {
        if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
            return Err(Error::dims("covariance", mean.len(), covariance.nrows()));
        }
        Ok(Self {
            mean,
            covariance,
            last_gain: None,
        })
    }
}

/// One predict/update cycle.
///
/// Predict: `μ̄ = f(μ, u) + μ^g(μ, u)`, `Σ̄ = AΣAᵀ + diag(σ^g)² + λ_w²I`
/// with `A` the Jacobian of `f + μ^g`. Update: gain against
/// `R = diag(σ^h)² + λ_v²I`, mean moved by the innovation, covariance via
/// the Joseph form (symmetric and PSD by construction).
pub fn gpekf_step<T: Scalar>(
    state: &EkfState<T>,
    sys: &SystemSpec<T>,
    u_prev: &DVector<T>,
    u_now: &DVector<T>,
    y_now: &DVector<T>,
) -> Result<EkfState<T>> {
    let n_x = sys.n_x();

    // predict
    let z_prev = stack(&state.mean, u_prev);
    let jf = sys.dynamics_jacobian(&state.mean, u_prev);
    let jg = sys.gp_dynamics.mean_jacobian(&z_prev)?;
    let a = jf + jg.columns(0, n_x);
    let (mu_g, sigma_g) = sys.gp_dynamics.posterior(&z_prev)?;
    let mean_pred = sys.known_dynamics.eval(&state.mean, u_prev) + mu_g;
    let lam_w2 = sys.noise_w.std * sys.noise_w.std;
    let mut cov_pred = &a * &state.covariance * a.transpose();
    for i in 0..n_x {
        cov_pred[(i, i)] += sigma_g[i] * sigma_g[i] + lam_w2;
    }

    // update
    let z_now = stack(&mean_pred, u_now);
    let jh = sys.gp_observation.mean_jacobian(&z_now)?;
    let c = jh.columns(0, n_x).into_owned();
    let (mu_h, sigma_h) = sys.gp_observation.posterior(&z_now)?;
    let n_y = sys.n_y();
    let lam_v2 = sys.noise_v.std * sys.noise_v.std;
    let mut r = DMatrix::zeros(n_y, n_y);
    for i in 0..n_y {
        r[(i, i)] = sigma_h[i] * sigma_h[i] + lam_v2;
    }

    let mut s = &c * &cov_pred * c.transpose() + &r;
    let chol = match Cholesky::new(s.clone()) {
        Some(ch) => ch,
        None => {
            for i in 0..n_y {
                s[(i, i)] += real::<T>(INNOVATION_JITTER);
            }
            Cholesky::new(s).ok_or(Error::NotPositiveDefinite {
                jitter: INNOVATION_JITTER,
            })?
        }
    };
    // K = Σ̄Cᵀ S⁻¹  via  S Kᵀ = C Σ̄
    let gain = chol.solve(&(&c * &cov_pred)).transpose();

    let innovation = y_now - mu_h;
    let mean = &mean_pred + &gain * innovation;
    let ikc = DMatrix::identity(n_x, n_x) - &gain * &c;
    let mut cov = &ikc * &cov_pred * ikc.transpose() + &gain * &r * gain.transpose();
    // re-symmetrize against round-off
    let cov_t = cov.transpose();
    cov = (cov + cov_t) / real::<T>(2.0);

    Ok(EkfState {
        mean,
        covariance: cov,
        last_gain: Some(gain),
    })
}

/// [`Estimator`] wrapper owning the filter state.
pub struct EkfEstimator<T: Scalar> {
    sys: Arc<SystemSpec<T>>,
    state: EkfState<T>,
}

impl<T: Scalar> EkfEstimator<T> {
    pub fn new(sys: Arc<SystemSpec<T>>, state: EkfState<T>) -> Self {
        Self { sys, state }
    }

    pub fn state(&self) -> &EkfState<T> {
        &self.state
    }
}

impl<T: Scalar> Estimator<T> for EkfEstimator<T> {
    fn name(&self) -> &'static str {
        "gp-ekf"
    }

    fn step(
        &mut self,
        u_prev: &DVector<T>,
        u_now: &DVector<T>,
        y_now: &DVector<T>,
    ) -> Result<EstimateRecord<T>> {
        let start = Instant::now();
        self.state = gpekf_step(&self.state, &self.sys, u_prev, u_now, y_now)?;
        Ok(EstimateRecord {
            point_estimate: self.state.mean.clone(),
            set: SetDescriptor::Gaussian {
                covariance: self.state.covariance.clone(),
            },
            seconds: start.elapsed().as_secs_f64(),
        })
    }
}

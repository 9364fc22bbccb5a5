//! Set-valued and stochastic state estimators over partially learned
//! dynamics: the GP-ZKF zonotopic filter (predict → measure → correct)
//! and the GP-EKF baseline, behind one estimator interface.
//!
//! A filter instance is a single-threaded state machine; instances are
//! independent and may run in parallel. The shared inputs ([`SystemSpec`],
//! the GP models) are immutable.

mod ekf;
mod zkf;

pub use ekf::{gpekf_step, EkfEstimator, EkfState};
pub use zkf::{
    zkf_correct, zkf_measure, zkf_predict, zkf_step, ZkfEstimator, ZkfState,
};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gpcore::GpModel;
use crate::scalar::{real, Scalar};
use crate::uncertainty::{HessianBound, NoiseSpec};
use crate::zonogeom::{BoxSet, Zonotope};

/// Finite-difference step for the Jacobian fallback of the known dynamics.
const FD_JACOBIAN_STEP: f64 = 1e-6;

/// Known component of the dynamics, `x′ = f(x, u) + g(x, u) + w`, with the
/// curvature information the linearization-error bounds need.
///
/// `jacobian_x` may return `None`; a central finite difference of `eval`
/// is used instead.
pub trait KnownDynamics<T: Scalar>: HessianBound<T> + Send + Sync {
    fn eval(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T>;

    fn jacobian_x(&self, x: &DVector<T>, u: &DVector<T>) -> Option<DMatrix<T>> {
        let _ = (x, u);
        None
    }
}

/// Immutable description of the estimation problem: known dynamics `f`,
/// learned residual dynamics `g`, learned observation `h`, the noise
/// specifications, and the compact control/state domains.
#[derive(Clone)]
pub struct SystemSpec<T: Scalar> {
    pub known_dynamics: Arc<dyn KnownDynamics<T>>,
    pub gp_dynamics: GpModel<T>,
    pub gp_observation: GpModel<T>,
    pub noise_w: NoiseSpec<T>,
    pub noise_v: NoiseSpec<T>,
    pub control_domain: BoxSet<T>,
    pub state_domain: BoxSet<T>,
}

impl<T: Scalar> SystemSpec<T> {
    pub fn new(
        known_dynamics: Arc<dyn KnownDynamics<T>>,
        gp_dynamics: GpModel<T>,
        gp_observation: GpModel<T>,
        noise_w: NoiseSpec<T>,
        noise_v: NoiseSpec<T>,
        control_domain: BoxSet<T>,
        state_domain: BoxSet<T>,
    ) -> Result<Self> {
        let n_x = state_domain.dim();
        let n_u = control_domain.dim();
        if gp_dynamics.n_in() != n_x + n_u {
            return Err(Error::dims("dynamics GP input", n_x + n_u, gp_dynamics.n_in()));
        }
        if gp_dynamics.n_out() != n_x {
            return Err(Error::dims("dynamics GP output", n_x, gp_dynamics.n_out()));
        }
        if gp_observation.n_in() != n_x + n_u {
            return Err(Error::dims(
                "observation GP input",
                n_x + n_u,
                gp_observation.n_in(),
            ));
        }
        if noise_w.dim != n_x {
            return Err(Error::dims("process noise", n_x, noise_w.dim));
        }
        if noise_v.dim != gp_observation.n_out() {
            return Err(Error::dims(
                "measurement noise",
                gp_observation.n_out(),
                noise_v.dim,
            ));
        }
        Ok(Self {
            known_dynamics,
            gp_dynamics,
            gp_observation,
            noise_w,
            noise_v,
            control_domain,
            state_domain,
        })
    }

    pub fn n_x(&self) -> usize {
        self.state_domain.dim()
    }

    pub fn n_u(&self) -> usize {
        self.control_domain.dim()
    }

    pub fn n_y(&self) -> usize {
        self.gp_observation.n_out()
    }

    /// Jacobian of the known dynamics in `x`, analytic when available,
    /// otherwise by central finite differences.
    pub fn dynamics_jacobian(&self, x: &DVector<T>, u: &DVector<T>) -> DMatrix<T> {
        if let Some(j) = self.known_dynamics.jacobian_x(x, u) {
            return j;
        }
        let h = real::<T>(FD_JACOBIAN_STEP);
        let n = x.len();
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let col = (self.known_dynamics.eval(&xp, u) - self.known_dynamics.eval(&xm, u))
                / (h + h);
            jac.set_column(i, &col);
        }
        jac
    }
}

/// Tuning and mode switches for the zonotopic filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZkfOptions {
    /// Generator cap applied after prediction and correction; `None`
    /// disables order reduction.
    pub order_cap: Option<usize>,
    /// Clip the corrected set to the state domain and enforce the
    /// domain preconditions.
    pub clip_to_state_domain: bool,
    /// Include the linearization-error boxes (known-function remainder and
    /// the Lipschitz terms of the learned functions).
    pub include_linearization_errors: bool,
    /// Include the high-probability noise boxes `W` and `V`.
    pub include_noise_boxes: bool,
}

impl ZkfOptions {
    /// Full-guarantee configuration with the default generator cap
    /// `10·n_x`.
    pub fn standard(n_x: usize) -> Self {
        Self {
            order_cap: Some(10 * n_x),
            clip_to_state_domain: true,
            include_linearization_errors: true,
            include_noise_boxes: true,
        }
    }
}

/// Configures the zonotopic filter so that it coincides with the GP-EKF:
/// confidence scalings set to one, noise boxes and linearization errors
/// omitted, state-domain clipping and order reduction disabled.
///
/// With matched initialization (`μ_0 = center`, `Σ_0 = GGᵀ`) the two
/// filters then produce identical centers, shape matrices, and gains.
pub fn theorem2_mode<T: Scalar>(sys: &SystemSpec<T>) -> Result<(SystemSpec<T>, ZkfOptions)> {
    let mut relaxed = sys.clone();
    relaxed.gp_dynamics = relaxed.gp_dynamics.with_beta(T::one())?;
    relaxed.gp_observation = relaxed.gp_observation.with_beta(T::one())?;
    let opts = ZkfOptions {
        order_cap: None,
        clip_to_state_domain: false,
        include_linearization_errors: false,
        include_noise_boxes: false,
    };
    Ok((relaxed, opts))
}

/// Set estimate produced by one filter step.
#[derive(Debug, Clone)]
pub enum SetDescriptor<T> {
    /// Zonotopic set estimate (GP-ZKF).
    Zonotope(Zonotope<T>),
    /// Gaussian belief described by its covariance (GP-EKF).
    Gaussian { covariance: DMatrix<T> },
}

/// Per-step estimator output consumed by the experiment harness.
#[derive(Debug, Clone)]
pub struct EstimateRecord<T> {
    pub point_estimate: DVector<T>,
    pub set: SetDescriptor<T>,
    /// Wall-clock duration of the step; excluded from determinism checks.
    pub seconds: f64,
}

/// Common stepping interface over both filters.
pub trait Estimator<T: Scalar>: Send {
    fn name(&self) -> &'static str;

    fn step(
        &mut self,
        u_prev: &DVector<T>,
        u_now: &DVector<T>,
        y_now: &DVector<T>,
    ) -> Result<EstimateRecord<T>>;
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::gpcore::Kernel;
    use nalgebra::dvector;

    /// `f(x, u) = a·x`, element-wise, with zero Hessian.
    pub struct LinearDynamics {
        pub a: DMatrix<f64>,
    }

    impl HessianBound<f64> for LinearDynamics {
        fn hessian_bound(&self, region: &BoxSet<f64>, _u: &DVector<f64>) -> DVector<f64> {
            DVector::zeros(region.dim())
        }
    }

    impl KnownDynamics<f64> for LinearDynamics {
        fn eval(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
            &self.a * x
        }

        fn jacobian_x(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> Option<DMatrix<f64>> {
            Some(self.a.clone())
        }
    }

    /// 1-D system with scalar known dynamics `a·x`, a residual GP prior,
    /// and an observation GP fit to `y = x` on a dense grid.
    pub fn linear_system_1d(a: f64, lambda_w: f64, lambda_v: f64) -> SystemSpec<f64> {
        let n = 41;
        let mut inputs = DMatrix::zeros(n, 2);
        let mut outputs = DMatrix::zeros(n, 1);
        for i in 0..n {
            let x = -2.0 + 4.0 * i as f64 / (n - 1) as f64;
            inputs[(i, 0)] = x;
            outputs[(i, 0)] = x;
        }
        let obs_kernel = Kernel::new(25.0, dvector![10.0, 10.0]).unwrap();
        let gp_observation =
            GpModel::fit(inputs, outputs, obs_kernel, 1e-6, None, 0.05).unwrap();
        let dyn_kernel = Kernel::isotropic(1e-20, 1.0, 2).unwrap();
        let gp_dynamics = GpModel::prior(dyn_kernel, 1, 1e-10, 0.05).unwrap();
        SystemSpec::new(
            Arc::new(LinearDynamics {
                a: DMatrix::from_element(1, 1, a),
            }),
            gp_dynamics,
            gp_observation,
            NoiseSpec::new(lambda_w, 1, 15, 0.05).unwrap(),
            NoiseSpec::new(lambda_v, 1, 15, 0.05).unwrap(),
            BoxSet::zero_centered(dvector![1.0]).unwrap(),
            BoxSet::zero_centered(dvector![100.0]).unwrap(),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn system_spec_rejects_inconsistent_dims() {
        let sys = linear_system_1d(0.9, 0.1, 0.1);
        let bad = SystemSpec::new(
            sys.known_dynamics.clone(),
            sys.gp_dynamics.clone(),
            sys.gp_observation.clone(),
            NoiseSpec::new(0.1, 3, 15, 0.05).unwrap(),
            sys.noise_v,
            sys.control_domain.clone(),
            sys.state_domain.clone(),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn finite_difference_jacobian_matches_analytic() {
        struct NoJac;
        impl HessianBound<f64> for NoJac {
            fn hessian_bound(&self, region: &BoxSet<f64>, _u: &DVector<f64>) -> DVector<f64> {
                DVector::zeros(region.dim())
            }
        }
        impl KnownDynamics<f64> for NoJac {
            fn eval(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
                dvector![x[0] * x[0], x[0] * x[1]]
            }
        }
        let mut sys = linear_system_1d(1.0, 0.1, 0.1);
        sys.known_dynamics = Arc::new(NoJac);
        let x = dvector![0.7, -0.3];
        let j = sys.dynamics_jacobian(&x, &dvector![0.0]);
        assert!((j[(0, 0)] - 1.4).abs() < 1e-6);
        assert!((j[(0, 1)] - 0.0).abs() < 1e-6);
        assert!((j[(1, 0)] - (-0.3)).abs() < 1e-6);
        assert!((j[(1, 1)] - 0.7).abs() < 1e-6);
    }

    #[test]
    fn theorem2_mode_sets_unit_scaling_and_disables_inflation() {
        let sys = linear_system_1d(0.9, 0.1, 0.1);
        let (relaxed, opts) = theorem2_mode(&sys).unwrap();
        assert_eq!(relaxed.gp_dynamics.beta(), 1.0);
        assert_eq!(relaxed.gp_observation.beta(), 1.0);
        assert_eq!(opts.order_cap, None);
        assert!(!opts.clip_to_state_domain);
        assert!(!opts.include_linearization_errors);
        assert!(!opts.include_noise_boxes);
    }
}

//! The zonotopic filter: predict through the partially learned dynamics,
//! turn the measurement into a strip, and correct by strip intersection.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gpcore::LipschitzConstants;
use crate::scalar::{real, Scalar};
use crate::uncertainty::{
    dynamics_error_box, known_fn_error_box, learned_fn_error_box, noise_box,
    observation_error_box, stack,
};
use crate::zonogeom::{BoxSet, Strip, Zonotope};

use super::{
    Estimator, EstimateRecord, SetDescriptor, SystemSpec, ZkfOptions,
};

/// State of the zonotopic filter, including the intermediates of the last
/// step for diagnostics and soundness checks.
#[derive(Debug, Clone)]
pub struct ZkfState<T> {
    pub estimate: Zonotope<T>,
    pub time: usize,
    pub last_prediction: Option<Zonotope<T>>,
    pub last_strip: Option<Strip<T>>,
    pub last_gain: Option<DMatrix<T>>,
    pub lips_g: LipschitzConstants<T>,
    pub lips_h: LipschitzConstants<T>,
}

impl<T: Scalar> ZkfState<T> {
    pub fn init(
        initial: Zonotope<T>,
        lips_g: LipschitzConstants<T>,
        lips_h: LipschitzConstants<T>,
    ) -> Self {
        Self {
            estimate: initial,
            time: 0,
            last_prediction: None,
            last_strip: None,
            last_gain: None,
            lips_g,
            lips_h,
        }
    }
}

/// Propagates the estimate through the linearized dynamics and inflates by
/// the dynamics error box `R^f ⊕ R^g ⊕ W`.
///
/// Errors if `u` leaves the control domain, or (when domain checks are
/// enabled) if the estimate has left the state domain — the consistency
/// budget is no longer valid in either case.
pub fn zkf_predict<T: Scalar>(
    state: &ZkfState<T>,
    sys: &SystemSpec<T>,
    opts: &ZkfOptions,
    u: &DVector<T>,
) -> Result<Zonotope<T>> {
    let tol = real::<T>(1e-9);
    if !sys.control_domain.contains_with_tol(u, tol) {
        return Err(Error::ControlOutOfDomain { step: state.time });
    }
    if opts.clip_to_state_domain && !box_inside(&state.estimate.interval_hull(), &sys.state_domain, tol)
    {
        return Err(Error::StateOutsideDomain { step: state.time });
    }

    let n_x = sys.n_x();
    let xbar = state.estimate.center();
    let z = stack(xbar, u);
    let jf = sys.dynamics_jacobian(xbar, u);
    let jg = sys.gp_dynamics.mean_jacobian(&z)?;
    let a = jf + jg.columns(0, n_x);
    let (mu_g, _) = sys.gp_dynamics.posterior(&z)?;
    let b = sys.known_dynamics.eval(xbar, u) + mu_g - &a * xbar;
    let mapped = state.estimate.affine_map(&a, &b)?;

    let rf = if opts.include_linearization_errors {
        known_fn_error_box(sys.known_dynamics.as_ref(), &state.estimate, u)?
    } else {
        BoxSet::zero_centered(DVector::zeros(n_x))?
    };
    let lips = if opts.include_linearization_errors {
        state.lips_g
    } else {
        LipschitzConstants::zero()
    };
    let (rg, _) = learned_fn_error_box(&sys.gp_dynamics, &lips, &state.estimate, u)?;
    let w = if opts.include_noise_boxes {
        noise_box(&sys.noise_w)?
    } else {
        BoxSet::zero_centered(DVector::zeros(n_x))?
    };
    let rd = dynamics_error_box(&rf, &rg, &w)?;

    let mut out = add_box(&mapped, &rd)?;
    if let Some(cap) = opts.order_cap {
        out = out.reduce_order(cap)?;
    }
    Ok(out)
}

/// Rewrites the measurement `y` as a strip constraint on the state by
/// linearizing the learned observation at the prediction center.
pub fn zkf_measure<T: Scalar>(
    xbar: &Zonotope<T>,
    sys: &SystemSpec<T>,
    opts: &ZkfOptions,
    lips_h: &LipschitzConstants<T>,
    u: &DVector<T>,
    y: &DVector<T>,
) -> Result<Strip<T>> {
    let tol = real::<T>(1e-9);
    if !sys.control_domain.contains_with_tol(u, tol) {
        return Err(Error::ControlOutOfDomain { step: 0 });
    }
    if y.len() != sys.n_y() {
        return Err(Error::dims("measurement", sys.n_y(), y.len()));
    }

    let n_x = sys.n_x();
    let center = xbar.center();
    let z = stack(center, u);
    let jh_full = sys.gp_observation.mean_jacobian(&z)?;
    let jh = jh_full.columns(0, n_x).into_owned();
    let (mu_h, _) = sys.gp_observation.posterior(&z)?;

    let lips = if opts.include_linearization_errors {
        *lips_h
    } else {
        LipschitzConstants::zero()
    };
    let (rh, _) = learned_fn_error_box(&sys.gp_observation, &lips, xbar, u)?;
    let v = if opts.include_noise_boxes {
        noise_box(&sys.noise_v)?
    } else {
        BoxSet::zero_centered(DVector::zeros(sys.n_y()))?
    };
    let bound = observation_error_box(&rh, &v)?;

    let offset = y - mu_h + &jh * center;
    Strip::new(jh, offset, bound)
}

/// Intersects the prediction with the measurement strip and (optionally)
/// the state domain. Returns the corrected set and the measurement gain.
///
/// The corrected set is an outer approximation and is never empty, even
/// when the exact intersection is. If the optimized gain worsens the
/// generator Frobenius norm — possible only through ill-conditioning —
/// the correction falls back to the no-update gain `Λ = 0`.
pub fn zkf_correct<T: Scalar>(
    xbar: &Zonotope<T>,
    strip: &Strip<T>,
    state_domain: &BoxSet<T>,
    opts: &ZkfOptions,
) -> Result<(Zonotope<T>, DMatrix<T>)> {
    let (mut z, gain) = guarded_intersect(xbar, strip)?;
    if opts.clip_to_state_domain {
        for j in 0..state_domain.dim() {
            // an axis strip already containing the hull adds no information
            let hull = z.interval_hull();
            let iv = hull.interval(j);
            let dom = state_domain.interval(j);
            if iv.lo() >= dom.lo() && iv.hi() <= dom.hi() {
                continue;
            }
            let s = Strip::axis_aligned(
                state_domain.dim(),
                j,
                state_domain.center()[j],
                state_domain.radius()[j],
            )?;
            let (clipped, _) = guarded_intersect(&z, &s)?;
            z = clipped;
        }
    }
    if let Some(cap) = opts.order_cap {
        z = z.reduce_order(cap)?;
    }
    Ok((z, gain))
}

/// One recursive filter update: predict with `u_prev`, measure `y_now`
/// taken under `u_now`, correct, and record the intermediates.
pub fn zkf_step<T: Scalar>(
    state: &ZkfState<T>,
    sys: &SystemSpec<T>,
    opts: &ZkfOptions,
    u_prev: &DVector<T>,
    u_now: &DVector<T>,
    y_now: &DVector<T>,
) -> Result<(ZkfState<T>, f64)> {
    let start = Instant::now();
    let prediction = zkf_predict(state, sys, opts, u_prev)?;
    let strip = zkf_measure(&prediction, sys, opts, &state.lips_h, u_now, y_now)?;
    let (estimate, gain) = zkf_correct(&prediction, &strip, &sys.state_domain, opts)?;
    let next = ZkfState {
        estimate,
        time: state.time + 1,
        last_prediction: Some(prediction),
        last_strip: Some(strip),
        last_gain: Some(gain),
        lips_g: state.lips_g,
        lips_h: state.lips_h,
    };
    Ok((next, start.elapsed().as_secs_f64()))
}

/// [`Estimator`] wrapper owning the filter state.
pub struct ZkfEstimator<T: Scalar> {
    sys: Arc<SystemSpec<T>>,
    opts: ZkfOptions,
    state: ZkfState<T>,
}

impl<T: Scalar> ZkfEstimator<T> {
    pub fn new(sys: Arc<SystemSpec<T>>, opts: ZkfOptions, state: ZkfState<T>) -> Self {
        Self { sys, opts, state }
    }

    pub fn state(&self) -> &ZkfState<T> {
        &self.state
    }
}

impl<T: Scalar> Estimator<T> for ZkfEstimator<T> {
    fn name(&self) -> &'static str {
        "gp-zkf"
    }

    fn step(
        &mut self,
        u_prev: &DVector<T>,
        u_now: &DVector<T>,
        y_now: &DVector<T>,
    ) -> Result<EstimateRecord<T>> {
        let (next, seconds) = zkf_step(&self.state, &self.sys, &self.opts, u_prev, u_now, y_now)?;
        self.state = next;
        Ok(EstimateRecord {
            point_estimate: self.state.estimate.center().clone(),
            set: SetDescriptor::Zonotope(self.state.estimate.clone()),
            seconds,
        })
    }
}

fn guarded_intersect<T: Scalar>(
    z: &Zonotope<T>,
    s: &Strip<T>,
) -> Result<(Zonotope<T>, DMatrix<T>)> {
    let si = z.intersect_strip(s)?;
    let prior_norm = frobenius(z.generators());
    let post_norm = frobenius(si.zonotope.generators());
    if post_norm > prior_norm * (T::one() + real::<T>(1e-12)) + real::<T>(1e-15) {
        let zero_gain = DMatrix::zeros(z.dim(), s.rows());
        let fallback = z.apply_strip_gain(s, &zero_gain)?;
        return Ok((fallback, zero_gain));
    }
    Ok((si.zonotope, si.gain))
}

fn frobenius<T: Scalar>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
}

fn box_inside<T: Scalar>(inner: &BoxSet<T>, outer: &BoxSet<T>, tol: T) -> bool {
    (0..inner.dim()).all(|j| {
        (inner.center()[j] - outer.center()[j]).abs() + inner.radius()[j]
            <= outer.radius()[j] + tol
    })
}

fn add_box<T: Scalar>(z: &Zonotope<T>, b: &BoxSet<T>) -> Result<Zonotope<T>> {
    // Append only the non-degenerate box axes so zero-radius error terms
    // do not accumulate generator columns.
    let axes: Vec<usize> = (0..b.dim()).filter(|&j| b.radius()[j] > T::zero()).collect();
    let mut g = DMatrix::zeros(z.dim(), z.num_generators() + axes.len());
    g.columns_mut(0, z.num_generators()).copy_from(z.generators());
    for (k, &j) in axes.iter().enumerate() {
        g[(j, z.num_generators() + k)] = b.radius()[j];
    }
    Zonotope::new(z.center() + b.center(), g)
}

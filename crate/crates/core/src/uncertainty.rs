//! High-probability bound boxes consumed by the filter: Gaussian noise
//! boxes `W`/`V`, the probability-budget split, the compact state box, and
//! the linearization/epistemic error boxes `R^f`, `R^g`, `R^h`, `R^d`,
//! `R^o`.
//!
//! Pure functions over immutable inputs; freely parallelizable.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gpcore::{GpModel, LipschitzConstants};
use crate::scalar::{real, Scalar};
use crate::zonogeom::{BoxSet, Zonotope};

/// i.i.d. zero-mean Gaussian noise over a finite horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<T> {
    /// Per-dimension standard deviation λ.
    pub std: T,
    /// Noise dimension.
    pub dim: usize,
    /// Horizon T the joint bound must cover.
    pub horizon: usize,
    /// Probability budget for this noise source.
    pub delta: T,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(std: T, dim: usize, horizon: usize, delta: T) -> Result<Self> {
        if std <= T::zero() {
            return Err(Error::InvalidParameter("noise std must be positive".into()));
        }
        if dim == 0 || horizon == 0 {
            return Err(Error::InvalidParameter(
                "noise dimension and horizon must be positive".into(),
            ));
        }
        if delta <= T::zero() || delta >= T::one() {
            return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
        }
        Ok(Self {
            std,
            dim,
            horizon,
            delta,
        })
    }
}

/// Zero-centered box bounding the noise jointly over all `T` steps with
/// probability at least `1 − δ`: per-dimension radius
/// `√2·λ·√(ln(T·n/δ))`.
pub fn noise_box<T: Scalar>(spec: &NoiseSpec<T>) -> Result<BoxSet<T>> {
    let tn = real::<T>((spec.horizon * spec.dim) as f64);
    let radius = real::<T>(2.0).sqrt() * spec.std * (tn / spec.delta).ln().sqrt();
    BoxSet::zero_centered(DVector::from_element(spec.dim, radius))
}

/// Split of the total consistency budget δ across the four sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSplit<T> {
    pub delta_g: T,
    pub delta_h: T,
    pub delta_w: T,
    pub delta_v: T,
}

impl<T: Scalar> BudgetSplit<T> {
    /// Validates the product condition
    /// `(1 − δ^g − δ^w)(1 − δ^h − δ^v) ≥ 1 − δ` for an explicit split.
    pub fn with_values(
        total_delta: T,
        delta_g: T,
        delta_h: T,
        delta_w: T,
        delta_v: T,
    ) -> Result<Self> {
        let split = Self {
            delta_g,
            delta_h,
            delta_w,
            delta_v,
        };
        for d in [delta_g, delta_h, delta_w, delta_v] {
            if d <= T::zero() || d >= T::one() {
                return Err(Error::InvalidParameter(
                    "every budget component must lie in (0, 1)".into(),
                ));
            }
        }
        let lhs = (T::one() - delta_g - delta_w) * (T::one() - delta_h - delta_v);
        if lhs < T::one() - total_delta {
            return Err(Error::InvalidParameter(format!(
                "budget split violates the product condition: {:?} < 1 - {:?}",
                lhs, total_delta
            )));
        }
        Ok(split)
    }
}

/// Default symmetric split δ/4 per source; always satisfies the product
/// condition for δ ∈ (0, 1).
pub fn split_budget<T: Scalar>(total_delta: T) -> Result<BudgetSplit<T>> {
    if total_delta <= T::zero() || total_delta >= T::one() {
        return Err(Error::InvalidParameter(
            "total delta must lie in (0, 1)".into(),
        ));
    }
    let quarter = total_delta / real::<T>(4.0);
    BudgetSplit::with_values(total_delta, quarter, quarter, quarter, quarter)
}

/// Growth inputs for the compact-state-box stand-in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthParams<T> {
    /// Bound on the one-step displacement of the known dynamics.
    pub known_fn_bound: T,
    /// Confidence scaling for the learned dynamics residual.
    pub beta_g: T,
    /// Kernel sup-norm ‖k^g‖_∞ (the residual GP's signal variance).
    pub kernel_sup: T,
    /// Per-dimension radius of the process-noise box `W`.
    pub noise_radius: T,
}

/// Compact box containing the reachable states over the horizon:
/// the interval hull of the initial set inflated per dimension by
/// `T·(B^f + √n_x·√‖k^g‖_∞·β^g + r_W)`.
///
/// Deliberately crude and conservative; looseness only costs tightness in
/// the final clipping step.
pub fn compact_state_box<T: Scalar>(
    initial: &Zonotope<T>,
    horizon: usize,
    growth: &GrowthParams<T>,
) -> Result<BoxSet<T>> {
    let hull = initial.interval_hull();
    let nx = real::<T>(initial.dim() as f64);
    let per_step =
        growth.known_fn_bound + nx.sqrt() * growth.kernel_sup.sqrt() * growth.beta_g
            + growth.noise_radius;
    hull.inflate(real::<T>(horizon as f64) * per_step)
}

/// Hessian spectral-norm bounds for the known dynamics over a region,
/// one per state dimension.
pub trait HessianBound<T> {
    fn hessian_bound(&self, region: &BoxSet<T>, control: &DVector<T>) -> DVector<T>;
}

/// Lagrange-remainder box for linearizing a known twice-differentiable
/// function around the center of `region`:
/// `radius_j = ½·M_j·ε²` with `ε` the zonotope norm about its center.
pub fn known_fn_error_box<T: Scalar>(
    hessian: &dyn HessianBound<T>,
    region: &Zonotope<T>,
    control: &DVector<T>,
) -> Result<BoxSet<T>> {
    let eps = region.norm_from(region.center());
    let bounds = hessian.hessian_bound(&region.interval_hull(), control);
    if bounds.len() != region.dim() {
        return Err(Error::dims("Hessian bounds", region.dim(), bounds.len()));
    }
    let half = real::<T>(0.5);
    BoxSet::zero_centered(bounds.map(|m| half * m * eps * eps))
}

/// The three summands of the learned-function error radius, exposed for
/// diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedFnErrorParts<T> {
    /// `½·L_∇μ·ε²` — linearization error of the posterior mean.
    pub linearization: T,
    /// `β·σ_j(x̄, u)` per output dimension — epistemic uncertainty.
    pub epistemic: DVector<T>,
    /// `β·L_σ·ε^{1/2}` — standard-deviation approximation error.
    pub std_approx: T,
}

impl<T: Scalar> LearnedFnErrorParts<T> {
    pub fn radius(&self) -> DVector<T> {
        self.epistemic
            .map(|e| self.linearization + e + self.std_approx)
    }
}

/// High-probability error box for a GP-learned function over a zonotopic
/// region: per-dimension radius
/// `½·L_∇μ·ε² + β·σ_j(x̄,u) + β·L_σ·√ε` with `x̄ = center(region)`.
pub fn learned_fn_error_box<T: Scalar>(
    model: &GpModel<T>,
    lips: &LipschitzConstants<T>,
    region: &Zonotope<T>,
    control: &DVector<T>,
) -> Result<(BoxSet<T>, LearnedFnErrorParts<T>)> {
    let xbar = region.center();
    let eps = region.norm_from(xbar);
    let z = stack(xbar, control);
    let (_, std) = model.posterior(&z)?;
    let beta = model.beta();
    let parts = LearnedFnErrorParts {
        linearization: real::<T>(0.5) * lips.grad_mean * eps * eps,
        epistemic: std.map(|s| beta * s),
        std_approx: beta * lips.std_dev * eps.sqrt(),
    };
    let b = BoxSet::zero_centered(parts.radius())?;
    Ok((b, parts))
}

/// `R^d = R^f ⊕ R^g ⊕ W` (radius addition).
pub fn dynamics_error_box<T: Scalar>(
    rf: &BoxSet<T>,
    rg: &BoxSet<T>,
    w: &BoxSet<T>,
) -> Result<BoxSet<T>> {
    rf.minkowski_sum(rg)?.minkowski_sum(w)
}

/// `R^o = R^h ⊕ V`.
pub fn observation_error_box<T: Scalar>(rh: &BoxSet<T>, v: &BoxSet<T>) -> Result<BoxSet<T>> {
    rh.minkowski_sum(v)
}

/// Concatenates a state and a control into one GP input.
pub fn stack<T: Scalar>(x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
    let mut z = DVector::zeros(x.len() + u.len());
    z.rows_mut(0, x.len()).copy_from(x);
    z.rows_mut(x.len(), u.len()).copy_from(u);
    z
}

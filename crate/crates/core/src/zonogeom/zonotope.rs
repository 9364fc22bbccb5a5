//! Zonotope `{c + G ξ : ‖ξ‖_∞ ≤ 1}` and its operations.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{real, to_f64, Scalar};
use crate::zonogeom::lp::{min_inf_norm, LpOutcome};
use crate::zonogeom::{BoxSet, Strip, CONTAINMENT_TOL, GAIN_JITTER};

/// Centrally symmetric convex polytope given by a center and a generator
/// matrix. A zonotope with zero generator columns is a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope<T> {
    center: DVector<T>,
    generators: DMatrix<T>,
}

/// Result of outer-approximating a zonotope/strip intersection.
#[derive(Debug, Clone)]
pub struct StripIntersection<T> {
    pub zonotope: Zonotope<T>,
    /// Gain `Λ` minimizing the Frobenius norm of the posterior generators.
    pub gain: DMatrix<T>,
    /// Whether the normal matrix needed jitter to become invertible.
    pub jittered: bool,
}

impl<T: Scalar> Zonotope<T> {
    pub fn new(center: DVector<T>, generators: DMatrix<T>) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(Error::dims(
                "zonotope generators",
                center.len(),
                generators.nrows(),
            ));
        }
        Ok(Self { center, generators })
    }

    /// Degenerate point zonotope (no generators).
    pub fn point(center: DVector<T>) -> Self {
        let n = center.len();
        Self {
            center,
            generators: DMatrix::zeros(n, 0),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<T> {
        &self.generators
    }

    /// `b ⊕ A·Z = {A G, b + A c}`. Exact.
    pub fn affine_map(&self, a: &DMatrix<T>, b: &DVector<T>) -> Result<Zonotope<T>> {
        if a.ncols() != self.dim() {
            return Err(Error::dims("affine map columns", self.dim(), a.ncols()));
        }
        if b.len() != a.nrows() {
            return Err(Error::dims("affine map offset", a.nrows(), b.len()));
        }
        Zonotope::new(b + a * &self.center, a * &self.generators)
    }

    /// `Z₁ ⊕ Z₂ = {[G₁ G₂], c₁ + c₂}`. Exact.
    pub fn minkowski_sum(&self, other: &Zonotope<T>) -> Result<Zonotope<T>> {
        if self.dim() != other.dim() {
            return Err(Error::dims("Minkowski sum", self.dim(), other.dim()));
        }
        let k1 = self.num_generators();
        let k2 = other.num_generators();
        let mut g = DMatrix::zeros(self.dim(), k1 + k2);
        g.view_mut((0, 0), (self.dim(), k1)).copy_from(&self.generators);
        g.view_mut((0, k1), (self.dim(), k2)).copy_from(&other.generators);
        Zonotope::new(&self.center + &other.center, g)
    }

    /// Tightest axis-aligned box: radius is the row-wise absolute sum of the
    /// generator matrix.
    pub fn interval_hull(&self) -> BoxSet<T> {
        let n = self.dim();
        let mut radius = DVector::zeros(n);
        for j in 0..n {
            let mut acc = T::zero();
            for k in 0..self.num_generators() {
                acc += self.generators[(j, k)].abs();
            }
            radius[j] = acc;
        }
        BoxSet::new(self.center.clone(), radius).expect("absolute sums are non-negative")
    }

    /// Upper bound on `max_{x ∈ Z} ‖x − xbar‖₂`: the center offset plus the
    /// sum of generator column norms. Conservative, never below the true
    /// maximum.
    pub fn norm_from(&self, xbar: &DVector<T>) -> T {
        debug_assert_eq!(xbar.len(), self.dim());
        let mut acc = (&self.center - xbar).norm();
        for k in 0..self.num_generators() {
            acc += self.generators.column(k).norm();
        }
        acc
    }

    /// Exact point containment, decided by a small linear program:
    /// `p ∈ Z` iff `min ‖ξ‖_∞ s.t. G ξ = p − c` is at most `1` (with
    /// [`CONTAINMENT_TOL`] slack). An inconsistent equality system means the
    /// point is outside.
    pub fn contains_point(&self, p: &DVector<T>) -> Result<bool> {
        if p.len() != self.dim() {
            return Err(Error::dims("contains_point", self.dim(), p.len()));
        }
        let g = self.generators.map(|x| to_f64(x));
        let d = (p - &self.center).map(|x| to_f64(x));
        Ok(match min_inf_norm(&g, &d) {
            LpOutcome::Optimal(v) => v <= 1.0 + CONTAINMENT_TOL,
            LpOutcome::Infeasible => false,
        })
    }

    /// Containment-preserving order reduction: the smallest (by column
    /// 2-norm) surplus generators are replaced by their interval hull.
    ///
    /// Requires `max_generators ≥ dim`. The result has at most
    /// `max_generators` columns and contains `self`.
    pub fn reduce_order(&self, max_generators: usize) -> Result<Zonotope<T>> {
        let n = self.dim();
        if max_generators < n {
            return Err(Error::InvalidParameter(format!(
                "order reduction cap {max_generators} is below the dimension {n}"
            )));
        }
        let k = self.num_generators();
        if k <= max_generators {
            return Ok(self.clone());
        }
        let keep = max_generators - n;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            let na = to_f64(self.generators.column(a).norm());
            let nb = to_f64(self.generators.column(b).norm());
            nb.partial_cmp(&na).expect("generator norms are finite")
        });
        let mut g = DMatrix::zeros(n, keep + n);
        for (slot, &col) in order[..keep].iter().enumerate() {
            g.column_mut(slot).copy_from(&self.generators.column(col));
        }
        for &col in &order[keep..] {
            for j in 0..n {
                g[(j, keep + j)] += self.generators[(j, col)].abs();
            }
        }
        Zonotope::new(self.center.clone(), g)
    }

    /// Outer-approximates `Z ∩ S` by the gain-parameterized zonotope
    /// `Ẑ(Λ) = {c + Λ(o + c_B − J c), [(I − Λ J) G, Λ diag(r_B)]}` with the
    /// Frobenius-minimizing closed-form gain
    /// `Λ = P Jᵀ (J P Jᵀ + Q)⁻¹`, `P = G Gᵀ`, `Q = diag(r_B)²`.
    ///
    /// A singular normal matrix gets [`GAIN_JITTER`] added to its diagonal;
    /// the returned flag reports that.
    pub fn intersect_strip(&self, s: &Strip<T>) -> Result<StripIntersection<T>> {
        let n = self.dim();
        if s.dim() != n {
            return Err(Error::dims("strip intersection", n, s.dim()));
        }
        let m = s.rows();
        let j = s.map();
        let p = &self.generators * self.generators.transpose();
        let jp = j * &p; // m×n
        let mut normal = &jp * j.transpose(); // J P Jᵀ
        for i in 0..m {
            let r = s.bound().radius()[i];
            normal[(i, i)] += r * r;
        }
        let (chol, jittered) = match Cholesky::new(normal.clone()) {
            Some(c) => (c, false),
            None => {
                log::warn!("singular strip-intersection normal matrix; adding jitter");
                let mut jm = normal;
                for i in 0..m {
                    jm[(i, i)] += real::<T>(GAIN_JITTER);
                }
                let c = Cholesky::new(jm).ok_or_else(|| {
                    Error::InvalidParameter(
                        "strip-intersection normal matrix singular even after jitter".into(),
                    )
                })?;
                (c, true)
            }
        };
        // Λᵀ = M⁻¹ J P  (m×n), since P is symmetric.
        let gain = chol.solve(&jp).transpose();
        let zonotope = self.apply_strip_gain(s, &gain)?;
        Ok(StripIntersection {
            zonotope,
            gain,
            jittered,
        })
    }

    /// Builds `Ẑ(Λ)` for an explicit gain. `Λ = 0` returns `Z` padded with
    /// zero generator columns for the strip rows.
    pub fn apply_strip_gain(&self, s: &Strip<T>, gain: &DMatrix<T>) -> Result<Zonotope<T>> {
        let n = self.dim();
        let m = s.rows();
        if gain.nrows() != n || gain.ncols() != m {
            return Err(Error::dims("strip gain", n * m, gain.nrows() * gain.ncols()));
        }
        let j = s.map();
        let innovation = s.offset() + s.bound().center() - j * &self.center;
        let center = &self.center + gain * innovation;
        let k = self.num_generators();
        let mut g = DMatrix::zeros(n, k + m);
        let ident = DMatrix::<T>::identity(n, n);
        let left = (&ident - gain * j) * &self.generators;
        g.view_mut((0, 0), (n, k)).copy_from(&left);
        for i in 0..m {
            let r = s.bound().radius()[i];
            for row in 0..n {
                g[(row, k + i)] = gain[(row, i)] * r;
            }
        }
        Zonotope::new(center, g)
    }
}

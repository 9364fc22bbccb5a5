//! Squared-exponential kernel with automatic relevance determination.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

/// `k(a, b) = σ_f² · exp(−½ Σᵢ (aᵢ − bᵢ)² / ℓᵢ²)`.
///
/// Twice continuously differentiable, bounded by `σ_f²`, with bounded
/// derivatives — the regularity the confidence-interval machinery needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    signal_variance: T,
    lengthscales: DVector<T>,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(signal_variance: T, lengthscales: DVector<T>) -> Result<Self> {
        if signal_variance <= T::zero() {
            return Err(Error::InvalidParameter(
                "signal variance must be positive".into(),
            ));
        }
        if lengthscales.is_empty() || lengthscales.iter().any(|l| *l <= T::zero()) {
            return Err(Error::InvalidParameter(
                "lengthscales must be positive and non-empty".into(),
            ));
        }
        Ok(Self {
            signal_variance,
            lengthscales,
        })
    }

    /// Isotropic convenience constructor.
    pub fn isotropic(signal_variance: T, lengthscale: T, dims: usize) -> Result<Self> {
        Self::new(signal_variance, DVector::from_element(dims, lengthscale))
    }

    pub fn signal_variance(&self) -> T {
        self.signal_variance
    }

    pub fn lengthscales(&self) -> &DVector<T> {
        &self.lengthscales
    }

    pub fn input_dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn eval(&self, a: DVectorView<T>, b: DVectorView<T>) -> T {
        debug_assert_eq!(a.len(), self.input_dim());
        debug_assert_eq!(b.len(), self.input_dim());
        let mut q = T::zero();
        for i in 0..a.len() {
            let d = (a[i] - b[i]) / self.lengthscales[i];
            q += d * d;
        }
        self.signal_variance * (-q / real::<T>(2.0)).exp()
    }

    /// Gram matrix of a row-wise point set (`n_data × n_in`).
    pub fn gram(&self, points: &DMatrix<T>) -> DMatrix<T> {
        let n = points.nrows();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = self.signal_variance;
            for j in 0..i {
                let v = self.eval(points.row(i).transpose().as_view(), points.row(j).transpose().as_view());
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Cross-covariance vector between a query and the training rows.
    pub fn cross(&self, points: &DMatrix<T>, z: &DVector<T>) -> DVector<T> {
        let n = points.nrows();
        DVector::from_fn(n, |i, _| {
            self.eval(points.row(i).transpose().as_view(), z.as_view())
        })
    }

    /// Gradient of `k(z, b)` with respect to `z`.
    pub fn grad_first_arg(&self, z: &DVector<T>, b: DVectorView<T>) -> DVector<T> {
        let kv = self.eval(z.as_view(), b);
        DVector::from_fn(self.input_dim(), |i, _| {
            let l = self.lengthscales[i];
            kv * (b[i] - z[i]) / (l * l)
        })
    }
}

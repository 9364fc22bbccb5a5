//! Fitted GP model: cached factorization, posterior queries, analytic mean
//! Jacobian, and the Lemma-style confidence scaling β.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::gpcore::{beta_scaling, Kernel};
use crate::scalar::{real, Scalar};

/// Jitter added to the kernel matrix diagonal before declaring it
/// non-positive-definite.
const FIT_JITTER: f64 = 1e-10;

/// A trained GP for a multi-output function with independent output
/// dimensions sharing one kernel and one input set (the single-output
/// surrogate construction).
///
/// Immutable after [`GpModel::fit`]; posterior queries are pure and safe to
/// run concurrently.
#[derive(Debug, Clone)]
pub struct GpModel<T: Scalar> {
    kernel: Kernel<T>,
    inputs: DMatrix<T>,  // n_data × n_in
    outputs: DMatrix<T>, // n_data × n_out
    noise_std: T,
    rkhs_bound: T,
    delta: T,
    beta: T,
    info_capacity: T,
    /// Cholesky of `K + λ²I` (present when n_data ≥ 1).
    chol: Option<Cholesky<T, Dyn>>,
    /// `(K + λ²I)⁻¹ Y`, one column per output dimension.
    alphas: DMatrix<T>,
    n_out: usize,
}

impl<T: Scalar> GpModel<T> {
    /// Conditions the GP on data. The prior mean is zero.
    ///
    /// `rkhs_bound`: pass `None` to use twice the empirical RKHS-norm
    /// estimate `√(Σⱼ yⱼᵀ(K+λ²I)⁻¹yⱼ)`.
    pub fn fit(
        inputs: DMatrix<T>,
        outputs: DMatrix<T>,
        kernel: Kernel<T>,
        noise_std: T,
        rkhs_bound: Option<T>,
        delta: T,
    ) -> Result<Self> {
        let n = inputs.nrows();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "fit requires at least one data point; use GpModel::prior for the no-data case"
                    .into(),
            ));
        }
        if outputs.nrows() != n {
            return Err(Error::dims("GP outputs rows", n, outputs.nrows()));
        }
        if inputs.ncols() != kernel.input_dim() {
            return Err(Error::dims(
                "GP input columns",
                kernel.input_dim(),
                inputs.ncols(),
            ));
        }
        if noise_std <= T::zero() {
            return Err(Error::InvalidParameter("noise std must be positive".into()));
        }
        if delta <= T::zero() || delta >= T::one() {
            return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
        }

        let mut kmat = kernel.gram(&inputs);
        let lam2 = noise_std * noise_std;
        for i in 0..n {
            kmat[(i, i)] += lam2;
        }
        let chol = match Cholesky::new(kmat.clone()) {
            Some(c) => c,
            None => {
                let mut jittered = kmat.clone();
                for i in 0..n {
                    jittered[(i, i)] += real::<T>(FIT_JITTER);
                }
                Cholesky::new(jittered)
                    .ok_or(Error::NotPositiveDefinite { jitter: FIT_JITTER })?
            }
        };
        let alphas = chol.solve(&outputs);

        // ½·log det(I + λ⁻²K) per output block of the pooled surrogate set.
        let info_capacity = {
            let mut m = kernel.gram(&inputs) / lam2;
            for i in 0..n {
                m[(i, i)] += T::one();
            }
            let c = Cholesky::new(m).ok_or(Error::NotPositiveDefinite { jitter: 0.0 })?;
            let mut logdet = T::zero();
            for i in 0..n {
                logdet += c.l_dirty()[(i, i)].ln();
            }
            // 2·Σ ln Lᵢᵢ halved, once per independent output dimension
            logdet * real::<T>(outputs.ncols() as f64)
        };

        let rkhs_bound = match rkhs_bound {
            Some(b) => {
                if b < T::zero() {
                    return Err(Error::InvalidParameter(
                        "RKHS bound must be non-negative".into(),
                    ));
                }
                b
            }
            None => {
                let mut quad = T::zero();
                for j in 0..outputs.ncols() {
                    quad += outputs.column(j).dot(&alphas.column(j));
                }
                quad.max(T::zero()).sqrt() * real::<T>(2.0)
            }
        };
        let beta = beta_scaling(rkhs_bound, info_capacity, delta)?;
        let n_out = outputs.ncols();
        Ok(Self {
            kernel,
            inputs,
            outputs,
            noise_std,
            rkhs_bound,
            delta,
            beta,
            info_capacity,
            chol: Some(chol),
            alphas,
            n_out,
        })
    }

    /// Untrained model: zero posterior mean, prior variance everywhere.
    pub fn prior(kernel: Kernel<T>, n_out: usize, noise_std: T, delta: T) -> Result<Self> {
        if noise_std <= T::zero() {
            return Err(Error::InvalidParameter("noise std must be positive".into()));
        }
        if delta <= T::zero() || delta >= T::one() {
            return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
        }
        let n_in = kernel.input_dim();
        let beta = beta_scaling(T::zero(), T::zero(), delta)?;
        Ok(Self {
            kernel,
            inputs: DMatrix::zeros(0, n_in),
            outputs: DMatrix::zeros(0, n_out),
            noise_std,
            rkhs_bound: T::zero(),
            delta,
            beta,
            info_capacity: T::zero(),
            chol: None,
            alphas: DMatrix::zeros(0, n_out),
            n_out,
        })
    }

    /// Replaces the confidence scaling (config override hook).
    pub fn with_beta(mut self, beta: T) -> Result<Self> {
        if beta < T::zero() {
            return Err(Error::InvalidParameter("beta must be non-negative".into()));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn n_data(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn n_in(&self) -> usize {
        self.kernel.input_dim()
    }

    pub fn inputs(&self) -> &DMatrix<T> {
        &self.inputs
    }

    pub fn outputs(&self) -> &DMatrix<T> {
        &self.outputs
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn noise_std(&self) -> T {
        self.noise_std
    }

    pub fn rkhs_bound(&self) -> T {
        self.rkhs_bound
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Heuristic information-capacity estimate
    /// `½·log det(I + λ⁻²K)` summed over output dimensions.
    pub fn info_capacity_estimate(&self) -> T {
        self.info_capacity
    }

    /// Posterior mean and standard deviation per output dimension.
    ///
    /// The variance is shared across dimensions (shared kernel and inputs)
    /// and clamped into `[0, σ_f²]`.
    pub fn posterior(&self, z: &DVector<T>) -> Result<(DVector<T>, DVector<T>)> {
        if z.len() != self.n_in() {
            return Err(Error::dims("posterior query", self.n_in(), z.len()));
        }
        let prior_var = self.kernel.signal_variance();
        let Some(chol) = &self.chol else {
            return Ok((
                DVector::zeros(self.n_out),
                DVector::from_element(self.n_out, prior_var.sqrt()),
            ));
        };
        let kstar = self.kernel.cross(&self.inputs, z);
        let mean = DVector::from_fn(self.n_out, |j, _| kstar.dot(&self.alphas.column(j)));
        let solved = chol.solve(&kstar);
        let var = (prior_var - kstar.dot(&solved))
            .max(T::zero())
            .min(prior_var);
        Ok((mean, DVector::from_element(self.n_out, var.sqrt())))
    }

    /// Analytic Jacobian of the posterior mean (`n_out × n_in`).
    pub fn mean_jacobian(&self, z: &DVector<T>) -> Result<DMatrix<T>> {
        if z.len() != self.n_in() {
            return Err(Error::dims("mean Jacobian query", self.n_in(), z.len()));
        }
        let mut jac = DMatrix::zeros(self.n_out, self.n_in());
        for m in 0..self.n_data() {
            let grad = self
                .kernel
                .grad_first_arg(z, self.inputs.row(m).transpose().as_view());
            for j in 0..self.n_out {
                let a = self.alphas[(m, j)];
                for i in 0..self.n_in() {
                    jac[(j, i)] += a * grad[i];
                }
            }
        }
        Ok(jac)
    }
}

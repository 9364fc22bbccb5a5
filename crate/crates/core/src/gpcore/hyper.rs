//! Hyperparameter selection by log-marginal-likelihood maximization.
//!
//! A multi-start coordinate search in log-space; no gradients needed. The
//! search is deterministic: starts are fixed multiples of a data-driven
//! initialization.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::gpcore::Kernel;
use crate::scalar::{real, to_f64, Scalar};

#[derive(Debug, Clone)]
pub struct HyperSearchOptions {
    /// Coordinate sweeps per start.
    pub sweeps: usize,
    /// Initial multiplicative step on each log-parameter.
    pub initial_step: f64,
    /// Lower clamp on the noise std to keep factorizations well-posed.
    pub min_noise_std: f64,
}

impl Default for HyperSearchOptions {
    fn default() -> Self {
        Self {
            sweeps: 12,
            initial_step: 2.0,
            min_noise_std: 1e-4,
        }
    }
}

/// Maximizes the (shared-kernel, independent-output) log marginal
/// likelihood over signal variance, per-dimension lengthscales, and noise
/// std. Returns the best kernel and noise std found.
pub fn optimize_hyperparameters<T: Scalar>(
    inputs: &DMatrix<T>,
    outputs: &DMatrix<T>,
    opts: &HyperSearchOptions,
) -> Result<(Kernel<T>, T)> {
    let n = inputs.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "hyperparameter search needs at least two data points".into(),
        ));
    }
    let n_in = inputs.ncols();

    // Data-driven initialization: output variance and per-dimension input
    // spread.
    let mut out_var = 0.0f64;
    for j in 0..outputs.ncols() {
        let col = outputs.column(j);
        let mean = to_f64(col.sum()) / n as f64;
        let var = col
            .iter()
            .map(|y| (to_f64(*y) - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        out_var += var;
    }
    out_var = (out_var / outputs.ncols() as f64).max(1e-6);

    let mut spreads = vec![1.0f64; n_in];
    for (i, spread) in spreads.iter_mut().enumerate() {
        let col = inputs.column(i);
        let lo = col.iter().fold(f64::INFINITY, |a, x| a.min(to_f64(*x)));
        let hi = col.iter().fold(f64::NEG_INFINITY, |a, x| a.max(to_f64(*x)));
        *spread = ((hi - lo) / 2.0).max(1e-3);
    }

    let starts: [f64; 3] = [1.0, 0.3, 3.0];
    let mut best: Option<(f64, Vec<f64>)> = None;

    for &scale in &starts {
        // params: [ln σf², ln ℓ₁ … ln ℓ_d, ln λ]
        let mut p: Vec<f64> = Vec::with_capacity(n_in + 2);
        p.push(out_var.ln());
        for s in &spreads {
            p.push((s * scale).ln());
        }
        p.push((out_var.sqrt() * 0.1 * scale).max(opts.min_noise_std).ln());

        let mut cur = log_marginal(inputs, outputs, &p, opts).unwrap_or(f64::NEG_INFINITY);
        let mut step = opts.initial_step;
        for _ in 0..opts.sweeps {
            let mut improved = false;
            for i in 0..p.len() {
                for dir in [step.ln(), -step.ln()] {
                    let mut cand = p.clone();
                    cand[i] += dir;
                    if let Some(v) = log_marginal(inputs, outputs, &cand, opts) {
                        if v > cur + 1e-9 {
                            cur = v;
                            p = cand;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step = step.sqrt();
                if step < 1.05 {
                    break;
                }
            }
        }
        if best.as_ref().map_or(true, |(b, _)| cur > *b) {
            best = Some((cur, p));
        }
    }

    let (_, p) = best.expect("at least one start evaluated");
    let kernel = Kernel::new(
        real::<T>(p[0].exp()),
        nalgebra::DVector::from_iterator(n_in, p[1..=n_in].iter().map(|l| real::<T>(l.exp()))),
    )?;
    let noise = real::<T>(p[n_in + 1].exp().max(opts.min_noise_std));
    Ok((kernel, noise))
}

/// Shared-kernel LML: `Σⱼ −½ yⱼᵀα_j − n_out·Σ ln Lᵢᵢ − n_out·n/2·ln 2π`.
fn log_marginal<T: Scalar>(
    inputs: &DMatrix<T>,
    outputs: &DMatrix<T>,
    log_params: &[f64],
    opts: &HyperSearchOptions,
) -> Option<f64> {
    let n = inputs.nrows();
    let n_in = inputs.ncols();
    let sf2 = log_params[0].exp();
    if !sf2.is_finite() || sf2 <= 0.0 {
        return None;
    }
    let lens: Vec<f64> = log_params[1..=n_in].iter().map(|l| l.exp()).collect();
    if lens.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return None;
    }
    let lam = log_params[n_in + 1].exp().max(opts.min_noise_std);

    let kernel = Kernel::new(
        real::<T>(sf2),
        nalgebra::DVector::from_iterator(n_in, lens.iter().map(|l| real::<T>(*l))),
    )
    .ok()?;
    let mut kmat = kernel.gram(inputs);
    let lam2 = real::<T>(lam * lam);
    for i in 0..n {
        kmat[(i, i)] += lam2;
    }
    let chol = Cholesky::new(kmat)?;
    let alphas = chol.solve(outputs);
    let mut quad = 0.0f64;
    for j in 0..outputs.ncols() {
        quad += to_f64(outputs.column(j).dot(&alphas.column(j)));
    }
    let mut logdet_half = 0.0f64;
    for i in 0..n {
        logdet_half += to_f64(chol.l_dirty()[(i, i)]).ln();
    }
    let n_out = outputs.ncols() as f64;
    let lml = -0.5 * quad
        - n_out * logdet_half
        - n_out * n as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln();
    lml.is_finite().then_some(lml)
}

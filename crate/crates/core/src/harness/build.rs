//! Turns scenario data into a ready-to-run estimation problem: fits the
//! GPs, derives the noise boxes, the compact state box, and the Lipschitz
//! constants.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::filters::SystemSpec;
use crate::gpcore::{
    estimate_lipschitz, optimize_hyperparameters, GpModel, HyperSearchOptions, Kernel,
    LipschitzConstants,
};
use crate::pendulum::KnownPendulumModel;
use crate::uncertainty::{compact_state_box, noise_box, BudgetSplit, GrowthParams, NoiseSpec};
use crate::zonogeom::{BoxSet, Zonotope};

use super::ExperimentConfig;
use crate::pendulum::ScenarioData;

/// Samples used for Lipschitz-constant estimation.
const LIPSCHITZ_SAMPLES: usize = 200;

/// Fully assembled estimation problem for one seed.
pub struct BuiltSystem {
    pub sys: Arc<SystemSpec<f64>>,
    pub lips_g: LipschitzConstants<f64>,
    pub lips_h: LipschitzConstants<f64>,
    pub budget: BudgetSplit<f64>,
}

fn fit_model(
    cfg: &ExperimentConfig,
    inputs: &DMatrix<f64>,
    outputs: &DMatrix<f64>,
    noise_floor: f64,
    delta: f64,
    beta_override: Option<f64>,
) -> Result<GpModel<f64>> {
    let (kernel, noise) = if cfg.optimize_hyperparameters {
        optimize_hyperparameters(inputs, outputs, &HyperSearchOptions::default())?
    } else {
        (data_driven_kernel(inputs, outputs)?, noise_floor)
    };
    let model = GpModel::fit(
        inputs.clone(),
        outputs.clone(),
        kernel,
        noise.max(noise_floor * 1e-2),
        None,
        delta,
    )?;
    match beta_override {
        Some(beta) => model.with_beta(beta),
        None => Ok(model),
    }
}

/// Output-variance signal, half-input-spread lengthscales.
fn data_driven_kernel(inputs: &DMatrix<f64>, outputs: &DMatrix<f64>) -> Result<Kernel<f64>> {
    let n = inputs.nrows() as f64;
    let mut var = 0.0;
    for j in 0..outputs.ncols() {
        let col = outputs.column(j);
        let mean = col.sum() / n;
        var += col.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    }
    var = (var / outputs.ncols() as f64).max(1e-6);
    let lens = DVector::from_fn(inputs.ncols(), |i, _| {
        let col = inputs.column(i);
        let lo = col.iter().fold(f64::INFINITY, |a, x| a.min(*x));
        let hi = col.iter().fold(f64::NEG_INFINITY, |a, x| a.max(*x));
        ((hi - lo) / 2.0).max(1e-3)
    });
    Kernel::new(var, lens)
}

/// Fits both models and assembles the immutable [`SystemSpec`] plus the
/// derived constants. Deterministic: the Lipschitz sampling is seeded
/// from `seed`.
pub fn build_system(
    cfg: &ExperimentConfig,
    data: &ScenarioData,
    seed: u64,
) -> Result<BuiltSystem> {
    let budget = cfg.budget_split()?;
    let p = &cfg.pendulum;
    let horizon = cfg.scenario.horizon;

    let gp_dynamics = fit_model(
        cfg,
        &data.train_g.inputs,
        &data.train_g.outputs,
        p.lambda_w(),
        budget.delta_g,
        cfg.beta_g,
    )?;
    let gp_observation = fit_model(
        cfg,
        &data.train_h.inputs,
        &data.train_h.outputs,
        p.lambda_v(),
        budget.delta_h,
        cfg.beta_h,
    )?;

    let noise_w = NoiseSpec::new(p.lambda_w(), 2, horizon, budget.delta_w)?;
    let noise_v = NoiseSpec::new(p.lambda_v(), 4, horizon, budget.delta_v)?;
    let control_domain = BoxSet::zero_centered(DVector::from_element(1, 1.0))?;

    let known = KnownPendulumModel::new(p)?;
    let state_domain = {
        // crude compact superset of everything reachable over the horizon
        let hull = starts_hull(cfg, data)?;
        let reach = hull.radius().amax() + hull.center().amax();
        let a_shift = (known.matrix() - DMatrix::identity(2, 2)).norm();
        let growth = GrowthParams {
            known_fn_bound: a_shift * 3.0 * reach.max(1.0),
            beta_g: gp_dynamics.beta(),
            kernel_sup: gp_dynamics.kernel().signal_variance(),
            noise_radius: noise_box(&noise_w)?.radius()[0],
        };
        compact_state_box(&hull.to_zonotope(), horizon, &growth)?
    };

    let sys = SystemSpec::new(
        Arc::new(known),
        gp_dynamics,
        gp_observation,
        noise_w,
        noise_v,
        control_domain,
        state_domain,
    )?;

    // Lipschitz constants over the state × control domain
    let mut center = DVector::zeros(3);
    let mut radius = DVector::zeros(3);
    center.rows_mut(0, 2).copy_from(sys.state_domain.center());
    radius.rows_mut(0, 2).copy_from(sys.state_domain.radius());
    radius[2] = 1.0;
    let gp_domain = BoxSet::new(center, radius)?;
    let lips_g = estimate_lipschitz(&sys.gp_dynamics, &gp_domain, LIPSCHITZ_SAMPLES, seed ^ 0x67)?;
    let lips_h =
        estimate_lipschitz(&sys.gp_observation, &gp_domain, LIPSCHITZ_SAMPLES, seed ^ 0x68)?;

    Ok(BuiltSystem {
        sys: Arc::new(sys),
        lips_g,
        lips_h,
        budget,
    })
}

/// Interval hull of all evaluation start boxes.
fn starts_hull(cfg: &ExperimentConfig, data: &ScenarioData) -> Result<BoxSet<f64>> {
    let r = DVector::from_column_slice(&cfg.init_radius);
    let mut lo = DVector::from_element(2, f64::INFINITY);
    let mut hi = DVector::from_element(2, f64::NEG_INFINITY);
    for start in &data.test_starts {
        for j in 0..2 {
            lo[j] = lo[j].min(start[j] - r[j]);
            hi[j] = hi[j].max(start[j] + r[j]);
        }
    }
    BoxSet::new((&lo + &hi) / 2.0, (&hi - &lo) / 2.0)
}

/// The initial set estimate for one evaluation start.
pub fn initial_estimate(cfg: &ExperimentConfig, start: &DVector<f64>) -> Result<Zonotope<f64>> {
    BoxSet::new(start.clone(), DVector::from_column_slice(&cfg.init_radius))
        .map(|b| b.to_zonotope())
}

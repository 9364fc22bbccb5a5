//! Simulated inverted-pendulum benchmark: LQR-closed-loop dynamics,
//! end-effector observations, and the four distribution-shift training
//! scenarios.
//!
//! The angle `θ` is measured from the upright set-point, so the regulated
//! equilibrium is `x* = (0, 0)`. Angles are radians internally; the noise
//! levels are configured in degrees and converted (and audited) on load.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::KnownDynamics;
use crate::uncertainty::HessianBound;
use crate::zonogeom::BoxSet;

/// Training region `θ ∈ [0, π]`.
pub const TRAIN_REGION: (f64, f64) = (0.0, std::f64::consts::PI);
/// Testing region `θ ∈ [π, 2π]`.
pub const TEST_REGION: (f64, f64) = (std::f64::consts::PI, 2.0 * std::f64::consts::PI);

/// Angular-velocity range for sampled rollout starts (rad/s).
const START_VELOCITY_RANGE: f64 = 1.0;

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * std::f64::consts::PI / 180.0
}

/// Physical and design constants of the benchmark. None of these are
/// dictated by the estimation problem; they are pinned here (and in
/// config files) so experiments are reproducible and reviewers can vary
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PendulumParams {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub damping: f64,
    pub dt: f64,
    /// State weight of the regulator (PSD, row-major 2×2).
    pub lqr_q: [[f64; 2]; 2],
    pub lqr_r: f64,
    /// Process-noise std in degrees (applied per state dimension).
    pub lambda_w_deg: f64,
    /// Measurement-noise std in degrees (angle-equivalent; scaled by the
    /// arm length on the position/velocity channels).
    pub lambda_v_deg: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 1.0,
            gravity: 9.81,
            damping: 0.1,
            dt: 0.05,
            lqr_q: [[10.0, 0.0], [0.0, 1.0]],
            lqr_r: 1.0,
            lambda_w_deg: 7.16,
            lambda_v_deg: 8.88,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("length", self.length),
            ("gravity", self.gravity),
            ("dt", self.dt),
            ("lqr_r", self.lqr_r),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.damping < 0.0 {
            return Err(Error::InvalidParameter("damping must be non-negative".into()));
        }
        let q = &self.lqr_q;
        if (q[0][1] - q[1][0]).abs() > 1e-12
            || q[0][0] < 0.0
            || q[1][1] < 0.0
            || q[0][0] * q[1][1] - q[0][1] * q[1][0] < -1e-12
        {
            return Err(Error::InvalidParameter("lqr_q must be symmetric PSD".into()));
        }
        Ok(())
    }

    /// Process-noise std in radians.
    pub fn lambda_w(&self) -> f64 {
        deg_to_rad(self.lambda_w_deg)
    }

    /// Measurement-noise std in meters (and m/s): the angle-equivalent
    /// std converted to radians and scaled by the arm length.
    pub fn lambda_v(&self) -> f64 {
        self.length * deg_to_rad(self.lambda_v_deg)
    }
}

/// Discretized linearization of the *open-loop* pendulum at the upright
/// set-point, under the same semi-implicit Euler scheme as the simulator,
/// so that the model error near the set-point is purely the Taylor
/// remainder.
pub fn linearized_discrete(p: &PendulumParams) -> (DMatrix<f64>, DVector<f64>) {
    let ml2 = p.mass * p.length * p.length;
    let gl = p.gravity / p.length;
    let c = p.damping / ml2;
    let dt = p.dt;
    // θ̇′ = θ̇ + dt(gl·θ − c·θ̇ + u/ml²); θ′ = θ + dt·θ̇′
    let a = DMatrix::from_row_slice(
        2,
        2,
        &[1.0 + dt * dt * gl, dt * (1.0 - dt * c), dt * gl, 1.0 - dt * c],
    );
    let b = DVector::from_column_slice(&[dt * dt / ml2, dt / ml2]);
    (a, b)
}

/// Fixed-point iteration for the discrete algebraic Riccati equation.
/// Returns the gain `K` and the solution `P`.
pub fn dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    const TOL: f64 = 1e-12;
    const MAX_ITERS: usize = 10_000;
    let mut p = q.clone();
    for it in 0..MAX_ITERS {
        let btp = b.transpose() * &p;
        let inner = (r + &btp * b)
            .try_inverse()
            .ok_or(Error::RiccatiDivergence { iterations: it })?;
        let next = q + a.transpose() * &p * a
            - a.transpose() * &p * b * &inner * &btp * a;
        let diff = (&next - &p).abs().max();
        p = next;
        if diff < TOL {
            let btp = b.transpose() * &p;
            let k = (r + &btp * b)
                .try_inverse()
                .ok_or(Error::RiccatiDivergence { iterations: it })?
                * btp
                * a;
            return Ok((k, p));
        }
    }
    Err(Error::RiccatiDivergence {
        iterations: MAX_ITERS,
    })
}

/// Infinite-horizon LQR feedback gain for the linearized pendulum.
pub fn lqr_gain(p: &PendulumParams) -> Result<DMatrix<f64>> {
    let (a, b) = linearized_discrete(p);
    let q = DMatrix::from_row_slice(2, 2, &[p.lqr_q[0][0], p.lqr_q[0][1], p.lqr_q[1][0], p.lqr_q[1][1]]);
    let r = DMatrix::from_element(1, 1, p.lqr_r);
    let b2 = DMatrix::from_column_slice(2, 1, b.as_slice());
    let (k, _) = dare(&a, &b2, &q, &r)?;
    Ok(k)
}

/// Discretized closed-loop matrix `A_cl = A_d − B_d K`: the known model
/// `f(x) = A_cl·x`.
pub fn closed_loop_matrix(p: &PendulumParams, k: &DMatrix<f64>) -> DMatrix<f64> {
    let (a, b) = linearized_discrete(p);
    let b2 = DMatrix::from_column_slice(2, 1, b.as_slice());
    a - b2 * k
}

/// One semi-implicit Euler step of the LQR-controlled nonlinear pendulum
/// plus additive process noise: the true dynamics `d(x) + w`.
pub fn true_dynamics(
    p: &PendulumParams,
    k: &DMatrix<f64>,
    x: &DVector<f64>,
    w: &DVector<f64>,
) -> DVector<f64> {
    let ml2 = p.mass * p.length * p.length;
    let torque = -(k[(0, 0)] * x[0] + k[(0, 1)] * x[1]);
    let accel = (p.gravity / p.length) * x[0].sin() - p.damping * x[1] / ml2 + torque / ml2;
    let vel = x[1] + p.dt * accel;
    let angle = x[0] + p.dt * vel;
    DVector::from_column_slice(&[angle + w[0], vel + w[1]])
}

/// End-effector position and velocity plus measurement noise:
/// `y = (ℓ sin θ, −ℓ cos θ, ℓ θ̇ cos θ, ℓ θ̇ sin θ) + v`.
pub fn true_observation(p: &PendulumParams, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let (theta, vel) = (x[0], x[1]);
    let l = p.length;
    DVector::from_column_slice(&[
        l * theta.sin() + v[0],
        -l * theta.cos() + v[1],
        l * vel * theta.cos() + v[2],
        l * vel * theta.sin() + v[3],
    ])
}

/// The known linear model as a dynamics callback for the filters.
#[derive(Debug, Clone)]
pub struct KnownPendulumModel {
    a_cl: DMatrix<f64>,
}

impl KnownPendulumModel {
    pub fn new(p: &PendulumParams) -> Result<Self> {
        let k = lqr_gain(p)?;
        Ok(Self {
            a_cl: closed_loop_matrix(p, &k),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a_cl
    }
}

impl HessianBound<f64> for KnownPendulumModel {
    fn hessian_bound(&self, region: &BoxSet<f64>, _u: &DVector<f64>) -> DVector<f64> {
        // linear map: zero curvature
        DVector::zeros(region.dim())
    }
}

impl KnownDynamics<f64> for KnownPendulumModel {
    fn eval(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        &self.a_cl * x
    }

    fn jacobian_x(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.a_cl.clone())
    }
}

/// Which data source suffers distribution shift (is trained only on the
/// training region).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftVariant {
    /// Dynamics and observation both shifted.
    Both,
    /// Only the dynamics data is shifted.
    Dynamics,
    /// Only the observation data is shifted.
    Observation,
    /// Neither: both models also see testing-region data.
    None,
}

impl ShiftVariant {
    pub const ALL: [ShiftVariant; 4] = [
        ShiftVariant::Both,
        ShiftVariant::Dynamics,
        ShiftVariant::Observation,
        ShiftVariant::None,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ShiftVariant::Both => "shift-both",
            ShiftVariant::Dynamics => "shift-dynamics",
            ShiftVariant::Observation => "shift-observation",
            ShiftVariant::None => "shift-none",
        }
    }
}

/// Rollout-count and horizon protocol of one experiment scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShiftScenario {
    pub variant: ShiftVariant,
    /// Training rollouts started inside the training region.
    pub default_rollouts: usize,
    /// Additional rollouts started inside the testing region.
    pub extra_rollouts: usize,
    /// Distinct evaluation starting points in the testing region.
    pub starts: usize,
    /// Repetitions per starting point.
    pub reps: usize,
    /// Steps per rollout and per evaluation run.
    pub horizon: usize,
}

impl Default for ShiftScenario {
    fn default() -> Self {
        Self {
            variant: ShiftVariant::Both,
            default_rollouts: 9,
            extra_rollouts: 5,
            starts: 4,
            reps: 10,
            horizon: 15,
        }
    }
}

impl ShiftScenario {
    pub fn validate(&self) -> Result<()> {
        if self.default_rollouts == 0
            || self.starts == 0
            || self.reps == 0
            || self.horizon == 0
        {
            return Err(Error::InvalidParameter(
                "scenario counts and horizon must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Tagged training data: rows of (time, state + control placeholder,
/// target).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub times: Vec<usize>,
    /// `n × 3`: θ, θ̇, and the constant control placeholder.
    pub inputs: DMatrix<f64>,
    pub outputs: DMatrix<f64>,
    /// `"train"` or `"extra"` per row.
    pub tags: Vec<&'static str>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Columns: `t, theta, thetadot, out_1..out_k, split`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let k = self.outputs.ncols();
        let mut header = vec!["t".to_string(), "theta".to_string(), "thetadot".to_string()];
        for j in 0..k {
            header.push(format!("out_{}", j + 1));
        }
        header.push("split".to_string());
        out.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![
                self.times[i].to_string(),
                self.inputs[(i, 0)].to_string(),
                self.inputs[(i, 1)].to_string(),
            ];
            for j in 0..k {
                row.push(self.outputs[(i, j)].to_string());
            }
            row.push(self.tags[i].to_string());
            out.write_record(&row)?;
        }
        out.flush().map_err(Error::Io)?;
        Ok(())
    }

    fn from_rows(rows: Vec<(usize, DVector<f64>, DVector<f64>, &'static str)>, n_out: usize) -> Self {
        let n = rows.len();
        let mut inputs = DMatrix::zeros(n, 3);
        let mut outputs = DMatrix::zeros(n, n_out);
        let mut times = Vec::with_capacity(n);
        let mut tags = Vec::with_capacity(n);
        for (i, (t, x, y, tag)) in rows.into_iter().enumerate() {
            inputs[(i, 0)] = x[0];
            inputs[(i, 1)] = x[1];
            times.push(t);
            tags.push(tag);
            for j in 0..n_out {
                outputs[(i, j)] = y[j];
            }
        }
        Self {
            times,
            inputs,
            outputs,
            tags,
        }
    }
}

/// Everything needed to train the models and evaluate one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    /// Residual-dynamics data: `(x, u) → d(x) + w − A_cl·x`.
    pub train_g: Dataset,
    /// Observation data: `(x, u) → y`.
    pub train_h: Dataset,
    /// Evaluation starting states in the testing region.
    pub test_starts: Vec<DVector<f64>>,
}

/// Generates the training datasets and evaluation starts for one shift
/// variant. Deterministic for a fixed seed: the same rollouts underlie
/// every variant, which only selects which region tags each model sees.
pub fn generate_scenario(
    params: &PendulumParams,
    scenario: &ShiftScenario,
    seed: u64,
) -> Result<ScenarioData> {
    params.validate()?;
    scenario.validate()?;
    let k = lqr_gain(params)?;
    let a_cl = closed_loop_matrix(params, &k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_noise = Normal::new(0.0, params.lambda_w()).map_err(|e| {
        Error::InvalidParameter(format!("process noise: {e}"))
    })?;
    let v_noise = Normal::new(0.0, params.lambda_v()).map_err(|e| {
        Error::InvalidParameter(format!("measurement noise: {e}"))
    })?;
    let uniform = rand_distr::Uniform::new(0.0f64, 1.0).map_err(|e| {
        Error::InvalidParameter(format!("start sampling: {e}"))
    })?;

    let mut g_rows = Vec::new();
    let mut h_rows = Vec::new();
    let total = scenario.default_rollouts + scenario.extra_rollouts;
    for rollout in 0..total {
        let (region, tag) = if rollout < scenario.default_rollouts {
            (TRAIN_REGION, "train")
        } else {
            (TEST_REGION, "extra")
        };
        let theta0 = region.0 + (region.1 - region.0) * uniform.sample(&mut rng);
        let vel0 = START_VELOCITY_RANGE * (2.0 * uniform.sample(&mut rng) - 1.0);
        let mut x = DVector::from_column_slice(&[theta0, vel0]);
        for t in 0..scenario.horizon {
            let w = DVector::from_fn(2, |_, _| w_noise.sample(&mut rng));
            let v = DVector::from_fn(4, |_, _| v_noise.sample(&mut rng));
            let x_next = true_dynamics(params, &k, &x, &w);
            let y = true_observation(params, &x, &v);
            // keep only the points inside this rollout's region so the
            // shifted models genuinely never see the other region
            if x[0] >= region.0 && x[0] <= region.1 {
                let residual = &x_next - &a_cl * &x;
                g_rows.push((t, x.clone(), residual, tag));
                h_rows.push((t, x.clone(), y, tag));
            }
            x = x_next;
        }
    }

    let variant = scenario.variant;
    let keep = |shifted: bool, rows: &Vec<(usize, DVector<f64>, DVector<f64>, &'static str)>| {
        rows.iter()
            .filter(|r| !shifted || r.3 == "train")
            .cloned()
            .collect::<Vec<_>>()
    };
    let g_shifted = matches!(variant, ShiftVariant::Both | ShiftVariant::Dynamics);
    let h_shifted = matches!(variant, ShiftVariant::Both | ShiftVariant::Observation);
    let train_g = Dataset::from_rows(keep(g_shifted, &g_rows), 2);
    let train_h = Dataset::from_rows(keep(h_shifted, &h_rows), 4);

    let mut test_starts = Vec::with_capacity(scenario.starts);
    for _ in 0..scenario.starts {
        let theta = TEST_REGION.0 + (TEST_REGION.1 - TEST_REGION.0) * uniform.sample(&mut rng);
        let vel = START_VELOCITY_RANGE * (2.0 * uniform.sample(&mut rng) - 1.0);
        test_starts.push(DVector::from_column_slice(&[theta, vel]));
    }

    Ok(ScenarioData {
        train_g,
        train_h,
        test_starts,
    })
}

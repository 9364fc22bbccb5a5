//! Experiment execution: one trial per (seed, start, repetition), run in
//! a parallel worker pool, aggregated into a digest-stamped archive.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::filters::{
    EkfEstimator, EkfState, Estimator, SetDescriptor, SystemSpec, ZkfEstimator, ZkfOptions,
    ZkfState,
};
use crate::pendulum::{generate_scenario, lqr_gain, true_dynamics, true_observation};

use super::build::{build_system, initial_estimate, BuiltSystem};
use super::metrics::{compute_metrics, MetricsRow, CHI2_2_95};
use super::ExperimentConfig;

pub const ARCHIVE_SCHEMA_VERSION: u32 = 1;

/// Per-estimator trace of one trial. `seconds` is wall-clock timing and
/// is excluded from the determinism digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTrace {
    pub name: String,
    /// Point estimate per step.
    pub points: Vec<Vec<f64>>,
    /// Box radii of the set estimate per step (interval hull for the
    /// zonotopic filter, 95%-ellipsoid bounding box for the EKF).
    pub radii: Vec<Vec<f64>>,
    /// Whether the true state lay inside the set estimate.
    pub included: Vec<bool>,
    pub seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: usize,
    pub seed: u64,
    pub start_index: usize,
    pub rep: usize,
    /// True states x_1..x_T.
    pub truth: Vec<Vec<f64>>,
    /// Measurements y_1..y_T.
    pub measurements: Vec<Vec<f64>>,
    pub estimators: Vec<EstimatorTrace>,
    /// Present when the trial failed; successful estimator traces up to
    /// the failure are kept.
    pub error: Option<String>,
}

/// Results archive: everything needed to re-derive the report tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
    pub metrics: Vec<MetricsRow>,
    /// SHA-256 over the deterministic content (timing zeroed out).
    pub digest: String,
}

impl Archive {
    /// Digest of the archive with all timing information removed, so two
    /// runs of the same config/seeds hash identically.
    pub fn deterministic_digest(&self) -> String {
        let mut stripped = self.clone();
        stripped.digest = String::new();
        for trial in &mut stripped.trials {
            for est in &mut trial.estimators {
                est.seconds.clear();
            }
        }
        for row in &mut stripped.metrics {
            row.avg_step_time = 0.0;
        }
        let bytes = serde_json::to_vec(&stripped).expect("archive serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

struct TrialSpec {
    trial_id: usize,
    seed: u64,
    start_index: usize,
    rep: usize,
    start: DVector<f64>,
    built: Arc<BuiltSystem>,
}

/// Runs the configured experiment. Trial failures are recorded in the
/// archive and do not abort the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Archive> {
    cfg.validate()?;
    let mut specs = Vec::new();
    let mut trial_id = 0;
    for &seed in &cfg.seeds {
        let data = generate_scenario(&cfg.pendulum, &cfg.scenario, seed)?;
        let built = Arc::new(build_system(cfg, &data, seed)?);
        for (start_index, start) in data.test_starts.iter().enumerate() {
            for rep in 0..cfg.scenario.reps {
                specs.push(TrialSpec {
                    trial_id,
                    seed,
                    start_index,
                    rep,
                    start: start.clone(),
                    built: built.clone(),
                });
                trial_id += 1;
            }
        }
    }

    let mut trials: Vec<TrialResult> = specs
        .par_iter()
        .map(|spec| run_trial(cfg, spec))
        .collect();
    trials.sort_by_key(|t| t.trial_id);

    let metrics = compute_metrics(cfg.scenario.variant.label(), &trials);
    let mut archive = Archive {
        schema_version: ARCHIVE_SCHEMA_VERSION,
        config: cfg.clone(),
        trials,
        metrics,
        digest: String::new(),
    };
    archive.digest = archive.deterministic_digest();
    Ok(archive)
}

fn run_trial(cfg: &ExperimentConfig, spec: &TrialSpec) -> TrialResult {
    let mut result = TrialResult {
        trial_id: spec.trial_id,
        seed: spec.seed,
        start_index: spec.start_index,
        rep: spec.rep,
        truth: Vec::new(),
        measurements: Vec::new(),
        estimators: Vec::new(),
        error: None,
    };
    if let Err(e) = run_trial_inner(cfg, spec, &mut result) {
        result.error = Some(e.to_string());
    }
    result
}

/// Simulates the ground truth and measurement sequence of one trial.
/// Deterministic: the noise stream is derived from the master seed and
/// the trial id, independent of which estimators later consume it.
pub fn simulate_trial_data(
    cfg: &ExperimentConfig,
    seed: u64,
    trial_id: usize,
    start: &DVector<f64>,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let p = &cfg.pendulum;
    let trial_key = seed ^ (trial_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(trial_key);
    let w_noise =
        Normal::new(0.0, p.lambda_w()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let v_noise =
        Normal::new(0.0, p.lambda_v()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let unit = Uniform::new_inclusive(-1.0f64, 1.0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;

    // truth starts somewhere inside the initial estimate box
    let mut x =
        DVector::from_fn(2, |j, _| start[j] + cfg.init_radius[j] * unit.sample(&mut rng));
    let k_lqr = lqr_gain(p)?;
    Ok((0..cfg.scenario.horizon)
        .map(|_| {
            let w = DVector::from_fn(2, |_, _| w_noise.sample(&mut rng));
            let v = DVector::from_fn(4, |_, _| v_noise.sample(&mut rng));
            x = true_dynamics(p, &k_lqr, &x, &w);
            let y = true_observation(p, &x, &v);
            (x.clone(), y)
        })
        .unzip())
}

fn run_trial_inner(
    cfg: &ExperimentConfig,
    spec: &TrialSpec,
    result: &mut TrialResult,
) -> Result<()> {
    let horizon = cfg.scenario.horizon;
    let built = &spec.built;
    let sys = &built.sys;

    let init = initial_estimate(cfg, &spec.start)?;
    let (truth, measurements) =
        simulate_trial_data(cfg, spec.seed, spec.trial_id, &spec.start)?;
    let mut estimators = make_estimators(cfg, sys.clone(), built, &init)?;
    let u = DVector::zeros(1);
    for est in &mut estimators {
        let mut trace = EstimatorTrace {
            name: est.name().to_string(),
            points: Vec::with_capacity(horizon),
            radii: Vec::with_capacity(horizon),
            included: Vec::with_capacity(horizon),
            seconds: Vec::with_capacity(horizon),
        };
        for t in 0..horizon {
            let record = est.step(&u, &u, &measurements[t])?;
            let (radii, included) =
                describe_set(&record.set, &record.point_estimate, &truth[t])?;
            trace.points.push(record.point_estimate.as_slice().to_vec());
            trace.radii.push(radii);
            trace.included.push(included);
            trace.seconds.push(record.seconds);
        }
        result.estimators.push(trace);
    }
    result.truth = truth.iter().map(|x| x.as_slice().to_vec()).collect();
    result.measurements = measurements.iter().map(|y| y.as_slice().to_vec()).collect();
    Ok(())
}

/// Instantiates the configured estimators with matched initialization.
pub fn make_estimators(
    cfg: &ExperimentConfig,
    sys: Arc<SystemSpec<f64>>,
    built: &BuiltSystem,
    init: &crate::zonogeom::Zonotope<f64>,
) -> Result<Vec<Box<dyn Estimator<f64>>>> {
    let mut opts = ZkfOptions::standard(sys.n_x());
    if let Some(cap) = cfg.order_cap {
        opts.order_cap = Some(cap);
    }
    let mut out: Vec<Box<dyn Estimator<f64>>> = Vec::new();
    for name in &cfg.estimators {
        match name.as_str() {
            "gp-zkf" => {
                let state = ZkfState::init(init.clone(), built.lips_g, built.lips_h);
                out.push(Box::new(ZkfEstimator::new(sys.clone(), opts, state)));
            }
            "gp-ekf" => {
                // variance of a uniform draw over the initial box
                let cov = DMatrix::from_fn(2, 2, |i, j| {
                    if i == j {
                        let r = init.generators()[(i, i)];
                        r * r / 3.0
                    } else {
                        0.0
                    }
                });
                let state = EkfState::init(init.center().clone(), cov)?;
                out.push(Box::new(EkfEstimator::new(sys.clone(), state)));
            }
            other => return Err(Error::InvalidConfig(format!("unknown estimator {other:?}"))),
        }
    }
    Ok(out)
}

/// Box radii of a set estimate plus whether it contains the true state.
/// For the Gaussian case the set is the 95% confidence ellipsoid around
/// the point estimate.
pub fn describe_set(
    set: &SetDescriptor<f64>,
    point: &DVector<f64>,
    truth: &DVector<f64>,
) -> Result<(Vec<f64>, bool)> {
    match set {
        SetDescriptor::Zonotope(z) => {
            let hull = z.interval_hull();
            Ok((hull.radius().as_slice().to_vec(), z.contains_point(truth)?))
        }
        SetDescriptor::Gaussian { covariance } => {
            let n = covariance.nrows();
            let radii: Vec<f64> = (0..n)
                .map(|j| (CHI2_2_95 * covariance[(j, j)]).sqrt())
                .collect();
            let mut cov = covariance.clone();
            let inv = loop {
                match cov.clone().try_inverse() {
                    Some(inv) => break inv,
                    None => {
                        for i in 0..n {
                            cov[(i, i)] += 1e-12;
                        }
                    }
                }
            };
            let d = truth - point;
            let maha = (d.transpose() * inv * &d)[(0, 0)];
            Ok((radii, maha <= CHI2_2_95))
        }
    }
}

/// Writes one trial as a replayable CSV: `t, u_1, y_1..y_4, truth_1,
/// truth_2`.
pub fn write_trial_csv<W: Write>(trial: &TrialResult, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let n_y = trial.measurements.first().map_or(0, |y| y.len());
    let n_x = trial.truth.first().map_or(0, |x| x.len());
    let mut header = vec!["t".to_string(), "u_1".to_string()];
    for j in 0..n_y {
        header.push(format!("y_{}", j + 1));
    }
    for j in 0..n_x {
        header.push(format!("truth_{}", j + 1));
    }
    out.write_record(&header)?;
    for t in 0..trial.measurements.len() {
        let mut row = vec![(t + 1).to_string(), "0".to_string()];
        for v in &trial.measurements[t] {
            row.push(v.to_string());
        }
        for v in &trial.truth[t] {
            row.push(v.to_string());
        }
        out.write_record(&row)?;
    }
    out.flush().map_err(Error::Io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::replay::replay_offline;
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.scenario.reps = 1;
        cfg.scenario.starts = 2;
        cfg.scenario.horizon = 6;
        cfg.optimize_hyperparameters = false;
        cfg
    }

    #[test]
    fn run_is_deterministic_up_to_timing() {
        let cfg = small_cfg();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.digest, b.digest);
        assert_eq!(a.trials.len(), 2);
        for (ta, tb) in a.trials.iter().zip(&b.trials) {
            assert_eq!(ta.truth, tb.truth);
            for (ea, eb) in ta.estimators.iter().zip(&tb.estimators) {
                assert_eq!(ea.points, eb.points);
                assert_eq!(ea.included, eb.included);
            }
        }
        // and a different seed changes the digest
        let mut cfg2 = cfg.clone();
        cfg2.seeds = vec![1];
        let c = run_experiment(&cfg2).unwrap();
        assert_ne!(a.digest, c.digest);
    }

    #[test]
    fn trials_record_both_estimators_and_all_steps() {
        let cfg = small_cfg();
        let archive = run_experiment(&cfg).unwrap();
        for trial in &archive.trials {
            assert!(trial.error.is_none(), "trial failed: {:?}", trial.error);
            assert_eq!(trial.estimators.len(), 2);
            for est in &trial.estimators {
                assert_eq!(est.points.len(), cfg.scenario.horizon);
                assert_eq!(est.seconds.len(), cfg.scenario.horizon);
            }
        }
        assert_eq!(archive.metrics.len(), 2);
        for row in &archive.metrics {
            assert!(row.inclusion_pct >= 0.0 && row.inclusion_pct <= 100.0);
            assert!(row.avg_radius.iter().all(|r| *r >= 0.0));
        }
    }

    #[test]
    fn replay_reproduces_run_metrics() {
        let cfg = small_cfg();
        let archive = run_experiment(&cfg).unwrap();
        let trial = &archive.trials[0];
        let mut buf = Vec::new();
        write_trial_csv(trial, &mut buf).unwrap();

        let data = generate_scenario(&cfg.pendulum, &cfg.scenario, trial.seed).unwrap();
        let built = build_system(&cfg, &data, trial.seed).unwrap();
        let init = initial_estimate(&cfg, &data.test_starts[trial.start_index]).unwrap();
        let outcome = replay_offline(buf.as_slice(), &cfg, &built, &init).unwrap();
        assert!(outcome.has_truth);

        for (replayed, original) in outcome.trial.estimators.iter().zip(&trial.estimators) {
            assert_eq!(replayed.name, original.name);
            assert_eq!(replayed.points, original.points);
            assert_eq!(replayed.radii, original.radii);
            assert_eq!(replayed.included, original.included);
        }
    }

    #[test]
    fn replay_without_truth_omits_error_metrics() {
        let cfg = small_cfg();
        let archive = run_experiment(&cfg).unwrap();
        let trial = &archive.trials[0];
        let mut buf = Vec::new();
        write_trial_csv(trial, &mut buf).unwrap();
        // strip the truth columns
        let text = String::from_utf8(buf).unwrap();
        let stripped: String = text
            .lines()
            .map(|l| {
                let fields: Vec<&str> = l.split(',').collect();
                fields[..fields.len() - 2].join(",")
            })
            .collect::<Vec<_>>()
            .join("\n");

        let data = generate_scenario(&cfg.pendulum, &cfg.scenario, trial.seed).unwrap();
        let built = build_system(&cfg, &data, trial.seed).unwrap();
        let init = initial_estimate(&cfg, &data.test_starts[trial.start_index]).unwrap();
        let outcome = replay_offline(stripped.as_bytes(), &cfg, &built, &init).unwrap();
        assert!(!outcome.has_truth);
        for m in &outcome.metrics {
            assert!(m.rmse.is_none());
            assert!(m.inclusion_pct.is_none());
            assert!(!m.avg_radius.is_empty());
        }
    }

    #[test]
    fn replay_reports_malformed_rows_by_index() {
        let cfg = small_cfg();
        let archive = run_experiment(&cfg).unwrap();
        let trial = &archive.trials[0];
        let mut buf = Vec::new();
        write_trial_csv(trial, &mut buf).unwrap();
        let mut lines: Vec<String> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(String::from)
            .collect();
        lines[3] = lines[3].replace(&lines[3].split(',').nth(2).unwrap().to_string(), "not-a-number");
        let broken = lines.join("\n");

        let data = generate_scenario(&cfg.pendulum, &cfg.scenario, trial.seed).unwrap();
        let built = build_system(&cfg, &data, trial.seed).unwrap();
        let init = initial_estimate(&cfg, &data.test_starts[trial.start_index]).unwrap();
        let err = replay_offline(broken.as_bytes(), &cfg, &built, &init).unwrap_err();
        match err {
            Error::MalformedRow { row, .. } => assert_eq!(row, 3),
            other => panic!("expected MalformedRow, got {other}"),
        }
    }
}

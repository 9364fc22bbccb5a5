//! Offline replay: run the estimators over an external measurement CSV.
//!
//! Expected columns: `t, u_1..u_{n_u}, y_1..y_{n_y}` and optionally
//! `truth_1..truth_{n_x}`. Error and inclusion metrics are computed only
//! when the truth columns are present.

use std::io::Read;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zonogeom::Zonotope;

use super::build::BuiltSystem;
use super::run::{describe_set, make_estimators, EstimatorTrace, TrialResult};
use super::ExperimentConfig;

/// Replay summary per estimator; `rmse`/`inclusion_pct` are absent when
/// the CSV carries no truth columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayMetrics {
    pub estimator: String,
    pub rmse: Option<Vec<f64>>,
    pub inclusion_pct: Option<f64>,
    pub avg_radius: Vec<f64>,
    pub avg_step_time: f64,
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub trial: TrialResult,
    pub has_truth: bool,
    pub metrics: Vec<ReplayMetrics>,
}

/// Replays the estimators over `reader`. Row indices in errors are
/// 1-based data rows (the header is row 0).
pub fn replay_offline<R: Read>(
    reader: R,
    cfg: &ExperimentConfig,
    built: &BuiltSystem,
    init: &Zonotope<f64>,
) -> Result<ReplayOutcome> {
    let sys = &built.sys;
    let (n_u, n_y, n_x) = (sys.n_u(), sys.n_y(), sys.n_x());
    let mut csv_reader = csv::Reader::from_reader(reader);

    let headers = csv_reader
        .headers()
        .map_err(Error::Csv)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    let mut expected = vec!["t".to_string()];
    for j in 1..=n_u {
        expected.push(format!("u_{j}"));
    }
    for j in 1..=n_y {
        expected.push(format!("y_{j}"));
    }
    let mut truth_cols = expected.clone();
    for j in 1..=n_x {
        truth_cols.push(format!("truth_{j}"));
    }
    let has_truth = if headers == expected {
        false
    } else if headers == truth_cols {
        true
    } else {
        return Err(Error::MalformedRow {
            row: 0,
            reason: format!("unexpected header {headers:?}; want {expected:?} with optional truth_1..truth_{n_x}"),
        });
    };

    let mut controls: Vec<DVector<f64>> = Vec::new();
    let mut measurements: Vec<DVector<f64>> = Vec::new();
    let mut truths: Vec<DVector<f64>> = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let want = 1 + n_u + n_y + if has_truth { n_x } else { 0 };
        if record.len() != want {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {want} fields, found {}", record.len()),
            });
        }
        let num = |idx: usize| -> Result<f64> {
            record[idx].trim().parse::<f64>().map_err(|e| Error::MalformedRow {
                row,
                reason: format!("column {:?}: {e}", headers[idx]),
            })
        };
        let t = num(0)?;
        if (t - (row as f64)).abs() > 1e-9 {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected t = {row}, found {t}"),
            });
        }
        let mut u = DVector::zeros(n_u);
        for j in 0..n_u {
            u[j] = num(1 + j)?;
        }
        controls.push(u);
        measurements.push({
            let mut y = DVector::zeros(n_y);
            for j in 0..n_y {
                y[j] = num(1 + n_u + j)?;
            }
            y
        });
        if has_truth {
            let mut x = DVector::zeros(n_x);
            for j in 0..n_x {
                x[j] = num(1 + n_u + n_y + j)?;
            }
            truths.push(x);
        }
    }

    let mut trial = TrialResult {
        trial_id: 0,
        seed: 0,
        start_index: 0,
        rep: 0,
        truth: truths.iter().map(|x| x.as_slice().to_vec()).collect(),
        measurements: measurements.iter().map(|y| y.as_slice().to_vec()).collect(),
        estimators: Vec::new(),
        error: None,
    };

    let mut estimators = make_estimators(cfg, sys.clone(), built, init)?;
    for est in &mut estimators {
        let mut trace = EstimatorTrace {
            name: est.name().to_string(),
            points: Vec::new(),
            radii: Vec::new(),
            included: Vec::new(),
            seconds: Vec::new(),
        };
        for t in 0..measurements.len() {
            let record = est.step(&controls[t], &controls[t], &measurements[t])?;
            // without truth, probe the set at its own point estimate: the
            // radii are valid, the inclusion flag is discarded
            let probe = truths.get(t).unwrap_or(&record.point_estimate).clone();
            let (radii, included) = describe_set(&record.set, &record.point_estimate, &probe)?;
            trace.points.push(record.point_estimate.as_slice().to_vec());
            trace.radii.push(radii);
            trace.included.push(included && has_truth);
            trace.seconds.push(record.seconds);
        }
        trial.estimators.push(trace);
    }

    let metrics = trial
        .estimators
        .iter()
        .map(|trace| summarize(trace, &trial, has_truth))
        .collect();
    Ok(ReplayOutcome {
        trial,
        has_truth,
        metrics,
    })
}

fn summarize(trace: &EstimatorTrace, trial: &TrialResult, has_truth: bool) -> ReplayMetrics {
    let steps = trace.points.len().max(1) as f64;
    let n = trace.points.first().map_or(0, |p| p.len());
    let avg_radius = (0..n)
        .map(|j| trace.radii.iter().map(|r| r[j]).sum::<f64>() / steps)
        .collect();
    let avg_step_time = trace.seconds.iter().sum::<f64>() / steps;
    let (rmse, inclusion_pct) = if has_truth {
        let rmse = (0..n)
            .map(|j| {
                (trace
                    .points
                    .iter()
                    .zip(&trial.truth)
                    .map(|(p, x)| (p[j] - x[j]).powi(2))
                    .sum::<f64>()
                    / steps)
                    .sqrt()
            })
            .collect();
        let incl = 100.0 * trace.included.iter().filter(|i| **i).count() as f64 / steps;
        (Some(rmse), Some(incl))
    } else {
        (None, None)
    };
    ReplayMetrics {
        estimator: trace.name.clone(),
        rmse,
        inclusion_pct,
        avg_radius,
        avg_step_time,
    }
}

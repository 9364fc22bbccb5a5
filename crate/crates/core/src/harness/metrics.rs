//! Metric computation over trial traces.

use serde::{Deserialize, Serialize};

use super::run::TrialResult;

/// 95% quantile of the χ² distribution with 2 degrees of freedom,
/// defining the EKF confidence ellipsoid in the 2-D state space.
pub const CHI2_2_95: f64 = 5.991464547107979;

/// One table row per estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// Data-shift label, e.g. `shift-none`.
    pub scenario: String,
    pub estimator: String,
    /// Root-mean-square error per state dimension over all steps and
    /// trials.
    pub rmse: Vec<f64>,
    /// Percentage of steps whose set estimate contained the true state.
    pub inclusion_pct: f64,
    /// Percentage of trials whose set estimates contained the true state
    /// at every step of the horizon.
    pub joint_inclusion_pct: f64,
    /// Mean set-estimate box radius per state dimension.
    pub avg_radius: Vec<f64>,
    /// Mean wall-clock seconds per filter step.
    pub avg_step_time: f64,
}

/// Aggregates successful trials into one row per estimator, in first-seen
/// estimator order.
pub fn compute_metrics(scenario: &str, trials: &[TrialResult]) -> Vec<MetricsRow> {
    let mut names: Vec<String> = Vec::new();
    for t in trials.iter().filter(|t| t.error.is_none()) {
        for e in &t.estimators {
            if !names.contains(&e.name) {
                names.push(e.name.clone());
            }
        }
    }

    names
        .into_iter()
        .map(|name| {
            let mut sq_err: Vec<f64> = Vec::new();
            let mut radius_sum: Vec<f64> = Vec::new();
            let mut steps = 0usize;
            let mut included_steps = 0usize;
            let mut rollouts = 0usize;
            let mut included_rollouts = 0usize;
            let mut time_sum = 0.0;
            for trial in trials.iter().filter(|t| t.error.is_none()) {
                let Some(trace) = trial.estimators.iter().find(|e| e.name == name) else {
                    continue;
                };
                rollouts += 1;
                if trace.included.iter().all(|i| *i) {
                    included_rollouts += 1;
                }
                for t in 0..trace.points.len() {
                    let point = &trace.points[t];
                    let truth = &trial.truth[t];
                    if sq_err.is_empty() {
                        sq_err = vec![0.0; point.len()];
                        radius_sum = vec![0.0; point.len()];
                    }
                    for j in 0..point.len() {
                        sq_err[j] += (point[j] - truth[j]).powi(2);
                        radius_sum[j] += trace.radii[t][j];
                    }
                    steps += 1;
                    if trace.included[t] {
                        included_steps += 1;
                    }
                    time_sum += trace.seconds[t];
                }
            }
            let n = steps.max(1) as f64;
            MetricsRow {
                scenario: scenario.to_string(),
                estimator: name,
                rmse: sq_err.iter().map(|s| (s / n).sqrt()).collect(),
                inclusion_pct: 100.0 * included_steps as f64 / n,
                joint_inclusion_pct: 100.0 * included_rollouts as f64 / rollouts.max(1) as f64,
                avg_radius: radius_sum.iter().map(|r| r / n).collect(),
                avg_step_time: time_sum / n,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::run::EstimatorTrace;
    use super::*;
    use approx::assert_relative_eq;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn trial(id: usize, points: Vec<Vec<f64>>, truth: Vec<Vec<f64>>, included: Vec<bool>) -> TrialResult {
        let steps = points.len();
        TrialResult {
            trial_id: id,
            seed: 0,
            start_index: 0,
            rep: id,
            truth,
            measurements: vec![vec![0.0; 4]; steps],
            estimators: vec![EstimatorTrace {
                name: "gp-zkf".into(),
                points,
                radii: vec![vec![1.0, 1.0]; steps],
                included,
                seconds: vec![0.001; steps],
            }],
            error: None,
        }
    }

    #[test]
    fn chi2_constant_matches_distribution() {
        let q = ChiSquared::new(2.0).unwrap().inverse_cdf(0.95);
        assert_relative_eq!(CHI2_2_95, q, epsilon = 1e-9);
    }

    #[test]
    fn exact_estimates_give_zero_rmse_and_full_inclusion() {
        let pts = vec![vec![0.5, -0.5], vec![0.2, 0.1]];
        let t = trial(0, pts.clone(), pts, vec![true, true]);
        let rows = compute_metrics("shift-none", &[t]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rmse, vec![0.0, 0.0]);
        assert_eq!(rows[0].inclusion_pct, 100.0);
        assert_eq!(rows[0].joint_inclusion_pct, 100.0);
        assert_eq!(rows[0].avg_radius, vec![1.0, 1.0]);
    }

    #[test]
    fn rmse_matches_independent_recomputation() {
        let points = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 3.0]];
        let truth = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]];
        let t = trial(0, points.clone(), truth.clone(), vec![true, false, true]);
        let rows = compute_metrics("shift-both", &[t]);
        // independent one-liner over the raw rows
        for j in 0..2 {
            let expect = (points
                .iter()
                .zip(&truth)
                .map(|(p, x)| (p[j] - x[j]).powi(2))
                .sum::<f64>()
                / 3.0)
                .sqrt();
            assert_relative_eq!(rows[0].rmse[j], expect);
        }
        assert_relative_eq!(rows[0].inclusion_pct, 200.0 / 3.0);
        assert_eq!(rows[0].joint_inclusion_pct, 0.0);
    }

    #[test]
    fn joint_inclusion_counts_whole_rollouts() {
        let pts = vec![vec![0.0, 0.0]; 2];
        let a = trial(0, pts.clone(), pts.clone(), vec![true, true]);
        let b = trial(1, pts.clone(), pts.clone(), vec![true, false]);
        let rows = compute_metrics("shift-none", &[a, b]);
        assert_relative_eq!(rows[0].inclusion_pct, 75.0);
        assert_relative_eq!(rows[0].joint_inclusion_pct, 50.0);
    }

    #[test]
    fn failed_trials_are_skipped() {
        let pts = vec![vec![0.0, 0.0]; 2];
        let good = trial(0, pts.clone(), pts.clone(), vec![true, true]);
        let mut bad = trial(1, pts.clone(), pts, vec![false, false]);
        bad.error = Some("boom".into());
        let rows = compute_metrics("shift-none", &[good, bad]);
        assert_eq!(rows[0].inclusion_pct, 100.0);
    }
}

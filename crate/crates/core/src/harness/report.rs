//! Report emission: summary tables (CSV + JSON), plot-ready per-step
//! data, and the raw archive.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::run::Archive;

/// Writes into `out_dir`:
/// - `metrics.csv` — one row per (scenario, estimator); columns
///   `scenario, estimator, rmse_<j>…, inclusion_pct, joint_inclusion_pct,
///   radius_<j>…, avg_step_time_ms`
/// - `metrics.json` — the same rows as JSON
/// - `steps.csv` — per-step plot data; columns `trial, estimator, t,
///   truth_<j>…, center_<j>…, radius_<j>…, included`
/// - `archive.json` — the full digest-stamped archive
pub fn emit_report(archive: &Archive, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let n_x = archive
        .trials
        .iter()
        .find_map(|t| t.truth.first().map(|x| x.len()))
        .unwrap_or(2);

    // metrics.csv
    let mut w = csv::Writer::from_path(out_dir.join("metrics.csv"))?;
    let mut header = vec!["scenario".to_string(), "estimator".to_string()];
    for j in 1..=n_x {
        header.push(format!("rmse_{j}"));
    }
    header.push("inclusion_pct".into());
    header.push("joint_inclusion_pct".into());
    for j in 1..=n_x {
        header.push(format!("radius_{j}"));
    }
    header.push("avg_step_time_ms".into());
    w.write_record(&header)?;
    for row in &archive.metrics {
        let mut rec = vec![row.scenario.clone(), row.estimator.clone()];
        for v in &row.rmse {
            rec.push(v.to_string());
        }
        rec.push(row.inclusion_pct.to_string());
        rec.push(row.joint_inclusion_pct.to_string());
        for v in &row.avg_radius {
            rec.push(v.to_string());
        }
        rec.push((row.avg_step_time * 1e3).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(Error::Io)?;

    // metrics.json
    fs::write(
        out_dir.join("metrics.json"),
        serde_json::to_vec_pretty(&archive.metrics)?,
    )?;

    // steps.csv
    let mut w = csv::Writer::from_path(out_dir.join("steps.csv"))?;
    let mut header = vec!["trial".to_string(), "estimator".to_string(), "t".to_string()];
    for j in 1..=n_x {
        header.push(format!("truth_{j}"));
    }
    for j in 1..=n_x {
        header.push(format!("center_{j}"));
    }
    for j in 1..=n_x {
        header.push(format!("radius_{j}"));
    }
    header.push("included".into());
    w.write_record(&header)?;
    for trial in archive.trials.iter().filter(|t| t.error.is_none()) {
        for est in &trial.estimators {
            for t in 0..est.points.len() {
                let mut rec = vec![
                    trial.trial_id.to_string(),
                    est.name.clone(),
                    (t + 1).to_string(),
                ];
                for v in &trial.truth[t] {
                    rec.push(v.to_string());
                }
                for v in &est.points[t] {
                    rec.push(v.to_string());
                }
                for v in &est.radii[t] {
                    rec.push(v.to_string());
                }
                rec.push(est.included[t].to_string());
                w.write_record(&rec)?;
            }
        }
    }
    w.flush().map_err(Error::Io)?;

    // archive.json
    fs::write(
        out_dir.join("archive.json"),
        serde_json::to_vec_pretty(archive)?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{ExperimentConfig, MetricsRow};
    use super::*;

    fn empty_archive() -> Archive {
        Archive {
            schema_version: super::super::ARCHIVE_SCHEMA_VERSION,
            config: ExperimentConfig::default(),
            trials: vec![],
            metrics: vec![],
            digest: String::new(),
        }
    }

    #[test]
    fn empty_metrics_yield_header_only_csv() {
        let dir = std::env::temp_dir().join("gpzkf-report-empty");
        emit_report(&empty_archive(), &dir).unwrap();
        let text = fs::read_to_string(dir.join("metrics.csv")).unwrap();
        assert_eq!(
            text.trim(),
            "scenario,estimator,rmse_1,rmse_2,inclusion_pct,joint_inclusion_pct,radius_1,radius_2,avg_step_time_ms"
        );
        let steps = fs::read_to_string(dir.join("steps.csv")).unwrap();
        assert!(steps.starts_with("trial,estimator,t,truth_1"));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn metrics_json_round_trips() {
        let mut archive = empty_archive();
        archive.metrics.push(MetricsRow {
            scenario: "shift-none".into(),
            estimator: "gp-zkf".into(),
            rmse: vec![0.1, 0.2],
            inclusion_pct: 92.0,
            joint_inclusion_pct: 85.0,
            avg_radius: vec![0.4, 0.6],
            avg_step_time: 0.004,
        });
        let dir = std::env::temp_dir().join("gpzkf-report-roundtrip");
        emit_report(&archive, &dir).unwrap();
        let text = fs::read_to_string(dir.join("metrics.json")).unwrap();
        let back: Vec<MetricsRow> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, archive.metrics);
        fs::remove_dir_all(&dir).ok();
    }
}

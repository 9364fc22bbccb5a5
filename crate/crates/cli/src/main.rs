//! Command-line front end for the GP-ZKF estimation experiments.
//!
//! Subcommands:
//! - `simulate` — emit the training datasets and replayable trial CSVs
//! - `run`      — run the configured experiment and write the report
//! - `replay`   — run the estimators over an external measurement CSV
//! - `report`   — re-derive the report tables from a results archive
//!
//! Exit codes: 0 on success, 1 when trials or checks fail, 2 on
//! configuration errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DVector;

use gpzkf::error::Error;
use gpzkf::harness::{
    build_system, emit_report, initial_estimate, replay_offline, run_experiment,
    simulate_trial_data, theorem2_check, write_trial_csv, Archive, ExperimentConfig,
    TrialResult,
};
use gpzkf::pendulum::{generate_scenario, ShiftVariant};

const THEOREM2_TOLERANCE: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "gpzkf", about = "Zonotopic state estimation with learned models")]
struct Cli {
    /// Experiment configuration (TOML); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Replace the configured seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config's out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Data-shift variant: both, dynamics, observation, or none.
    #[arg(long, global = true)]
    scenario: Option<String>,

    /// Comma-separated estimator list (gp-zkf, gp-ekf).
    #[arg(long, global = true, value_delimiter = ',')]
    estimators: Option<Vec<String>>,

    /// Also verify that the relaxed zonotopic filter matches the GP-EKF.
    #[arg(long, global = true)]
    theorem2_check: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the training datasets and one replayable CSV per trial.
    Simulate,
    /// Run the experiment and emit the report into the output directory.
    Run,
    /// Replay the estimators over a measurement CSV.
    Replay {
        /// CSV with columns t, u_1, y_1..y_4 and optional truth_1..truth_2.
        file: PathBuf,
        /// Evaluation start index selecting the initial estimate center.
        #[arg(long, default_value_t = 0)]
        start_index: usize,
    },
    /// Re-derive the report tables from an existing archive.json.
    Report {
        /// Archive produced by `run`.
        archive: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::InvalidParameter(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(name) = &cli.scenario {
        cfg.scenario.variant = match name.as_str() {
            "both" => ShiftVariant::Both,
            "dynamics" => ShiftVariant::Dynamics,
            "observation" => ShiftVariant::Observation,
            "none" => ShiftVariant::None,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown scenario {other:?}; expected both, dynamics, observation, or none"
                )))
            }
        };
    }
    if let Some(list) = &cli.estimators {
        cfg.estimators = list.clone();
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Simulate => simulate(cli),
        Command::Run => run(cli),
        Command::Replay { file, start_index } => replay(cli, file, *start_index),
        Command::Report { archive } => report(cli, archive),
    }
}

fn simulate(cli: &Cli) -> Result<ExitCode, Error> {
    let cfg = load_config(cli)?;
    let dir = out_dir(&cfg);
    fs::create_dir_all(&dir)?;
    for &seed in &cfg.seeds {
        let data = generate_scenario(&cfg.pendulum, &cfg.scenario, seed)?;
        let suffix = if cfg.seeds.len() == 1 {
            String::new()
        } else {
            format!("_seed{seed}")
        };
        let g_path = dir.join(format!("train_g{suffix}.csv"));
        let h_path = dir.join(format!("train_h{suffix}.csv"));
        data.train_g.write_csv(fs::File::create(&g_path)?)?;
        data.train_h.write_csv(fs::File::create(&h_path)?)?;
        println!(
            "seed {seed}: {} dynamics rows -> {}, {} observation rows -> {}",
            data.train_g.len(),
            g_path.display(),
            data.train_h.len(),
            h_path.display()
        );

        let mut trial_id = 0;
        for (start_index, start) in data.test_starts.iter().enumerate() {
            for rep in 0..cfg.scenario.reps {
                let (truth, measurements) =
                    simulate_trial_data(&cfg, seed, trial_id, start)?;
                let trial = TrialResult {
                    trial_id,
                    seed,
                    start_index,
                    rep,
                    truth: truth.iter().map(|x| x.as_slice().to_vec()).collect(),
                    measurements: measurements
                        .iter()
                        .map(|y| y.as_slice().to_vec())
                        .collect(),
                    estimators: Vec::new(),
                    error: None,
                };
                let path = dir.join(format!("trial_{trial_id:03}{suffix}.csv"));
                write_trial_csv(&trial, fs::File::create(&path)?)?;
                trial_id += 1;
            }
        }
        println!("seed {seed}: {trial_id} trial CSVs written to {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let cfg = load_config(cli)?;
    let dir = out_dir(&cfg);
    let mut failed = false;

    if cli.theorem2_check {
        let rep = theorem2_check(&cfg, THEOREM2_TOLERANCE)?;
        println!(
            "theorem2-check: {} (center {:.3e}, shape {:.3e}, gain {:.3e} over {} steps, tol {:.0e})",
            if rep.passed { "pass" } else { "FAIL" },
            rep.max_center_dev,
            rep.max_shape_dev,
            rep.max_gain_dev,
            rep.steps,
            rep.tolerance,
        );
        failed |= !rep.passed;
    }

    let archive = run_experiment(&cfg)?;
    let trial_failures = archive
        .trials
        .iter()
        .filter(|t| t.error.is_some())
        .count();
    emit_report(&archive, &dir)?;
    for row in &archive.metrics {
        println!(
            "{} {}: rmse [{}], inclusion {:.1}% per-step / {:.1}% joint, radius [{}], {:.2} ms/step",
            row.scenario,
            row.estimator,
            join(&row.rmse),
            row.inclusion_pct,
            row.joint_inclusion_pct,
            join(&row.avg_radius),
            row.avg_step_time * 1e3,
        );
    }
    println!(
        "{} trials ({} failed), digest {}, report in {}",
        archive.trials.len(),
        trial_failures,
        &archive.digest[..16],
        dir.display()
    );
    if trial_failures > 0 {
        for t in archive.trials.iter().filter(|t| t.error.is_some()) {
            eprintln!("trial {} failed: {}", t.trial_id, t.error.as_deref().unwrap_or(""));
        }
        failed = true;
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn replay(cli: &Cli, file: &PathBuf, start_index: usize) -> Result<ExitCode, Error> {
    let cfg = load_config(cli)?;
    let seed = cfg.seeds[0];
    let data = generate_scenario(&cfg.pendulum, &cfg.scenario, seed)?;
    let start: &DVector<f64> = data.test_starts.get(start_index).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "start index {start_index} out of range (have {})",
            data.test_starts.len()
        ))
    })?;
    let built = build_system(&cfg, &data, seed)?;
    let init = initial_estimate(&cfg, start)?;
    let outcome = replay_offline(fs::File::open(file)?, &cfg, &built, &init)?;
    for m in &outcome.metrics {
        match (&m.rmse, m.inclusion_pct) {
            (Some(rmse), Some(pct)) => println!(
                "{}: rmse [{}], inclusion {:.1}%, radius [{}], {:.2} ms/step",
                m.estimator,
                join(rmse),
                pct,
                join(&m.avg_radius),
                m.avg_step_time * 1e3,
            ),
            _ => println!(
                "{}: radius [{}], {:.2} ms/step (no truth columns)",
                m.estimator,
                join(&m.avg_radius),
                m.avg_step_time * 1e3,
            ),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report(cli: &Cli, path: &PathBuf) -> Result<ExitCode, Error> {
    let cfg_out = cli.out.clone();
    let text = fs::read_to_string(path)?;
    let archive: Archive = serde_json::from_str(&text)?;
    let expected = archive.deterministic_digest();
    if archive.digest != expected {
        eprintln!("warning: archive digest mismatch (stored {}, recomputed {})",
            &archive.digest[..16.min(archive.digest.len())],
            &expected[..16]);
    }
    let dir = cfg_out
        .or_else(|| archive.config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    emit_report(&archive, &dir)?;
    println!(
        "report for {} trials re-derived into {}",
        archive.trials.len(),
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(", ")
}

//! Experiment orchestration: configuration, GP training, parallel trial
//! execution, metrics, offline replay, and report emission.
//!
//! All randomness flows from the master seeds in the configuration; a run
//! is bit-identical for identical config and seeds (timing excepted, and
//! therefore excluded from the archive digest).

mod build;
mod config;
mod metrics;
mod replay;
mod report;
mod run;
mod theorem2;

pub use build::{build_system, initial_estimate, BuiltSystem};
pub use config::{BudgetOverride, ExperimentConfig};
pub use metrics::{compute_metrics, MetricsRow, CHI2_2_95};
pub use replay::{replay_offline, ReplayMetrics, ReplayOutcome};
pub use report::emit_report;
pub use run::{
    describe_set, make_estimators, run_experiment, simulate_trial_data, write_trial_csv,
    Archive, EstimatorTrace, TrialResult, ARCHIVE_SCHEMA_VERSION,
};
pub use theorem2::{theorem2_check, Theorem2Report};

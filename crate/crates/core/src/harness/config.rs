//! Experiment configuration (TOML on disk).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pendulum::{PendulumParams, ShiftScenario};
use crate::uncertainty::BudgetSplit;

/// Explicit probability-budget override; must satisfy the product
/// condition against `total_delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetOverride {
    pub delta_g: f64,
    pub delta_h: f64,
    pub delta_w: f64,
    pub delta_v: f64,
}

/// Full description of one experiment run.
///
/// TOML schema (all keys optional unless noted):
/// ```toml
/// total_delta = 0.2
/// estimators = ["gp-zkf", "gp-ekf"]
/// seeds = [0]
/// order_cap = 20
/// optimize_hyperparameters = true
/// init_radius = [0.1, 0.1]
/// out_dir = "out"
///
/// [pendulum]      # physical constants, see PendulumParams
/// [scenario]      # variant, rollout counts, horizon
/// [budget]        # delta_g/delta_h/delta_w/delta_v override
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub pendulum: PendulumParams,
    pub scenario: ShiftScenario,
    /// Total consistency budget δ.
    pub total_delta: f64,
    pub budget: Option<BudgetOverride>,
    /// Confidence-scaling overrides (replace the derived β).
    pub beta_g: Option<f64>,
    pub beta_h: Option<f64>,
    /// Subset of {"gp-zkf", "gp-ekf"}.
    pub estimators: Vec<String>,
    pub seeds: Vec<u64>,
    /// Generator cap; defaults to `10 · n_x`.
    pub order_cap: Option<usize>,
    /// Maximize the marginal likelihood when fitting the GPs; a fixed
    /// data-driven kernel is used otherwise.
    pub optimize_hyperparameters: bool,
    /// Half-width of the initial estimate box around each start.
    pub init_radius: [f64; 2],
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pendulum: PendulumParams::default(),
            scenario: ShiftScenario::default(),
            total_delta: 0.2,
            budget: None,
            beta_g: None,
            beta_h: None,
            estimators: vec!["gp-zkf".into(), "gp-ekf".into()],
            seeds: vec![0],
            order_cap: None,
            optimize_hyperparameters: true,
            init_radius: [0.1, 0.1],
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pendulum
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        self.scenario
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if !(0.0..1.0).contains(&self.total_delta) || self.total_delta <= 0.0 {
            return Err(Error::InvalidConfig("total_delta must lie in (0, 1)".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("estimator list must be non-empty".into()));
        }
        for e in &self.estimators {
            if e != "gp-zkf" && e != "gp-ekf" {
                return Err(Error::InvalidConfig(format!("unknown estimator {e:?}")));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list must be non-empty".into()));
        }
        if self.init_radius.iter().any(|r| *r <= 0.0) {
            return Err(Error::InvalidConfig("init_radius must be positive".into()));
        }
        // surface budget violations at load time, not mid-run
        self.budget_split()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// The budget split, honoring the optional override.
    pub fn budget_split(&self) -> Result<BudgetSplit<f64>> {
        match &self.budget {
            Some(b) => BudgetSplit::with_values(
                self.total_delta,
                b.delta_g,
                b.delta_h,
                b.delta_w,
                b.delta_v,
            ),
            None => crate::uncertainty::split_budget(self.total_delta),
        }
    }
}

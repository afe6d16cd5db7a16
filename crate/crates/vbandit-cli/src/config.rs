//! Experiment configuration: one TOML document per experiment.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use vbandit::env::{check_budget_range, BudgetSpec};
use vbandit::policy::{PolicyKind, PolicySpec};
use vbandit::sim::Estimator;

use crate::CliError;

/// Environment variable overriding the output directory.
pub const ENV_OUTPUT_DIR: &str = "VBANDIT_OUTPUT_DIR";
/// Environment variable overriding the worker count.
pub const ENV_WORKERS: &str = "VBANDIT_WORKERS";

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    pub replications: usize,
    /// Horizon grid, strictly increasing.
    pub horizons: Vec<usize>,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    pub instance: InstanceConfig,
    pub budget: BudgetSpec,
    pub policy: PolicyConfig,
    /// Stage-two mode: rerun the horizon grid per budget exponent
    /// `V_T = c * T^beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_true")]
    pub record_trajectory: bool,
}

fn default_estimator() -> Estimator {
    Estimator::MeanGap
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub kind: InstanceKind,
    /// Arm count; worst_case only (the sinusoidal families are two-armed).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Sinusoidal,
    Compressed,
    WorstCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(CliError::config)?;
        let config: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
            .map_err(CliError::config)?;
        Ok(config)
    }

    pub fn arms(&self) -> usize {
        match self.instance.kind {
            InstanceKind::Sinusoidal | InstanceKind::Compressed => 2,
            InstanceKind::WorstCase => self.instance.arms.unwrap_or(2),
        }
    }

    pub fn policy_spec(&self) -> PolicySpec {
        PolicySpec {
            kind: self.policy.kind,
            batch_size: self.policy.batch_size,
            gamma: self.policy.gamma,
        }
    }

    /// Structural validation shared by both commands. `stage_two` relaxes
    /// the budget admissibility ceiling: growing-budget sweeps resolve
    /// `V_T = c * T^beta` above `T/K` at large beta by design.
    fn validate(&self, stage_two: bool) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::config(anyhow!(msg)));
        if self.name.is_empty() {
            return fail("field `name` must not be empty".into());
        }
        if self.replications < 1 {
            return fail(format!(
                "field `replications` must be at least 1, got {}",
                self.replications
            ));
        }
        if self.horizons.is_empty() {
            return fail("field `horizons` must not be empty".into());
        }
        if !self.horizons.windows(2).all(|w| w[0] < w[1]) {
            return fail(format!(
                "field `horizons` must be strictly increasing, got {:?}",
                self.horizons
            ));
        }
        if self.instance.kind != InstanceKind::WorstCase {
            if let Some(arms) = self.instance.arms {
                if arms != 2 {
                    return fail(format!(
                        "field `instance.arms`: {:?} instances are two-armed, got {arms}",
                        self.instance.kind
                    ));
                }
            }
        } else if self.arms() < 2 {
            return fail(format!(
                "field `instance.arms` must be at least 2, got {}",
                self.arms()
            ));
        }
        if let Some(workers) = self.workers {
            if workers < 1 {
                return fail("field `workers` must be at least 1".into());
            }
        }
        self.budget
            .validate()
            .map_err(|e| CliError::config(anyhow!("field `budget`: {e}")))?;

        let arms = self.arms();
        if stage_two {
            let grid = self.beta_grid.as_ref().ok_or_else(|| {
                CliError::config(anyhow!("field `beta_grid` is required by sweep-beta"))
            })?;
            if grid.is_empty() {
                return fail("field `beta_grid` must not be empty".into());
            }
            for &beta in grid {
                if !(0.0..1.0).contains(&beta) {
                    return fail(format!(
                        "field `beta_grid`: beta must lie in [0, 1), got {beta}"
                    ));
                }
            }
            let coefficient = self.budget_coefficient();
            for &beta in grid {
                for &horizon in &self.horizons {
                    let budget = coefficient * (horizon as f64).powf(beta);
                    if budget < 1.0 / arms as f64 {
                        return fail(format!(
                            "field `budget`: resolved V_T = {budget} below 1/K at T = {horizon}, beta = {beta}"
                        ));
                    }
                }
            }
        } else {
            if self.beta_grid.is_some() {
                return fail(
                    "field `beta_grid` is only valid for sweep-beta; use `vbandit sweep-beta`"
                        .into(),
                );
            }
            for &horizon in &self.horizons {
                let budget = self.budget.resolve(horizon);
                check_budget_range(budget, arms, horizon)
                    .map_err(|e| CliError::config(anyhow!("field `budget`: {e}")))?;
            }
        }

        // Policy overrides must resolve against every grid point.
        for &horizon in &self.horizons {
            let budget = self.budget.resolve(horizon);
            self.policy_spec()
                .resolve(horizon, arms, budget.max(f64::MIN_POSITIVE))
                .map_err(|e| CliError::config(anyhow!("field `policy`: {e}")))?;
        }
        Ok(())
    }

    pub fn validate_stage_one(&self) -> Result<(), CliError> {
        self.validate(false)
    }

    pub fn validate_stage_two(&self) -> Result<(), CliError> {
        self.validate(true)
    }

    /// The coefficient `c` in sweep budgets `V_T = c * T^beta`.
    pub fn budget_coefficient(&self) -> f64 {
        match self.budget {
            BudgetSpec::Constant { value } => value,
            BudgetSpec::Power { coefficient, .. } => coefficient,
        }
    }
}

/// Settings resolved from flags, environment, and config, in that
/// precedence order.
#[derive(Debug, Clone)]
pub struct ResolvedSettings {
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub master_seed: u64,
}

pub fn resolve_settings(
    config: &ExperimentConfig,
    flag_workers: Option<usize>,
    flag_seed: Option<u64>,
) -> Result<ResolvedSettings, CliError> {
    let output_dir = match std::env::var_os(ENV_OUTPUT_DIR) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config.output_dir.clone(),
    };
    let env_workers = match std::env::var(ENV_WORKERS) {
        Ok(raw) if !raw.is_empty() => Some(raw.parse::<usize>().map_err(|_| {
            CliError::config(anyhow!(
                "{ENV_WORKERS} must be a positive integer, got {raw:?}"
            ))
        })?),
        _ => None,
    };
    let workers = flag_workers.or(env_workers).or(config.workers);
    if workers == Some(0) {
        return Err(CliError::config(anyhow!("workers must be at least 1")));
    }
    Ok(ResolvedSettings {
        output_dir,
        workers,
        master_seed: flag_seed.unwrap_or(config.master_seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const DESK: &str = r#"
name = "sinusoidal-desk"
output_dir = "out/sinusoidal-desk"
master_seed = 20240601
replications = 1000
horizons = [2000, 4000, 8000, 16000]
estimator = "mean_gap"

[instance]
kind = "sinusoidal"

[budget]
kind = "constant"
value = 3.0

[policy]
kind = "rexp3"
"#;

    #[test]
    fn parses_and_validates_the_desk_config() {
        let config: ExperimentConfig = toml::from_str(DESK).unwrap();
        config.validate_stage_one().unwrap();
        assert_eq!(config.arms(), 2);
        assert_eq!(config.horizons.len(), 4);
    }

    #[test]
    fn round_trips_through_toml() {
        let config: ExperimentConfig = toml::from_str(DESK).unwrap();
        let text = toml::to_string(&config).unwrap();
        let again: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, again);
    }

    #[test]
    fn rejects_budget_equal_to_horizon() {
        let mut config: ExperimentConfig = toml::from_str(DESK).unwrap();
        config.horizons = vec![1000];
        config.budget = BudgetSpec::Constant { value: 1000.0 };
        let err = config.validate_stage_one().unwrap_err();
        assert!(format!("{err:#}").contains("budget"));
    }

    #[test]
    fn rejects_decreasing_horizons() {
        let mut config: ExperimentConfig = toml::from_str(DESK).unwrap();
        config.horizons = vec![4000, 2000];
        assert!(config.validate_stage_one().is_err());
    }

    #[test]
    fn rejects_extra_arms_on_two_armed_instances() {
        let mut config: ExperimentConfig = toml::from_str(DESK).unwrap();
        config.instance.arms = Some(3);
        let err = config.validate_stage_one().unwrap_err();
        assert!(format!("{err:#}").contains("arms"));
    }

    #[test]
    fn stage_two_requires_valid_betas() {
        let mut config: ExperimentConfig = toml::from_str(DESK).unwrap();
        config.beta_grid = Some(vec![0.0, 1.0]);
        let err = config.validate_stage_two().unwrap_err();
        assert!(format!("{err:#}").contains("beta"));
        config.beta_grid = Some(vec![0.0, 0.9]);
        config.validate_stage_two().unwrap();
    }

    #[test]
    fn stage_one_rejects_beta_grid() {
        let mut config: ExperimentConfig = toml::from_str(DESK).unwrap();
        config.beta_grid = Some(vec![0.2]);
        assert!(config.validate_stage_one().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = format!("{DESK}\nunknown_knob = 3\n");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
    }
}

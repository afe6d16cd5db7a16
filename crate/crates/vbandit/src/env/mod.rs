//! Non-stationary reward environments under a variation budget.
//!
//! A reward environment is a matrix of expected rewards `mu[k][t]` in [0, 1]
//! whose total variation across epochs,
//! `sum_{t=1}^{T-1} max_k |mu[k][t] - mu[k][t+1]|`, must stay within a budget
//! `V_T`. This module builds such paths (sinusoidal, compressed-sinusoidal,
//! and a randomized piecewise-constant worst case), validates the budget,
//! derives the dynamic oracle, and samples Bernoulli rewards.
//!
//! Epoch and arm indices are 1-based in every public signature, matching the
//! conventions of the formulas the generators implement; storage is 0-based
//! internally.

pub(crate) mod generators;
mod instance;
mod path;

pub use instance::{BanditInstance, Generator, RewardNoise, WorstCaseConfig};
pub use path::{MeanRewardPath, OraclePoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used by [`MeanRewardPath::check_budget`] to absorb
/// floating-point summation error. The budget constraint is analytic, so the
/// tolerance must stay far below any real violation.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid mean-reward path: {0}")]
    InvalidPath(String),
    #[error(
        "budget out of range: V_T = {budget} outside [1/K, T/K] = [{lo}, {hi}] for K = {arms}, T = {horizon}"
    )]
    BudgetOutOfRange {
        budget: f64,
        arms: usize,
        horizon: usize,
        lo: f64,
        hi: f64,
    },
    #[error(
        "budget violation: generated {generator:?} path has total variation {total_variation} > V_T = {budget}"
    )]
    BudgetViolation {
        generator: Generator,
        total_variation: f64,
        budget: f64,
    },
    #[error("arm index {arm} out of range 1..={arms}")]
    ArmOutOfRange { arm: usize, arms: usize },
    #[error("epoch {epoch} out of range 1..={horizon}")]
    EpochOutOfRange { epoch: usize, horizon: usize },
    #[error("invalid budget spec: {0}")]
    InvalidBudgetSpec(String),
}

/// How the variation budget scales with the horizon.
///
/// `constant` fixes `V_T = value`; `power` resolves `V_T = coefficient * T^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BudgetSpec {
    Constant { value: f64 },
    Power { coefficient: f64, exponent: f64 },
}

impl BudgetSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        match *self {
            BudgetSpec::Constant { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(EnvError::InvalidBudgetSpec(format!(
                        "budget value must be a positive real, got {value}"
                    )));
                }
            }
            BudgetSpec::Power {
                coefficient,
                exponent,
            } => {
                if !(coefficient > 0.0 && coefficient.is_finite()) {
                    return Err(EnvError::InvalidBudgetSpec(format!(
                        "budget coefficient must be a positive real, got {coefficient}"
                    )));
                }
                if !(0.0..1.0).contains(&exponent) {
                    return Err(EnvError::InvalidBudgetSpec(format!(
                        "budget exponent must lie in [0, 1), got {exponent}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The budget this spec resolves to at horizon `T`.
    pub fn resolve(&self, horizon: usize) -> f64 {
        match *self {
            BudgetSpec::Constant { value } => value,
            BudgetSpec::Power {
                coefficient,
                exponent,
            } => coefficient * (horizon as f64).powf(exponent),
        }
    }
}

/// Checks the admissibility range `V_T in [1/K, T/K]` assumed by the regret
/// bounds and by the worst-case construction.
pub fn check_budget_range(budget: f64, arms: usize, horizon: usize) -> Result<(), EnvError> {
    let lo = 1.0 / arms as f64;
    let hi = horizon as f64 / arms as f64;
    if !budget.is_finite() || budget < lo || budget > hi {
        return Err(EnvError::BudgetOutOfRange {
            budget,
            arms,
            horizon,
            lo,
            hi,
        });
    }
    Ok(())
}

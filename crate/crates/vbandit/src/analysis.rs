//! Regret-growth analysis: log-log slope fits and theoretical envelopes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::check_budget_range;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("regret must be strictly positive for a log-log fit, got {0}")]
    NonPositiveRegret(f64),
    #[error("duplicate horizon {0} in fit input")]
    DuplicateHorizon(f64),
    #[error("horizon must be strictly positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error(transparent)]
    Range(#[from] crate::env::EnvError),
}

/// Ordinary least squares of `ln(regret)` on `ln(T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-log fit; 1 for an exact
    /// power law.
    pub r_squared: f64,
    /// The fitted `(ln T, ln regret)` pairs.
    pub points: Vec<(f64, f64)>,
    pub residual_max: f64,
}

fn ols(points: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut residual_max: f64 = 0.0;
    for &(x, y) in points {
        let r = y - (intercept + slope * x);
        ss_res += r * r;
        residual_max = residual_max.max(r.abs());
    }
    // All-equal y values fit exactly: r^2 = 1 by convention.
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    (slope, intercept, r_squared, residual_max)
}

/// Fits `ln(regret)` against `ln(T)` over `(T, regret)` pairs (natural
/// logarithms).
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit, AnalysisError> {
    if points.len() < 2 {
        return Err(AnalysisError::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let mut log_points = Vec::with_capacity(points.len());
    for &(horizon, regret) in points {
        if horizon <= 0.0 || horizon.is_nan() {
            return Err(AnalysisError::NonPositiveHorizon(horizon));
        }
        if regret <= 0.0 || regret.is_nan() {
            return Err(AnalysisError::NonPositiveRegret(regret));
        }
        log_points.push((horizon.ln(), regret.ln()));
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i].0 == points[j].0 {
                return Err(AnalysisError::DuplicateHorizon(points[i].0));
            }
        }
    }
    let (slope, intercept, r_squared, residual_max) = ols(&log_points);
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        points: log_points,
        residual_max,
    })
}

/// Minimax lower-envelope value `(1/8) (K V_T)^(1/3) T^(2/3)`, without the
/// admissibility check. This is a worst-case envelope over the whole budget
/// class, not a per-instance bound.
pub fn lower_bound_value(horizon: usize, arms: usize, budget: f64) -> f64 {
    0.125 * (arms as f64 * budget).powf(1.0 / 3.0) * (horizon as f64).powf(2.0 / 3.0)
}

/// Tuned-policy upper-envelope value
/// `(6 sqrt(e-1) + 4) (K ln K * V_T)^(1/3) T^(2/3)`, without the
/// admissibility check.
pub fn upper_bound_value(horizon: usize, arms: usize, budget: f64) -> f64 {
    let k = arms as f64;
    (6.0 * (std::f64::consts::E - 1.0).sqrt() + 4.0)
        * (k * k.ln() * budget).powf(1.0 / 3.0)
        * (horizon as f64).powf(2.0 / 3.0)
}

/// [`lower_bound_value`] with the `V_T in [1/K, T/K]` range check the bound
/// assumes.
pub fn theory_lower_bound(horizon: usize, arms: usize, budget: f64) -> Result<f64, AnalysisError> {
    check_budget_range(budget, arms, horizon)?;
    Ok(lower_bound_value(horizon, arms, budget))
}

/// [`upper_bound_value`] with the same range check.
pub fn theory_upper_bound(horizon: usize, arms: usize, budget: f64) -> Result<f64, AnalysisError> {
    check_budget_range(budget, arms, horizon)?;
    Ok(upper_bound_value(horizon, arms, budget))
}

/// Both envelope values for one `(T, K, V_T)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundEnvelope {
    pub lower: f64,
    pub upper: f64,
    pub horizon: usize,
    pub arms: usize,
    pub budget: f64,
}

impl BoundEnvelope {
    pub fn new(horizon: usize, arms: usize, budget: f64) -> Result<Self, AnalysisError> {
        Ok(Self {
            lower: theory_lower_bound(horizon, arms, budget)?,
            upper: theory_upper_bound(horizon, arms, budget)?,
            horizon,
            arms,
            budget,
        })
    }
}

/// One row of the growing-budget slope table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub beta: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Fits one log-log slope per budget exponent from final regrets over a
/// horizon grid; rows come back sorted by ascending beta.
pub fn stage_two_slope_table(
    final_regrets_by_beta: &[(f64, Vec<(f64, f64)>)],
) -> Result<Vec<SlopeRow>, AnalysisError> {
    let mut rows = Vec::with_capacity(final_regrets_by_beta.len());
    for (beta, points) in final_regrets_by_beta {
        let fit = loglog_slope(points)?;
        rows.push(SlopeRow {
            beta: *beta,
            slope: fit.slope,
            r_squared: fit.r_squared,
            n_points: points.len(),
        });
    }
    rows.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    Ok(rows)
}

/// OLS slope of estimated slope against beta (linear, not log). For exact
/// minimax-rate rows `slope(beta) = (2 + beta)/3` this is 1/3; the growth
/// of measured slopes with the budget exponent estimates the same quantity.
pub fn slope_of_slopes(rows: &[(f64, f64)]) -> Result<f64, AnalysisError> {
    if rows.len() < 2 {
        return Err(AnalysisError::TooFewPoints {
            needed: 2,
            got: rows.len(),
        });
    }
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            if rows[i].0 == rows[j].0 {
                return Err(AnalysisError::DuplicateHorizon(rows[i].0));
            }
        }
    }
    let (slope, _, _, _) = ols(rows);
    Ok(slope)
}

/// CSV serialization of a slope table: `beta,slope,r_squared,n_points`.
pub fn slope_table_csv(rows: &[SlopeRow]) -> String {
    let mut out = String::from("beta,slope,r_squared,n_points\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{}",
            row.beta, row.slope, row.r_squared, row.n_points
        );
    }
    out
}

/// Human-readable slope table.
pub fn slope_table_text(rows: &[SlopeRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>6}  {:>15}", "beta", "estimated slope");
    let _ = writeln!(out, "{:->6}  {:->15}", "", "");
    for row in rows {
        let _ = writeln!(out, "{:>6.1}  {:>15.4}", row.beta, row.slope);
    }
    out
}

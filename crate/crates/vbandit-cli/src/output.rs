//! Output-file writers and the grid CSV reader.
//!
//! Every file embeds the resolved run description: CSVs carry it as a
//! leading `# config: {...}` comment line, JSON files as a `config` field.
//! Floats in CSVs use 17 significant digits so `analyze` reproduces the
//! recorded fits bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::json;

use vbandit::analysis::SlopeFit;
use vbandit::policy::PolicyTuning;
use vbandit::sim::RegretCurve;

use crate::config::ExperimentConfig;
use crate::CliError;

/// One experiment's fully resolved description, embedded into every output.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedRun {
    pub config: ConfigEcho,
    /// Budget exponent of this grid; set by sweep-beta subruns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Per-horizon resolution: budget and policy tuning actually used.
    pub grid: Vec<GridResolution>,
}

/// The experiment-identifying part of the config, echoed into outputs.
/// Execution details (output directory, worker count) are excluded: they
/// cannot change any result, and the same experiment must produce the same
/// bytes wherever and however it runs.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub name: String,
    pub master_seed: u64,
    pub replications: usize,
    pub horizons: Vec<usize>,
    pub estimator: vbandit::sim::Estimator,
    pub instance: crate::config::InstanceConfig,
    pub budget: vbandit::env::BudgetSpec,
    pub policy: crate::config::PolicyConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<Vec<f64>>,
    pub record_trajectory: bool,
}

impl From<&ExperimentConfig> for ConfigEcho {
    fn from(config: &ExperimentConfig) -> Self {
        ConfigEcho {
            name: config.name.clone(),
            master_seed: config.master_seed,
            replications: config.replications,
            horizons: config.horizons.clone(),
            estimator: config.estimator,
            instance: config.instance.clone(),
            budget: config.budget.clone(),
            policy: config.policy.clone(),
            beta_grid: config.beta_grid.clone(),
            record_trajectory: config.record_trajectory,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridResolution {
    pub horizon: usize,
    pub budget: f64,
    pub batch_size: Option<usize>,
    pub gamma: Option<f64>,
}

impl ResolvedRun {
    fn comment_line(&self) -> String {
        let config = serde_json::to_string(self).expect("config serializes");
        format!("# config: {config}\n")
    }

    pub fn as_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Extracts the embedded config from a CSV's `# config:` comment line.
pub fn embedded_config(csv_text: &str) -> Option<serde_json::Value> {
    csv_text
        .lines()
        .find_map(|line| line.strip_prefix("# config: "))
        .and_then(|json| serde_json::from_str(json).ok())
}

/// One row of the grid-level results CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub horizon: f64,
    pub final_regret: f64,
    pub std_err: f64,
    pub theory_lower: f64,
    pub theory_upper: f64,
}

pub const GRID_HEADER: &str = "T,final_regret,std_err,theory_lower,theory_upper";

pub fn write_grid_csv(path: &Path, run: &ResolvedRun, rows: &[GridRow]) -> Result<(), CliError> {
    let mut out = run.comment_line();
    out.push_str(GRID_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            row.horizon as u64, row.final_regret, row.std_err, row.theory_lower, row.theory_upper
        );
    }
    write_file(path, &out)
}

/// Reads a grid CSV, skipping `#` comments; errors name the line number.
pub fn read_grid_csv(path: &Path) -> Result<Vec<GridRow>, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading grid CSV {}", path.display()))
        .map_err(CliError::runtime)?;
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !seen_header {
            if trimmed != GRID_HEADER {
                return Err(CliError::runtime(anyhow!(
                    "{}: line {lineno}: expected header `{GRID_HEADER}`, got `{trimmed}`",
                    path.display()
                )));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::runtime(anyhow!(
                "{}: line {lineno}: expected 5 fields, got {}",
                path.display(),
                fields.len()
            )));
        }
        let parse = |idx: usize, name: &str| -> Result<f64, CliError> {
            fields[idx].parse::<f64>().map_err(|_| {
                CliError::runtime(anyhow!(
                    "{}: line {lineno}: field `{name}` is not a number: {:?}",
                    path.display(),
                    fields[idx]
                ))
            })
        };
        rows.push(GridRow {
            horizon: parse(0, "T")?,
            final_regret: parse(1, "final_regret")?,
            std_err: parse(2, "std_err")?,
            theory_lower: parse(3, "theory_lower")?,
            theory_upper: parse(4, "theory_upper")?,
        });
    }
    if !seen_header {
        return Err(CliError::runtime(anyhow!(
            "{}: no header line found",
            path.display()
        )));
    }
    Ok(rows)
}

pub fn write_trajectory_csv(
    path: &Path,
    run: &ResolvedRun,
    curve: &RegretCurve,
) -> Result<(), CliError> {
    let mut out = run.comment_line();
    out.push_str(&curve.to_csv());
    write_file(path, &out)
}

/// Per-plan summary JSON. `wall_time_seconds` is the one field that varies
/// between reruns of the same config; everything else is deterministic.
#[allow(clippy::too_many_arguments)]
pub fn write_summary_json(
    path: &Path,
    run: &ResolvedRun,
    horizon: usize,
    arms: usize,
    budget: f64,
    tuning: &PolicyTuning,
    curve: &RegretCurve,
    wall_time_seconds: f64,
) -> Result<(), CliError> {
    let summary = json!({
        "T": horizon,
        "K": arms,
        "V_T": budget,
        "policy": tuning.kind.as_str(),
        "delta_T": tuning.batch_size,
        "gamma": tuning.gamma,
        "R": curve.replications,
        "master_seed": run.config.master_seed,
        "estimator": curve.estimator,
        "final_regret": curve.final_regret,
        "final_regret_stderr": curve.final_regret_stderr,
        "final_regret_mean_gap": curve.final_regret_mean_gap,
        "final_regret_mean_gap_stderr": curve.final_regret_mean_gap_stderr,
        "final_regret_realized": curve.final_regret_realized,
        "final_regret_realized_stderr": curve.final_regret_realized_stderr,
        "wall_time_seconds": wall_time_seconds,
        "config": serde_json::to_value(run).expect("config serializes"),
    });
    write_json(path, &summary)
}

/// The slope report written by `run`/`sweep-beta` and recomputed by
/// `analyze`; built from the same numbers and config it is byte-identical.
pub fn slope_report(fit: &SlopeFit, config: Option<&serde_json::Value>) -> serde_json::Value {
    let mut report = json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "residual_max": fit.residual_max,
        "n_points": fit.points.len(),
        "points_log": fit.points,
    });
    if let Some(config) = config {
        report["config"] = config.clone();
    }
    report
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .context("serializing JSON")
        .map_err(CliError::runtime)?;
    text.push('\n');
    write_file(path, &text)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .map_err(CliError::runtime)?;
    }
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::runtime)
}

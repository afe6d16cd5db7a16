//! The `analyze` command: refit slopes from stored grid CSVs.

use std::path::{Path, PathBuf};

use anyhow::anyhow;

use vbandit::analysis::loglog_slope;

use crate::output::{embedded_config, read_grid_csv, slope_report, write_json};
use crate::CliError;

pub fn cmd_analyze(input: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let rows = read_grid_csv(input)?;
    // Carry the recorded config through so the report matches the one
    // written at run time byte for byte.
    let config = std::fs::read_to_string(input)
        .ok()
        .and_then(|text| embedded_config(&text));
    if rows.is_empty() {
        return Err(CliError::runtime(anyhow!(
            "{}: no data rows to fit",
            input.display()
        )));
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.horizon, r.final_regret)).collect();
    let fit = loglog_slope(&points)
        .map_err(|e| CliError::runtime(anyhow!("{}: {e}", input.display())))?;

    println!("n_points={}", fit.points.len());
    println!("slope={:.16e}", fit.slope);
    println!("intercept={:.16e}", fit.intercept);
    println!("r_squared={:.16e}", fit.r_squared);
    println!("residual_max={:.16e}", fit.residual_max);

    let out_path: PathBuf = match output {
        Some(path) => path.to_path_buf(),
        None => {
            let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("grid");
            input.with_file_name(format!("{stem}_slope.json"))
        }
    };
    write_json(&out_path, &slope_report(&fit, config.as_ref()))?;
    println!("wrote {}", out_path.display());
    Ok(())
}

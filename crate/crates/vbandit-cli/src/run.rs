//! The `run` and `sweep-beta` commands.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};

use vbandit::analysis::{
    loglog_slope, lower_bound_value, slope_of_slopes, slope_table_csv, slope_table_text,
    stage_two_slope_table, upper_bound_value,
};
use vbandit::sim::{replicate, InstanceSpec, ReplicationPlan};

use crate::config::{resolve_settings, ExperimentConfig, InstanceKind};
use crate::output::{self, GridResolution, GridRow, ResolvedRun};
use crate::CliError;

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

fn load_and_resolve(
    config_path: &Path,
    overrides: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(config_path)?;
    let settings = resolve_settings(&config, overrides.workers, overrides.seed)?;
    config.master_seed = settings.master_seed;
    config.workers = settings.workers;
    config.output_dir = settings.output_dir;
    Ok(config)
}

fn init_worker_pool(workers: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing worker pool")
            .map_err(CliError::runtime)?;
    }
    Ok(())
}

fn instance_spec(config: &ExperimentConfig) -> InstanceSpec {
    match config.instance.kind {
        InstanceKind::Sinusoidal => InstanceSpec::Sinusoidal,
        InstanceKind::Compressed => InstanceSpec::Compressed,
        InstanceKind::WorstCase => InstanceSpec::WorstCase {
            arms: config.arms(),
            batch_override: None,
        },
    }
}

/// Resolved budget for one grid point; `beta` overrides the config's
/// exponent in sweep mode.
fn resolve_budget(config: &ExperimentConfig, horizon: usize, beta: Option<f64>) -> f64 {
    match beta {
        Some(beta) => config.budget_coefficient() * (horizon as f64).powf(beta),
        None => config.budget.resolve(horizon),
    }
}

fn resolved_run(config: &ExperimentConfig, beta: Option<f64>) -> Result<ResolvedRun, CliError> {
    let arms = config.arms();
    let grid = config
        .horizons
        .iter()
        .map(|&horizon| {
            let budget = resolve_budget(config, horizon, beta);
            let tuning = config
                .policy_spec()
                .resolve(horizon, arms, budget)
                .map_err(|e| CliError::config(anyhow!("field `policy`: {e}")))?;
            Ok(GridResolution {
                horizon,
                budget,
                batch_size: tuning.batch_size,
                gamma: tuning.gamma,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(ResolvedRun {
        config: config.into(),
        beta,
        grid,
    })
}

/// Executes the horizon grid once, writing per-horizon trajectories and
/// summaries plus the grid CSV and slope report into `dir`. Returns the
/// `(T, final_regret)` pairs.
fn run_grid(
    config: &ExperimentConfig,
    beta: Option<f64>,
    dir: &Path,
) -> Result<Vec<(f64, f64)>, CliError> {
    let arms = config.arms();
    let run = resolved_run(config, beta)?;
    let mut rows = Vec::with_capacity(config.horizons.len());
    let mut finals = Vec::with_capacity(config.horizons.len());

    for point in &run.grid {
        let plan = ReplicationPlan {
            instance: instance_spec(config),
            horizon: point.horizon,
            budget: point.budget,
            policy: config.policy_spec(),
            replications: config.replications,
            master_seed: config.master_seed,
            estimator: config.estimator,
            record_trajectory: config.record_trajectory,
            trajectory_stride: None,
        };
        let started = Instant::now();
        let curve = replicate(&plan)
            .with_context(|| format!("simulating T = {}", point.horizon))
            .map_err(CliError::runtime)?;
        let wall = started.elapsed().as_secs_f64();

        println!(
            "{}T={} V_T={:.4} R={} final_regret={:.3} (+-{:.3}) [{:.1}s]",
            beta.map(|b| format!("beta={b:.2} ")).unwrap_or_default(),
            point.horizon,
            point.budget,
            curve.replications,
            curve.final_regret,
            curve.final_regret_stderr,
            wall,
        );

        if config.record_trajectory {
            output::write_trajectory_csv(
                &dir.join(format!("trajectory_T{}.csv", point.horizon)),
                &run,
                &curve,
            )?;
        }
        let tuning = config
            .policy_spec()
            .resolve(point.horizon, arms, point.budget)
            .map_err(|e| CliError::config(anyhow!("field `policy`: {e}")))?;
        output::write_summary_json(
            &dir.join(format!("summary_T{}.json", point.horizon)),
            &run,
            point.horizon,
            arms,
            point.budget,
            &tuning,
            &curve,
            wall,
        )?;

        rows.push(GridRow {
            horizon: point.horizon as f64,
            final_regret: curve.final_regret,
            std_err: curve.final_regret_stderr,
            theory_lower: lower_bound_value(point.horizon, arms, point.budget),
            theory_upper: upper_bound_value(point.horizon, arms, point.budget),
        });
        finals.push((point.horizon as f64, curve.final_regret));
    }

    output::write_grid_csv(&dir.join("grid.csv"), &run, &rows)?;
    let run_value = run.as_value();
    match loglog_slope(&finals) {
        Ok(fit) => {
            println!(
                "{}slope={:.4} r_squared={:.5}",
                beta.map(|b| format!("beta={b:.2} ")).unwrap_or_default(),
                fit.slope,
                fit.r_squared
            );
            output::write_json(
                &dir.join("slope.json"),
                &output::slope_report(&fit, Some(&run_value)),
            )?;
        }
        Err(err) => {
            output::write_json(
                &dir.join("slope.json"),
                &serde_json::json!({
                    "slope": null,
                    "note": format!("no fit: {err}"),
                    "config": run_value,
                }),
            )?;
        }
    }
    Ok(finals)
}

pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let config = load_and_resolve(config_path, overrides)?;
    config.validate_stage_one()?;
    init_worker_pool(config.workers)?;
    let dir = config.output_dir.clone();
    run_grid(&config, None, &dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_sweep_beta(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let config = load_and_resolve(config_path, overrides)?;
    config.validate_stage_two()?;
    init_worker_pool(config.workers)?;
    let dir = config.output_dir.clone();
    let betas = config.beta_grid.clone().expect("validated beta grid");

    let mut by_beta = Vec::with_capacity(betas.len());
    for &beta in &betas {
        let sub = dir.join(format!("beta_{beta:.2}"));
        let finals = run_grid(&config, Some(beta), &sub)?;
        by_beta.push((beta, finals));
    }

    let rows = stage_two_slope_table(&by_beta)
        .context("fitting per-beta slopes")
        .map_err(CliError::runtime)?;
    let echo = serde_json::to_value(output::ConfigEcho::from(&config)).expect("config serializes");
    let table_csv = format!(
        "# config: {}\n{}",
        serde_json::to_string(&echo).expect("config serializes"),
        slope_table_csv(&rows)
    );
    output::write_file(&dir.join("slope_table.csv"), &table_csv)?;
    output::write_file(&dir.join("slope_table.txt"), &slope_table_text(&rows))?;
    print!("{}", slope_table_text(&rows));

    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.beta, r.slope)).collect();
    let report = match slope_of_slopes(&pairs) {
        Ok(slope) => {
            println!("slope_of_slopes={slope:.4}");
            serde_json::json!({
                "slope_of_slopes": slope,
                "rows": rows,
                "config": echo,
            })
        }
        Err(err) => {
            println!("slope_of_slopes=n/a ({err})");
            serde_json::json!({
                "slope_of_slopes": null,
                "note": format!("n/a: {err}"),
                "rows": rows,
                "config": echo,
            })
        }
    };
    output::write_json(&dir.join("slopes.json"), &report)?;
    println!("wrote {}", dir.display());
    Ok(())
}

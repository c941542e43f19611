//! Config-driven Monte Carlo runs for distributed physical-layer
//! authentication: scenario files, a parallel trial runner, curve CSV
//! output and a quick self-check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod runner;
pub mod selfcheck;

use std::path::Path;

use thiserror::Error;

pub use config::{load_config, ConfigError, RawConfig, ResolvedConfig};
pub use output::{parse_csv, render_csv, write_atomic, Row};
pub use runner::estimate_parallel;
pub use selfcheck::{run_selfcheck, SelfcheckOptions, SelfcheckReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("simulation failed: {0}")]
    Core(#[from] distauth_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for usage and config errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Resolves, simulates and renders a scenario without touching the disk.
pub fn simulate(cfg: &ResolvedConfig, workers: usize) -> Result<String, CliError> {
    let sim = distauth_core::simkit::Simulator::new(cfg.scenario.clone())?;
    let mut curves = estimate_parallel(&sim, workers)?;
    for c in &mut curves {
        c.config_digest = cfg.digest.clone();
    }
    render_csv(cfg, &curves)
}

/// The `run` subcommand: load, simulate and write the CSV atomically.
pub fn cmd_run(
    config: &Path,
    out: &Path,
    overrides: &[String],
    seed: Option<u64>,
    workers: usize,
) -> Result<ResolvedConfig, CliError> {
    let cfg = load_config(config, overrides, seed)?;
    let text = simulate(&cfg, workers)?;
    write_atomic(out, &text)?;
    Ok(cfg)
}

/// Rows of the `thresholds` table: `(alpha, dof, delta)`.
pub fn threshold_table(alphas: &[f64], dof: u32) -> Result<Vec<(f64, u32, f64)>, CliError> {
    if dof == 0 {
        return Err(CliError::Usage("degrees of freedom must be positive".into()));
    }
    alphas
        .iter()
        .map(|a| {
            distauth_core::detect::solve_threshold(*a, dof)
                .map(|d| (*a, dof, d))
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

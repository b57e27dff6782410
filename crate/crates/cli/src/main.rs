use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use liqsolve::experiments::{run_experiments, Outcome};
use liqsolve::ExperimentConfig;
use serde_json::json;
use sha2::{Digest, Sha256};

/// Optimal liquidation with a dark pool: PDE solve, certificates and
/// Monte-Carlo verification.
#[derive(Parser)]
#[command(name = "liqsolve", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Directory for CSV artifacts and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Seed for both the simulation and the bound estimates.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte-Carlo paths for both the simulation and the bounds.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Uniform time steps of the PDE grid.
    #[arg(long, global = true)]
    grid_nt: Option<usize>,
    /// Space nodes per axis (comma separated, or one value for every axis).
    #[arg(long, global = true, value_delimiter = ',')]
    grid_ny: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the named experiments, or every experiment listed in the config.
    Run { config: PathBuf, experiments: Vec<String> },
    /// Solve for the value surface and write it as CSV.
    Solve { config: PathBuf },
    /// Simulate the optimal strategy and compare its cost with the value.
    Simulate { config: PathBuf },
    /// Check the surface against Monte-Carlo a priori bounds.
    VerifyBounds { config: PathBuf },
    /// Contraction constants and observed Picard ratios.
    Certificate { config: PathBuf },
    /// Rate at which the leading term approximates the value near the deadline.
    Asymptotics { config: PathBuf },
    /// Optimal strategy against TWAP and primary-only baselines.
    CompareStrategies { config: PathBuf },
    /// Expected residual cost along the optimal strategy.
    ResidualCost { config: PathBuf },
}

impl Command {
    fn target(&self) -> (&Path, Vec<String>) {
        let (config, name) = match self {
            Command::Run { config, experiments } => return (config.as_path(), experiments.clone()),
            Command::Solve { config } => (config, "solve"),
            Command::Simulate { config } => (config, "simulate"),
            Command::VerifyBounds { config } => (config, "verify-bounds"),
            Command::Certificate { config } => (config, "certificate"),
            Command::Asymptotics { config } => (config, "asymptotics"),
            Command::CompareStrategies { config } => (config, "compare-strategies"),
            Command::ResidualCost { config } => (config, "residual-cost"),
        };
        (config.as_path(), vec![name.to_string()])
    }
}

fn apply(config: &mut ExperimentConfig, o: &Overrides) {
    if let Some(seed) = o.seed {
        config.simulation.seed = seed;
        config.bounds.seed = seed;
    }
    if let Some(paths) = o.paths {
        config.simulation.n_paths = paths;
        config.bounds.n_paths = paths;
    }
    if let Some(nt) = o.grid_nt {
        config.grid.nt = nt;
    }
    if let Some(ny) = &o.grid_ny {
        config.grid.ny = ny.clone();
    }
}

fn manifest(config_path: &Path, bytes: &[u8], config: &ExperimentConfig, outcomes: &[Outcome], out_dir: &Path) -> serde_json::Value {
    let experiments: Vec<_> = outcomes
        .iter()
        .map(|o| {
            let files: Vec<String> = o
                .files
                .iter()
                .map(|f| f.strip_prefix(out_dir).unwrap_or(f).display().to_string())
                .collect();
            json!({ "name": o.name, "passed": o.passed, "summary": o.summary, "files": files })
        })
        .collect();
    json!({
        "tool": "liqsolve",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config_path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "config_sha256": hex::encode(Sha256::digest(bytes)),
        "simulation_seed": config.simulation.seed,
        "bounds_seed": config.bounds.seed,
        "simulation_paths": config.simulation.n_paths,
        "bounds_paths": config.bounds.n_paths,
        "grid": { "nt": config.grid.nt, "ny": config.grid.ny },
        "experiments": experiments,
    })
}

fn run(cli: Cli) -> Result<bool> {
    let (config_path, names) = cli.command.target();
    let bytes = std::fs::read(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    let text = String::from_utf8(bytes.clone()).context("config is not UTF-8")?;
    let mut config = ExperimentConfig::from_toml_str(&text).with_context(|| format!("parsing {}", config_path.display()))?;
    apply(&mut config, &cli.overrides);
    let out_dir = &cli.overrides.out_dir;
    let outcomes = run_experiments(config.clone(), &names, out_dir)?;
    for o in &outcomes {
        println!("{:<20} {}  {}", o.name, if o.passed { "PASS" } else { "FAIL" }, o.summary);
    }
    let manifest = manifest(config_path, &bytes, &config, &outcomes, out_dir);
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

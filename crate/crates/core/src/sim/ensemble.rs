use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::LiquidationProblem;
use crate::pde::ValueSurface;
use crate::rng::mean_and_se;

use super::strategy::{run_strategy, uniform_mesh, CostBreakdown, PathStreams, Strategy};

pub const DEFAULT_STEPS: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSettings {
    pub n_paths: usize,
    pub seed: u64,
    pub steps: usize,
    /// Times at which factor and position are kept for each path.
    pub checkpoints: Vec<f64>,
}

/// Factor state and position at a recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub time: f64,
    pub y: Vec<f64>,
    pub x: f64,
}

/// What an ensemble keeps of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub cost: CostBreakdown,
    pub unliquidated: f64,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub n_paths: usize,
    pub mean: f64,
    pub se: f64,
    /// Mean `|X_{T-}|` left for the forced execution.
    pub mean_unliquidated: f64,
    /// Mean forced-execution cost over mean total cost.
    pub forced_share: f64,
    pub dark_mean: f64,
    pub dark_intensity_mean: f64,
    /// Standard error of the per-path difference of the two dark-pool accountings.
    pub dark_gap_se: f64,
}

/// Runs `n_paths` independent paths; path `i` always uses stream `i`, and the
/// summaries come back in path order.
pub fn simulate_ensemble(
    problem: &LiquidationProblem,
    strategy: &Strategy,
    surface: Option<&ValueSurface>,
    settings: &EnsembleSettings,
) -> Result<Vec<PathSummary>> {
    if settings.steps == 0 {
        return Err(Error::invalid("simulation needs at least one step"));
    }
    let t0 = problem.initial.t0;
    let mesh = uniform_mesh(t0, problem.horizon, settings.steps);
    let mut nodes = Vec::with_capacity(settings.checkpoints.len());
    for &s in &settings.checkpoints {
        if !(s >= t0 && s < problem.horizon) {
            return Err(Error::invalid(format!("checkpoint {s} outside [{t0}, {})", problem.horizon)));
        }
        // Last node not after s (with a little slack for mesh roundoff).
        nodes.push(mesh.partition_point(|&t| t <= s + 1e-12 * problem.horizon) - 1);
    }
    (0..settings.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut streams = PathStreams::new(settings.seed, i as u64);
            let path = run_strategy(problem, strategy, surface, &mesh, &mut streams)?;
            let checkpoints = settings
                .checkpoints
                .iter()
                .zip(&nodes)
                .map(|(&time, &k)| Checkpoint {
                    time,
                    y: path.factor.at(k).to_vec(),
                    x: path.position[k],
                })
                .collect();
            Ok(PathSummary {
                cost: path.cost,
                unliquidated: path.unliquidated,
                checkpoints,
            })
        })
        .collect()
}

pub fn summarize(paths: &[PathSummary]) -> CostEstimate {
    let col = |f: &dyn Fn(&PathSummary) -> f64| paths.iter().map(f).collect::<Vec<f64>>();
    let (mean, se) = mean_and_se(&col(&|p| p.cost.total()));
    let (forced, _) = mean_and_se(&col(&|p| p.cost.forced));
    let (unliq, _) = mean_and_se(&col(&|p| p.unliquidated.abs()));
    let (dark, _) = mean_and_se(&col(&|p| p.cost.dark));
    let (dark_int, _) = mean_and_se(&col(&|p| p.cost.dark_intensity));
    let (_, gap_se) = mean_and_se(&col(&|p| p.cost.dark - p.cost.dark_intensity));
    CostEstimate {
        n_paths: paths.len(),
        mean,
        se,
        mean_unliquidated: unliq,
        forced_share: if mean > 0.0 { forced / mean } else { 0.0 },
        dark_mean: dark,
        dark_intensity_mean: dark_int,
        dark_gap_se: gap_se,
    }
}

/// Ensemble statistics of the strategy's cost with the default mesh.
pub fn estimate_cost(
    problem: &LiquidationProblem,
    strategy: &Strategy,
    surface: Option<&ValueSurface>,
    n_paths: usize,
    seed: u64,
) -> Result<CostEstimate> {
    estimate_cost_with(problem, strategy, surface, n_paths, seed, DEFAULT_STEPS)
}

pub fn estimate_cost_with(
    problem: &LiquidationProblem,
    strategy: &Strategy,
    surface: Option<&ValueSurface>,
    n_paths: usize,
    seed: u64,
    steps: usize,
) -> Result<CostEstimate> {
    if n_paths < 2 {
        return Err(Error::invalid("cost estimation needs at least two paths"));
    }
    let settings = EnsembleSettings {
        n_paths,
        seed,
        steps,
        checkpoints: Vec::new(),
    };
    Ok(summarize(&simulate_ensemble(problem, strategy, surface, &settings)?))
}

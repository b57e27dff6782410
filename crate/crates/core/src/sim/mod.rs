//! Monte-Carlo simulation of the factor, the dark-pool clock and the
//! controlled position.

mod ensemble;
mod factor;
mod reduction;
mod strategy;

pub use ensemble::{
    estimate_cost, estimate_cost_with, simulate_ensemble, summarize, Checkpoint, CostEstimate, EnsembleSettings, PathSummary,
    DEFAULT_STEPS,
};
pub use factor::{sample_fill_times, simulate_factor, FactorPath};
pub use reduction::{monotone_reduction, ControlRecord};
pub use strategy::{run_strategy, uniform_mesh, CostBreakdown, Fill, PathResult, PathStreams, RateTable, Strategy};

//! Optimal liquidation of a large position with a primary venue and a dark
//! pool, under factor-driven impact, adverse-selection and risk costs.
//!
//! The value function is `v(t, y) |x|^p`, where `v` solves a semilinear
//! parabolic equation that blows up at the deadline. [`pde`] removes the
//! blow-up with an asymptotic change of variables and solves the resulting
//! regular problem; [`bounds`] and [`sim`] cross-check the solution with
//! Monte-Carlo estimates that never touch the PDE discretization.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coefficient;
pub mod config;
pub mod error;
pub mod experiments;
pub mod hjb;
pub mod model;
pub mod output;
pub mod pde;
pub mod rng;
pub mod sim;

pub use coefficient::{clip_coefficient, Coefficient};
pub use config::{ExperimentConfig, GridConfig, ProblemConfig};
pub use error::{Assumption, Error, Result};
pub use hjb::{FeedbackPair, LocalCosts};
pub use model::{build_problem, CostModel, Domain, FactorModel, LiquidationProblem};

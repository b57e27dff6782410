//! Finite-difference solution of the transformed equation for `u` and the
//! reconstruction of `v`.

mod grid;
mod operator;
mod picard;
mod solver;
mod surface;

pub use grid::Grid;
pub use operator::{BandedLu, BandedMatrix, DiscreteGenerator};
pub use picard::{contraction_certificate, picard_run, semigroup_bound, ContractionCertificate, PicardRun};
pub use solver::{solve_u, solve_u_with, SolveStats, SolverSettings, TransformedSurface, DEFAULT_MIN_STEP};
pub use surface::{check_asymptotics, solve_v, solve_v_with, weighted_norm, AsymptoticsReport, ValueSurface};

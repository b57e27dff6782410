use std::fmt;

use thiserror::Error;

/// Standing assumption that a problem definition can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// p > 1.
    ExponentAboveOne,
    /// eta >= kappa0 > 0.
    ImpactFloor,
    /// gamma >= 0 and lambda >= 0.
    NonnegativeCosts,
    /// sigma sigma^T uniformly positive definite.
    Ellipticity,
    /// Coefficients bounded and Lipschitz on the truncated domain.
    BoundedLipschitz,
    /// theta >= 0, T > 0, t0 < T, y0 inside the box.
    Setup,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::ExponentAboveOne => "p > 1",
            Assumption::ImpactFloor => "eta >= kappa0 > 0",
            Assumption::NonnegativeCosts => "gamma, lambda >= 0",
            Assumption::Ellipticity => "sigma sigma^T uniformly positive definite",
            Assumption::BoundedLipschitz => "bounded Lipschitz factor coefficients",
            Assumption::Setup => "problem setup",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("assumption violated ({assumption}) at y = {witness:?}: {detail}")]
    Assumption {
        assumption: Assumption,
        witness: Vec<f64>,
        detail: String,
    },

    #[error("growth condition |u| <= t*eta violated at t = {t}, y = {y:?} (|u| = {u_abs}, t*eta = {limit})")]
    GrowthCondition {
        t: f64,
        y: Vec<f64>,
        u_abs: f64,
        limit: f64,
    },

    #[error("time step fell below {min_step} near t = {t}, y = {y:?}; widen the box or refine the grid")]
    StepUnderflow { t: f64, y: Vec<f64>, min_step: f64 },

    #[error("remaining time must be positive, got {0}")]
    Singular(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

//! Monte-Carlo estimates of the a priori bounds on `v`, their check against a
//! solved surface, and the expected residual cost along simulated strategies.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::LiquidationProblem;
use crate::pde::ValueSurface;
use crate::rng::{mean_and_se, stream, Substream};
use crate::sim::{simulate_factor, uniform_mesh, FactorPath, PathSummary};

pub const DEFAULT_PATH_STEPS: usize = 2000;

/// Relative slack on top of the three standard errors, for roundoff when
/// the bounds are deterministic and coincide with `v`.
pub const ROUNDOFF_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEstimate {
    pub t: f64,
    pub y: Vec<f64>,
    pub lower: f64,
    pub se_lower: f64,
    pub upper: f64,
    pub se_upper: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl BoundEstimate {
    /// `lower - 3 se <= value <= upper + 3 se`, up to [`ROUNDOFF_SLACK`].
    pub fn contains(&self, value: f64) -> bool {
        let slack = |b: f64| ROUNDOFF_SLACK * b.abs();
        value >= self.lower - 3.0 * self.se_lower - slack(self.lower)
            && value <= self.upper + 3.0 * self.se_upper + slack(self.upper)
    }
}

/// Lower bound `e^{-theta (T-t)} / (E int_t^T eta^{-beta} ds)^{1/beta}` and upper
/// bound `(T-t)^{-p} E int_t^T eta + (T-s)^p lambda ds`, from the same paths.
pub fn estimate_bounds(problem: &LiquidationProblem, t: f64, y: &[f64], n_paths: usize, seed: u64) -> Result<BoundEstimate> {
    estimate_bounds_with(problem, t, y, n_paths, seed, DEFAULT_PATH_STEPS)
}

pub fn estimate_bounds_with(
    problem: &LiquidationProblem,
    t: f64,
    y: &[f64],
    n_paths: usize,
    seed: u64,
    path_steps: usize,
) -> Result<BoundEstimate> {
    let horizon = problem.horizon;
    if n_paths < 2 {
        return Err(Error::invalid("bound estimation needs at least two paths"));
    }
    if !(t < horizon) || t < 0.0 {
        return Err(Error::invalid(format!("bound time {t} must lie in [0, {horizon})")));
    }
    if y.len() != problem.dim() || !problem.domain.contains(y) {
        return Err(Error::invalid(format!("state {y:?} is not inside the factor box")));
    }
    let (p, beta, theta) = (problem.p(), problem.beta(), problem.costs.theta);
    let tau = horizon - t;
    let steps = ((tau / horizon * path_steps as f64).ceil() as usize).max(1);
    let mesh = uniform_mesh(t, horizon, steps);
    let weights: Vec<f64> = mesh.iter().map(|&s| (horizon - s).powf(p)).collect();
    let ((a, se_a), (b, se_b)) = if problem.costs.is_constant() {
        // Integrands do not depend on the path: exact, zero variance.
        let path = FactorPath {
            dim: y.len(),
            states: y.repeat(mesh.len()),
        };
        let (a, b) = path_integrals(problem, &mesh, &weights, &path);
        ((a, 0.0), (b, 0.0))
    } else {
        let samples: Vec<(f64, f64)> = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, Substream::Bounds, i as u64);
                let path = simulate_factor(problem, y, &mesh, &mut rng);
                path_integrals(problem, &mesh, &weights, &path)
            })
            .collect();
        (
            mean_and_se(&samples.iter().map(|s| s.0).collect::<Vec<_>>()),
            mean_and_se(&samples.iter().map(|s| s.1).collect::<Vec<_>>()),
        )
    };
    let damp = (-theta * tau).exp();
    let g = a.powf(-1.0 / beta);
    // Delta method: g(a) = a^{-1/beta}, bias 0.5 g''(a) se^2 removed.
    let g1 = g / (beta * a);
    let g2 = g * (1.0 / beta) * (1.0 / beta + 1.0) / (a * a);
    let lower = damp * (g - 0.5 * g2 * se_a * se_a);
    let se_lower = damp * g1 * se_a;
    let scale = tau.powf(-p);
    Ok(BoundEstimate {
        t,
        y: y.to_vec(),
        lower,
        se_lower,
        upper: scale * b,
        se_upper: scale * se_b,
        n_paths,
        seed,
    })
}

/// Trapezoid sums of `eta^{-beta}` and `eta + (T-s)^p lambda` along one path.
fn path_integrals(problem: &LiquidationProblem, mesh: &[f64], weights: &[f64], path: &FactorPath) -> (f64, f64) {
    let beta = problem.beta();
    let dt = mesh[1] - mesh[0];
    let last = mesh.len() - 1;
    let mut inv = 0.0;
    let mut cost = 0.0;
    for k in 0..=last {
        let yk = path.at(k);
        let w = if k == 0 || k == last { 0.5 * dt } else { dt };
        let eta = problem.costs.eta.eval(yk);
        inv += w * eta.powf(-beta);
        cost += w * (eta + weights[k] * problem.costs.lambda.eval(yk));
    }
    (inv, cost)
}

/// Same estimate, read as bounds on the BSDE solution; the model behind that
/// reading has no dark pool.
pub fn bsde_bounds(problem: &LiquidationProblem, t: f64, y: &[f64], n_paths: usize, seed: u64) -> Result<BoundEstimate> {
    if problem.costs.theta != 0.0 {
        return Err(Error::invalid("BSDE bounds need theta = 0: that model has no passive orders"));
    }
    estimate_bounds(problem, t, y, n_paths, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeCheck {
    pub bounds: BoundEstimate,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub probes: Vec<ProbeCheck>,
    /// Indices of failing probes.
    pub violations: Vec<usize>,
}

/// Checks `lower - 3 se <= v <= upper + 3 se` at each `(t, y)` probe.
pub fn verify_surface_bounds(
    problem: &LiquidationProblem,
    surface: &ValueSurface,
    probes: &[(f64, Vec<f64>)],
    n_paths: usize,
    seed: u64,
) -> Result<BoundsReport> {
    verify_surface_bounds_with(problem, surface, probes, n_paths, seed, DEFAULT_PATH_STEPS)
}

pub fn verify_surface_bounds_with(
    problem: &LiquidationProblem,
    surface: &ValueSurface,
    probes: &[(f64, Vec<f64>)],
    n_paths: usize,
    seed: u64,
    path_steps: usize,
) -> Result<BoundsReport> {
    let mut out = Vec::with_capacity(probes.len());
    let mut violations = Vec::new();
    for (i, (t, y)) in probes.iter().enumerate() {
        if !(*t < problem.horizon) || !problem.domain.is_interior(y, 0.2) {
            return Err(Error::invalid(format!(
                "probe ({t}, {y:?}) must lie before T and at least 20% of the box width from the boundary"
            )));
        }
        let bounds = estimate_bounds_with(problem, *t, y, n_paths, seed, path_steps)?;
        let value = surface.value(*t, y)?;
        let pass = bounds.contains(value);
        if !pass {
            violations.push(i);
        }
        out.push(ProbeCheck { bounds, value, pass });
    }
    Ok(BoundsReport {
        probes: out,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCostReport {
    pub checkpoints: Vec<f64>,
    pub means: Vec<f64>,
    pub ses: Vec<f64>,
    /// Each mean is at most the previous one plus three combined standard errors.
    pub decreasing: bool,
    pub final_value: f64,
    /// Last mean over first mean (0 when both vanish).
    pub final_ratio: f64,
}

/// `E[v(s_k, Y_{s_k}) |X_{s_k}|^p]` at each checkpoint, from runs that
/// recorded those checkpoints.
pub fn residual_cost_diagnostic(
    problem: &LiquidationProblem,
    surface: &ValueSurface,
    runs: &[PathSummary],
    checkpoints: &[f64],
) -> Result<ResidualCostReport> {
    if runs.is_empty() {
        return Err(Error::invalid("residual-cost diagnostic needs at least one run"));
    }
    let p = problem.p();
    let mut means = Vec::with_capacity(checkpoints.len());
    let mut ses = Vec::with_capacity(checkpoints.len());
    for &s in checkpoints {
        if !(s < problem.horizon) {
            return Err(Error::invalid(format!("checkpoint {s} must be before T = {}", problem.horizon)));
        }
        let vals = runs
            .iter()
            .map(|r| {
                let c = r
                    .checkpoints
                    .iter()
                    .find(|c| c.time == s)
                    .ok_or_else(|| Error::invalid(format!("run carries no checkpoint at {s}")))?;
                if c.x == 0.0 {
                    return Ok(0.0);
                }
                Ok(surface.value(s, &c.y)? * c.x.abs().powf(p))
            })
            .collect::<Result<Vec<f64>>>()?;
        let (m, se) = mean_and_se(&vals);
        means.push(m);
        ses.push(se);
    }
    let decreasing = (1..means.len()).all(|k| means[k] <= means[k - 1] + 3.0 * (ses[k].powi(2) + ses[k - 1].powi(2)).sqrt() + 1e-12 * means[0].abs());
    let final_value = means.last().copied().unwrap_or(0.0);
    let first = means.first().copied().unwrap_or(0.0);
    Ok(ResidualCostReport {
        checkpoints: checkpoints.to_vec(),
        means,
        ses,
        decreasing,
        final_value,
        final_ratio: if first > 0.0 { final_value / first } else { 0.0 },
    })
}

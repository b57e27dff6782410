use crate::error::{Error, Result};
use crate::hjb::reconstruct_value;
use crate::model::LiquidationProblem;

use super::grid::Grid;
use super::solver::{solve_u_with, SolverSettings, TransformedSurface};

/// Value surface `v(t, y)` on `[0, T)`, stored as `eta` samples and the
/// correction `u` so that the blow-up at `T` is carried analytically.
#[derive(Debug, Clone)]
pub struct ValueSurface {
    pub grid: Grid,
    pub eta_samples: Vec<f64>,
    pub u_surface: TransformedSurface,
    pub horizon: f64,
    pub beta: f64,
}

pub fn solve_v(problem: &LiquidationProblem, grid: &Grid, series_tol: f64) -> Result<ValueSurface> {
    solve_v_with(
        problem,
        grid,
        &SolverSettings {
            series_tol,
            ..SolverSettings::default()
        },
    )
}

pub fn solve_v_with(problem: &LiquidationProblem, grid: &Grid, settings: &SolverSettings) -> Result<ValueSurface> {
    let u = solve_u_with(problem, grid, settings)?;
    Ok(ValueSurface::new(problem, u))
}

impl ValueSurface {
    pub fn new(problem: &LiquidationProblem, u_surface: TransformedSurface) -> Self {
        let grid = u_surface.grid.clone();
        let eta_samples = grid.nodes().iter().map(|y| problem.costs.eta.eval(y)).collect();
        ValueSurface {
            grid,
            eta_samples,
            u_surface,
            horizon: problem.horizon,
            beta: problem.beta(),
        }
    }

    /// `v(t, y)` for forward time `t < T`.
    pub fn value(&self, t: f64, y: &[f64]) -> Result<f64> {
        let tau = self.horizon - t;
        self.value_at_remaining(tau, y)
    }

    /// `v` at remaining time `tau = T - t > 0`.
    pub fn value_at_remaining(&self, tau: f64, y: &[f64]) -> Result<f64> {
        if !(tau > 0.0) {
            return Err(Error::Singular(tau));
        }
        if tau > self.horizon * (1.0 + 1e-12) {
            return Err(Error::invalid(format!("time {} lies before the start of the surface", self.horizon - tau)));
        }
        if y.len() != self.grid.dim() {
            return Err(Error::invalid(format!("state has {} components, expected {}", y.len(), self.grid.dim())));
        }
        let (j, frac) = self.time_bracket(tau);
        let (lo, hi) = (self.u_surface.row(j.saturating_sub(1)), self.u_surface.row(j));
        let (mut eta, mut u_lo, mut u_hi) = (0.0, 0.0, 0.0);
        self.grid.corners(y, |i, w| {
            eta += w * self.eta_samples[i];
            u_lo += w * lo[i];
            u_hi += w * hi[i];
        });
        let u = if j == 0 {
            // Below the first node u = O(t^2): scale the first row.
            let r = tau / self.grid.time_nodes[1];
            self.row_one(y) * r * r
        } else {
            (1.0 - frac) * u_lo + frac * u_hi
        };
        Ok(reconstruct_value(eta, tau, u, self.beta)?.max(0.0))
    }

    /// Interpolated `eta` at `y`.
    pub fn eta_at(&self, y: &[f64]) -> f64 {
        let mut eta = 0.0;
        self.grid.corners(y, |i, w| eta += w * self.eta_samples[i]);
        eta
    }

    /// `(j, w)` with `u(tau) = (1 - w) u_{j-1} + w u_j`; `j = 0` below the first node.
    fn time_bracket(&self, tau: f64) -> (usize, f64) {
        let nodes = &self.grid.time_nodes;
        let tau = tau.min(*nodes.last().unwrap());
        if tau < nodes[1] {
            return (0, 0.0);
        }
        let j = nodes.partition_point(|&t| t <= tau).clamp(1, nodes.len() - 1);
        let (t0, t1) = (nodes[j - 1], nodes[j]);
        (j, ((tau - t0) / (t1 - t0)).clamp(0.0, 1.0))
    }

    fn row_one(&self, y: &[f64]) -> f64 {
        let row = self.u_surface.row(1);
        let mut u = 0.0;
        self.grid.corners(y, |i, w| u += w * row[i]);
        u
    }
}

/// Rate of `sup_y |tau^(1/beta) v(T - tau, y) - eta(y)|` as `tau -> 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsReport {
    pub taus: Vec<f64>,
    pub deviations: Vec<f64>,
    /// Least-squares slope of log e against log tau; `None` when every
    /// deviation vanishes.
    pub slope: Option<f64>,
    /// `max e(tau) / tau`.
    pub max_ratio: f64,
    /// `e(tau) / tau` does not grow as tau decreases (within a factor 2).
    pub bounded: bool,
}

pub fn check_asymptotics(surface: &ValueSurface) -> Result<AsymptoticsReport> {
    let nodes = &surface.grid.time_nodes;
    let horizon = surface.horizon;
    let mut taus: Vec<f64> = Vec::new();
    for k in 0..10 {
        let target = horizon / 16.0 * 0.5f64.powi(k);
        let j = nearest(nodes, target);
        if j > 0 && !taus.contains(&nodes[j]) {
            taus.push(nodes[j]);
        }
    }
    let grid_nodes = surface.grid.nodes();
    let mut deviations = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let lead = tau.powf(1.0 / surface.beta);
        let mut e = 0.0f64;
        for (y, &eta) in grid_nodes.iter().zip(&surface.eta_samples) {
            let v = surface.value_at_remaining(tau, y)?;
            e = e.max((lead * v - eta).abs());
        }
        deviations.push(e);
    }
    let ratios: Vec<f64> = taus.iter().zip(&deviations).map(|(t, e)| e / t).collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let first = ratios.first().copied().unwrap_or(0.0);
    let bounded = ratios.iter().all(|&r| r <= 2.0 * first + 1e-12);
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .zip(&deviations)
        .filter(|(_, &e)| e > 0.0)
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    let slope = if pts.len() >= 2 { Some(ls_slope(&pts)) } else { None };
    Ok(AsymptoticsReport {
        taus,
        deviations,
        slope,
        max_ratio,
        bounded,
    })
}

fn nearest(nodes: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (j, &t) in nodes.iter().enumerate() {
        if (t - target).abs() < (nodes[best] - target).abs() {
            best = j;
        }
    }
    best
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `sup_{0 < t_j <= delta} max_i |u(t_j, y_i)| / t_j^2`.
pub fn weighted_norm(u: &TransformedSurface, delta: f64) -> Result<f64> {
    weighted_norm_values(&u.grid, &u.values, delta)
}

pub(crate) fn weighted_norm_values(grid: &Grid, values: &[f64], delta: f64) -> Result<f64> {
    if delta > grid.horizon() * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("delta {delta} exceeds the last time node {}", grid.horizon())));
    }
    let n = grid.n_space();
    let mut norm = 0.0f64;
    for (j, &t) in grid.time_nodes.iter().enumerate().skip(1) {
        if t > delta {
            break;
        }
        let row_max = values[j * n..(j + 1) * n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        norm = norm.max(row_max / (t * t));
    }
    Ok(norm)
}

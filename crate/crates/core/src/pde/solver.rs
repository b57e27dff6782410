use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hjb::{with_state, LocalCosts};
use crate::model::LiquidationProblem;

use super::grid::Grid;
use super::operator::{BandedLu, DiscreteGenerator};

/// Default floor for the adaptive step halving.
pub const DEFAULT_MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub series_tol: f64,
    pub min_step: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            series_tol: crate::hjb::DEFAULT_SERIES_TOL,
            min_step: DEFAULT_MIN_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    /// Implicit steps taken, including halved sub-steps.
    pub steps: usize,
    pub halvings: usize,
    /// Largest linear-solve residual over all steps.
    pub max_residual: f64,
}

/// Correction `u(t_j, y_i)` on the grid, time-major.
#[derive(Debug, Clone)]
pub struct TransformedSurface {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub stats: SolveStats,
}

impl TransformedSurface {
    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.grid.n_space();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.grid.n_space() + i]
    }

    /// Largest `|u|` over the grid.
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Per-node data shared by the time stepper and the Picard iteration.
pub(crate) struct Discretization {
    pub grid: Grid,
    pub generator: DiscreteGenerator,
    pub local: Vec<LocalCosts>,
    /// `L_h eta` at the nodes.
    pub l_eta: Vec<f64>,
    pub series_tol: f64,
    cache: HashMap<(u64, u64), BandedLu>,
}

impl Discretization {
    pub fn new(problem: &LiquidationProblem, grid: &Grid, series_tol: f64) -> Result<Self> {
        if !(series_tol > 0.0) {
            return Err(Error::invalid("series_tol must be positive"));
        }
        if (grid.horizon() - problem.horizon).abs() > 1e-12 * problem.horizon {
            return Err(Error::invalid(format!(
                "grid ends at {} but the horizon is {}",
                grid.horizon(),
                problem.horizon
            )));
        }
        let generator = DiscreteGenerator::new(problem, grid)?;
        let nodes = grid.nodes();
        let local: Vec<LocalCosts> = nodes.iter().map(|y| problem.costs.local(y)).collect();
        let eta: Vec<f64> = local.iter().map(|c| c.eta).collect();
        let mut l_eta = vec![0.0; eta.len()];
        generator.apply(&eta, &mut l_eta);
        Ok(Discretization {
            grid: grid.clone(),
            generator,
            local,
            l_eta,
            series_tol,
            cache: HashMap::new(),
        })
    }

    /// Factored `(1 + h shift) I - h L_h`, cached by step size.
    pub fn step_matrix(&mut self, h: f64, shift: f64) -> Result<&BandedLu> {
        // Steps of one nominal size differ in the last bits; key on 12 digits.
        let key = (quantize(h), quantize(shift));
        if !self.cache.contains_key(&key) {
            let lu = self.generator.implicit_step(h, h * shift)?;
            self.cache.insert(key, lu);
        }
        Ok(&self.cache[&key])
    }

    pub fn node_error(&self, e: Error, i: usize) -> Error {
        with_state(e, &self.grid.node(i))
    }

    /// `f` without the time-only part, at every node.
    pub fn state_terms(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, ((o, c), &ui)) in out.iter_mut().zip(&self.local).zip(u).enumerate() {
            *o = c.state_part(t, ui, self.series_tol).map_err(|e| self.node_error(e, i))?;
        }
        Ok(())
    }
}

fn quantize(x: f64) -> u64 {
    if x == 0.0 {
        return 0;
    }
    let digits = 12 - x.abs().log10().ceil() as i32;
    ((x * 10f64.powi(digits)).round() / 10f64.powi(digits)).to_bits()
}

/// Implicit method-of-lines solve of the transformed equation on the whole grid.
pub fn solve_u(problem: &LiquidationProblem, grid: &Grid, series_tol: f64) -> Result<TransformedSurface> {
    solve_u_with(
        problem,
        grid,
        &SolverSettings {
            series_tol,
            ..SolverSettings::default()
        },
    )
}

pub fn solve_u_with(problem: &LiquidationProblem, grid: &Grid, settings: &SolverSettings) -> Result<TransformedSurface> {
    let mut disc = Discretization::new(problem, grid, settings.series_tol)?;
    let n = grid.n_space();
    let mut values = Vec::with_capacity(n * grid.n_time());
    values.extend(std::iter::repeat_n(0.0, n));
    let mut stats = SolveStats::default();
    let mut u = vec![0.0; n];
    for w in grid.time_nodes.windows(2) {
        u = advance(&mut disc, &u, w[0], w[1], settings.min_step, &mut stats)?;
        values.extend_from_slice(&u);
    }
    log::debug!(
        "solved {} steps ({} halvings), max residual {:.3e}",
        stats.steps,
        stats.halvings,
        stats.max_residual
    );
    Ok(TransformedSurface {
        grid: grid.clone(),
        values,
        stats,
    })
}

/// One step from `t0` to `t1`:
/// `(1 + h theta) u1 - h L_h u1 = u0 + h [mean source + state part(t1, u0) + theta u0]`,
/// halved recursively when the growth condition fails at `t1`.
fn advance(disc: &mut Discretization, u0: &[f64], t0: f64, t1: f64, min_step: f64, stats: &mut SolveStats) -> Result<Vec<f64>> {
    let h = t1 - t0;
    let n = u0.len();
    let mut state = vec![0.0; n];
    disc.state_terms(t1, u0, &mut state)?;
    let theta = disc.local[0].theta;
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            let c = &disc.local[i];
            u0[i] + h * (c.time_source_mean(disc.l_eta[i], t0, t1) + state[i] + theta * u0[i])
        })
        .collect();
    let mut u1 = rhs.clone();
    disc.step_matrix(h, theta)?.solve(&mut u1);
    stats.steps += 1;
    let residual = disc.generator.step_residual(h, h * theta, &u1, &rhs);
    let scale = 1.0 + rhs.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    stats.max_residual = stats.max_residual.max(residual / scale);
    if residual > 1e-9 * scale {
        return Err(Error::invalid(format!("linear solve residual {residual:.3e} at t = {t1}")));
    }
    let breach = (0..n).find(|&i| u1[i].abs() > t1 * disc.local[i].eta);
    let Some(i) = breach else {
        return Ok(u1);
    };
    if 0.5 * h < min_step {
        return Err(Error::StepUnderflow {
            t: t1,
            y: disc.grid.node(i),
            min_step,
        });
    }
    stats.halvings += 1;
    let mid = t0 + 0.5 * h;
    let um = advance(disc, u0, t0, mid, min_step, stats)?;
    advance(disc, &um, mid, t1, min_step, stats)
}

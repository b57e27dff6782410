use crate::config::GridConfig;
use crate::error::{Error, Result};
use crate::model::{linspace, Boundary, LiquidationProblem};

/// Reversed-time mesh on `[0, T]` times a tensor mesh on the factor box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Strictly increasing reversed times, `time_nodes[0] == 0`.
    pub time_nodes: Vec<f64>,
    /// Node coordinates per factor axis.
    pub axes: Vec<Vec<f64>>,
    pub boundary: Boundary,
}

impl Grid {
    /// Uniform steps `T / nt`, with the first step split geometrically:
    /// extra nodes at `h r, h r^2, ..., h r^levels`.
    pub fn new(problem: &LiquidationProblem, cfg: &GridConfig) -> Result<Grid> {
        if cfg.nt == 0 {
            return Err(Error::Config("grid.nt must be positive".into()));
        }
        if !(cfg.refine_ratio > 0.0 && cfg.refine_ratio < 1.0) {
            return Err(Error::Config(format!("grid.refine_ratio must lie in (0, 1), got {}", cfg.refine_ratio)));
        }
        let d = problem.dim();
        let ny: Vec<usize> = match cfg.ny.len() {
            1 => vec![cfg.ny[0]; d],
            n if n == d => cfg.ny.clone(),
            n => return Err(Error::Config(format!("grid.ny has {n} entries for a {d}-dimensional factor"))),
        };
        let horizon = problem.horizon;
        let h = horizon / cfg.nt as f64;
        let mut time_nodes = vec![0.0];
        for level in (1..=cfg.refine_levels).rev() {
            time_nodes.push(h * cfg.refine_ratio.powi(level as i32));
        }
        for k in 1..=cfg.nt {
            time_nodes.push(if k == cfg.nt { horizon } else { h * k as f64 });
        }
        let axes = (0..d)
            .map(|k| linspace(problem.domain.lower[k], problem.domain.upper[k], ny[k]))
            .collect();
        Grid::from_parts(time_nodes, axes)
    }

    pub fn from_parts(time_nodes: Vec<f64>, axes: Vec<Vec<f64>>) -> Result<Grid> {
        if time_nodes.len() < 2 || time_nodes[0] != 0.0 {
            return Err(Error::invalid("time mesh must start at 0 and have at least two nodes"));
        }
        if time_nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("time mesh must be strictly increasing"));
        }
        if axes.is_empty() {
            return Err(Error::invalid("grid needs at least one space axis"));
        }
        for (k, ax) in axes.iter().enumerate() {
            if ax.len() < 3 {
                return Err(Error::invalid(format!("axis {k} has {} nodes, need at least 3", ax.len())));
            }
            let h = ax[1] - ax[0];
            if ax.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs() || !(w[1] > w[0])) {
                return Err(Error::invalid(format!("axis {k} must be uniform and increasing")));
            }
        }
        Ok(Grid {
            time_nodes,
            axes,
            boundary: Boundary::Reflecting,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn n_space(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn n_time(&self) -> usize {
        self.time_nodes.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let ax = &self.axes[axis];
        (ax[ax.len() - 1] - ax[0]) / (ax.len() - 1) as f64
    }

    pub fn horizon(&self) -> f64 {
        *self.time_nodes.last().unwrap()
    }

    /// Flat index -> per-axis indices (first axis fastest).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.axes
            .iter()
            .map(|ax| {
                let i = flat % ax.len();
                flat /= ax.len();
                i
            })
            .collect()
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax[i])
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.n_space()).map(|i| self.node(i)).collect()
    }

    /// Corner indices and weights for multilinear interpolation at `y`
    /// (clamped into the box). Corners with zero weight are skipped.
    pub fn interpolation_weights(&self, y: &[f64]) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(1 << self.dim());
        self.corners(y, |i, w| out.push((i, w)));
        out
    }

    /// Calls `f(index, weight)` for every corner of the cell holding `y`.
    pub(crate) fn corners(&self, y: &[f64], mut f: impl FnMut(usize, f64)) {
        let d = self.dim();
        let mut base = 0usize;
        let mut stride = 1usize;
        // Per axis: lower index offset, upper offset, weight of the upper node.
        let mut cell = [(0usize, 0usize, 0.0f64); 8];
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        let store: &mut [(usize, usize, f64)] = if d <= 8 {
            &mut cell[..d]
        } else {
            cells.resize(d, (0, 0, 0.0));
            &mut cells
        };
        for (k, ax) in self.axes.iter().enumerate() {
            let n = ax.len();
            let h = self.spacing(k);
            let s = ((y[k] - ax[0]) / h).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            base += i * stride;
            store[k] = (0, stride, s - i as f64);
            stride *= n;
        }
        for mask in 0..(1usize << d) {
            let mut idx = base;
            let mut w = 1.0;
            for (k, &(lo, hi, t)) in store.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    idx += hi;
                    w *= t;
                } else {
                    idx += lo;
                    w *= 1.0 - t;
                }
            }
            if w != 0.0 {
                f(idx, w);
            }
        }
    }
}

impl GridConfig {
    /// Halves both mesh widths: twice the time steps and twice the space intervals.
    pub fn refined(&self) -> GridConfig {
        GridConfig {
            nt: 2 * self.nt,
            ny: self.ny.iter().map(|&n| 2 * (n - 1) + 1).collect(),
            ..self.clone()
        }
    }
}

//! Discrete generator on the tensor mesh and banded LU for the implicit steps.

use crate::error::{Error, Result};
use crate::model::LiquidationProblem;

use super::grid::Grid;

/// Sparse discrete generator `L_h`: centered second differences, upwinded
/// drift, zero normal derivative through ghost-node reflection.
/// Every row sums to zero.
#[derive(Debug, Clone)]
pub struct DiscreteGenerator {
    n: usize,
    bandwidth: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl DiscreteGenerator {
    pub fn new(problem: &LiquidationProblem, grid: &Grid) -> Result<Self> {
        let d = grid.dim();
        if d != problem.dim() {
            return Err(Error::invalid(format!("grid has {d} axes, factor has dimension {}", problem.dim())));
        }
        let shape = grid.shape();
        let strides: Vec<usize> = (0..d).map(|k| shape[..k].iter().product()).collect();
        let spacing: Vec<f64> = (0..d).map(|k| grid.spacing(k)).collect();
        let n = grid.n_space();
        let mut rows = Vec::with_capacity(n);
        let mut bandwidth = 0usize;
        let mut b = vec![0.0; d];
        for flat in 0..n {
            let idx = grid.multi_index(flat);
            let y = grid.node(flat);
            let a = problem.factor.covariance_at(&y);
            problem.factor.drift_at(&y, &mut b);
            let mut row: Vec<(usize, f64)> = Vec::new();
            let add = |j: usize, w: f64, row: &mut Vec<(usize, f64)>| {
                if w == 0.0 {
                    return;
                }
                match row.iter_mut().find(|e| e.0 == j) {
                    Some(e) => e.1 += w,
                    None => row.push((j, w)),
                }
            };
            for k in 0..d {
                let h = spacing[k];
                let at_low = idx[k] == 0;
                let at_high = idx[k] == shape[k] - 1;
                let up = if at_high { flat - strides[k] } else { flat + strides[k] };
                let down = if at_low { flat + strides[k] } else { flat - strides[k] };
                let diff = 0.5 * a[k * d + k] / (h * h);
                add(up, diff, &mut row);
                add(down, diff, &mut row);
                if !(at_low || at_high) {
                    if b[k] > 0.0 {
                        add(up, b[k] / h, &mut row);
                    } else if b[k] < 0.0 {
                        add(down, -b[k] / h, &mut row);
                    }
                }
                for l in (k + 1)..d {
                    let akl = a[k * d + l];
                    let interior = idx[k] > 0 && !at_high && idx[l] > 0 && idx[l] < shape[l] - 1;
                    if akl == 0.0 || !interior {
                        continue;
                    }
                    let w = akl / (4.0 * h * spacing[l]);
                    let (sk, sl) = (strides[k], strides[l]);
                    add(flat + sk + sl, w, &mut row);
                    add(flat + sk - sl, -w, &mut row);
                    add(flat - sk + sl, -w, &mut row);
                    add(flat - sk - sl, w, &mut row);
                }
            }
            let off: f64 = row.iter().map(|e| e.1).sum();
            for e in &row {
                bandwidth = bandwidth.max(e.0.abs_diff(flat));
            }
            row.push((flat, -off));
            rows.push(row);
        }
        Ok(DiscreteGenerator { n, bandwidth, rows })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `out = L_h u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, w)| w * u[j]).sum();
        }
    }

    /// Nonnegative off-diagonal weights, so `I - h L_h` is an M-matrix.
    pub fn is_monotone(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|&(j, w)| j == i || w >= 0.0))
    }

    /// `(1 + shift) I - h L_h`, factored.
    pub fn implicit_step(&self, h: f64, shift: f64) -> Result<BandedLu> {
        let mut m = BandedMatrix::zeros(self.n, self.bandwidth);
        for (i, row) in self.rows.iter().enumerate() {
            m.add(i, i, 1.0 + shift);
            for &(j, w) in row {
                m.add(i, j, -h * w);
            }
        }
        m.factor()
    }

    /// `max_i |((1 + shift) u - h L_h u - rhs)_i|`.
    pub fn step_residual(&self, h: f64, shift: f64, u: &[f64], rhs: &[f64]) -> f64 {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let lu: f64 = row.iter().map(|&(j, w)| w * u[j]).sum();
                ((1.0 + shift) * u[i] - h * lu - rhs[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Sup-norm of the resolvent `(I - h L_h)^{-1}`.
    pub fn resolvent_norm(&self, h: f64) -> Result<f64> {
        let lu = self.implicit_step(h, 0.0)?;
        if self.is_monotone() {
            // Inverse of an M-matrix is entrywise nonnegative: the norm is max(A^{-1} 1).
            let mut ones = vec![1.0; self.n];
            lu.solve(&mut ones);
            return Ok(ones.into_iter().fold(0.0, f64::max));
        }
        let mut row_sums = vec![0.0; self.n];
        let mut col = vec![0.0; self.n];
        for j in 0..self.n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            lu.solve(&mut col);
            for (s, c) in row_sums.iter_mut().zip(&col) {
                *s += c.abs();
            }
        }
        Ok(row_sums.into_iter().fold(0.0, f64::max))
    }
}

/// Square band matrix stored row by row, `2 bw + 1` entries per row.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i.abs_diff(j) <= self.bw);
        let k = self.at(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.at(i, j)]
        }
    }

    /// Doolittle LU without pivoting; fine for the diagonally dominant
    /// implicit-step matrices.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let pivot = self.data[self.at(k, k)];
            if pivot.abs() < 1e-300 || !pivot.is_finite() {
                return Err(Error::invalid(format!("zero pivot at row {k} in implicit step")));
            }
            let end = (k + bw + 1).min(n);
            for i in (k + 1)..end {
                let ik = self.at(i, k);
                let l = self.data[ik] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[ik] = l;
                for j in (k + 1)..end {
                    let kj = self.data[self.at(k, j)];
                    let ij = self.at(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Ok(BandedLu { m: self })
    }
}

/// LU factors of a [`BandedMatrix`], unit lower triangle stored below the diagonal.
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
}

impl BandedLu {
    /// Overwrites `rhs` with the solution.
    pub fn solve(&self, rhs: &mut [f64]) {
        let (n, bw) = (self.m.n, self.m.bw);
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let mut s = rhs[i];
            for j in start..i {
                s -= self.m.data[self.m.at(i, j)] * rhs[j];
            }
            rhs[i] = s;
        }
        for i in (0..n).rev() {
            let end = (i + bw + 1).min(n);
            let mut s = rhs[i];
            for j in (i + 1)..end {
                s -= self.m.data[self.m.at(i, j)] * rhs[j];
            }
            rhs[i] = s / self.m.data[self.m.at(i, i)];
        }
    }
}

//! Fixed-point iteration of the mild-solution operator on `[0, delta]` and
//! the constants that make it a contraction.

use crate::error::{Error, Result};
use crate::model::LiquidationProblem;

use super::grid::Grid;
use super::operator::DiscreteGenerator;
use super::solver::{Discretization, SolveStats, TransformedSurface};
use super::surface::weighted_norm_values;

/// Constants `(M, R, L, delta)` for which the operator is a 1/2-contraction
/// on the ball of radius `R` in the weighted norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCertificate {
    /// Sup-norm bound of the discrete semigroup.
    pub m: f64,
    pub r: f64,
    pub l: f64,
    pub delta: f64,
    /// `R = 0`: every source vanishes and `u = 0`.
    pub degenerate: bool,
    /// Weighted-norm ratios of successive Picard differences, once observed.
    pub observed_factors: Vec<f64>,
}

impl ContractionCertificate {
    /// Certificate for a given semigroup bound `m`.
    pub fn from_bound(problem: &LiquidationProblem, m: f64) -> Self {
        let costs = &problem.costs;
        let n = costs.norms;
        let (p, beta, theta, kappa0) = (costs.p(), costs.beta(), costs.theta, costs.kappa0);
        let r = 2.0 * m * (n.l_eta_sup + n.lambda_sup + theta * n.eta_sup);
        let l = p * (2f64.powf(beta) - 1.0) / (kappa0 * kappa0) * r * n.eta_sup + theta;
        let ball = if r > 0.0 { kappa0 / r } else { f64::INFINITY };
        let lip = if l > 0.0 { 1.0 / (2.0 * m * l) } else { f64::INFINITY };
        ContractionCertificate {
            m,
            r,
            l,
            delta: ball.min(lip).min(1.0),
            degenerate: r == 0.0,
            observed_factors: Vec::new(),
        }
    }
}

/// `max(1, sup_{tau = 2^-k, k = 0..12} ||(I - tau L_h)^{-1}||_inf)`, with
/// roundoff above 1 (relative 1e-10) snapped back to 1.
pub fn semigroup_bound(problem: &LiquidationProblem, grid: &Grid) -> Result<f64> {
    let l = DiscreteGenerator::new(problem, grid)?;
    let mut m = 1.0f64;
    for k in 0..=12 {
        m = m.max(l.resolvent_norm(0.5f64.powi(k))?);
    }
    Ok(if m <= 1.0 + 1e-10 { 1.0 } else { m })
}

pub fn contraction_certificate(problem: &LiquidationProblem, grid: &Grid) -> Result<ContractionCertificate> {
    Ok(ContractionCertificate::from_bound(problem, semigroup_bound(problem, grid)?))
}

#[derive(Debug, Clone)]
pub struct PicardRun {
    /// `u_0 = 0, u_1, ..., u_n` on the grid restricted to `[0, delta]`.
    pub iterates: Vec<TransformedSurface>,
    /// `||u_{m+1} - u_m||_E`.
    pub distances: Vec<f64>,
    /// Ratios of successive distances, kept only while the denominator is
    /// above roundoff level.
    pub ratios: Vec<f64>,
    /// `||u_m||_E`.
    pub norms: Vec<f64>,
    /// Iterations whose weighted norm exceeded `R`.
    pub left_ball: Vec<usize>,
    pub radius: f64,
}

/// `u_{m+1} = Gamma(u_m)`, with Gamma's Duhamel integral realized step by step:
/// `G_{j+1} = (I - h_j L_h)^{-1} [G_j + h_j (mean source + state part(t_{j+1}, u_m(t_{j+1})))]`.
pub fn picard_run(
    problem: &LiquidationProblem,
    grid: &Grid,
    certificate: &ContractionCertificate,
    delta: f64,
    n_iter: usize,
) -> Result<PicardRun> {
    if !(delta > 0.0) || delta > certificate.delta * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "delta {delta} must lie in (0, {}] (certificate horizon)",
            certificate.delta
        )));
    }
    let keep = grid.time_nodes.partition_point(|&t| t <= delta * (1.0 + 1e-12));
    if keep < 2 {
        return Err(Error::invalid(format!("grid has no time node in (0, {delta}]")));
    }
    let sub = Grid {
        time_nodes: grid.time_nodes[..keep].to_vec(),
        ..grid.clone()
    };
    let mut disc = Discretization::new(problem, grid, crate::hjb::DEFAULT_SERIES_TOL)?;
    disc.grid = sub.clone();
    let n = sub.n_space();
    let nt = sub.n_time();
    let last = sub.time_nodes[nt - 1];

    let mut current = vec![0.0; n * nt];
    let mut iterates = vec![surface(&sub, current.clone())];
    let mut norms = vec![0.0];
    let mut distances = Vec::with_capacity(n_iter);
    let mut left_ball = Vec::new();
    let mut state = vec![0.0; n];
    for m in 1..=n_iter {
        let mut next = vec![0.0; n * nt];
        for j in 0..nt - 1 {
            let (t0, t1) = (sub.time_nodes[j], sub.time_nodes[j + 1]);
            let h = t1 - t0;
            disc.state_terms(t1, &current[(j + 1) * n..(j + 2) * n], &mut state)?;
            let mut g: Vec<f64> = (0..n)
                .map(|i| next[j * n + i] + h * (disc.local[i].time_source_mean(disc.l_eta[i], t0, t1) + state[i]))
                .collect();
            disc.step_matrix(h, 0.0)?.solve(&mut g);
            next[(j + 1) * n..(j + 2) * n].copy_from_slice(&g);
        }
        let diff: Vec<f64> = next.iter().zip(&current).map(|(a, b)| a - b).collect();
        distances.push(weighted_norm_values(&sub, &diff, last)?);
        let norm = weighted_norm_values(&sub, &next, last)?;
        if norm > certificate.r * (1.0 + 1e-12) {
            log::warn!("Picard iterate {m} has weighted norm {norm:.4e} > R = {:.4e}", certificate.r);
            left_ball.push(m);
        }
        norms.push(norm);
        iterates.push(surface(&sub, next.clone()));
        current = next;
    }
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-11 * scale.max(f64::MIN_POSITIVE);
    let ratios = distances
        .windows(2)
        .take_while(|w| w[0] > floor)
        .map(|w| w[1] / w[0])
        .collect();
    Ok(PicardRun {
        iterates,
        distances,
        ratios,
        norms,
        left_ball,
        radius: certificate.r,
    })
}

fn surface(grid: &Grid, values: Vec<f64>) -> TransformedSurface {
    TransformedSurface {
        grid: grid.clone(),
        values,
        stats: SolveStats::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GridConfig, ProblemConfig};
    use crate::model::build_problem;

    fn problem(eta: f64, lambda: f64, theta: f64, gamma: f64, p: f64) -> LiquidationProblem {
        build_problem(&ProblemConfig::constant_coefficients(eta, gamma, lambda, theta, p)).unwrap()
    }

    #[test]
    fn certificate_examples() {
        let c = ContractionCertificate::from_bound(&problem(1.0, 1.0, 0.0, 0.0, 2.0), 1.0);
        assert_eq!((c.r, c.l, c.delta), (2.0, 4.0, 0.125));
        let c = ContractionCertificate::from_bound(&problem(1.0, 0.0, 0.0, 0.0, 2.0), 1.0);
        assert!(c.degenerate);
        assert_eq!((c.r, c.l, c.delta), (0.0, 0.0, 1.0));
        let c = ContractionCertificate::from_bound(&problem(1.0, 2.0, 0.0, 0.0, 2.0), 1.0);
        assert_eq!((c.r, c.l, c.delta), (4.0, 8.0, 0.0625));
    }

    #[test]
    fn semigroup_bound_is_one_for_monotone_scheme() {
        let p = problem(1.0, 1.0, 0.0, 0.0, 2.0);
        let g = Grid::new(&p, &GridConfig::default()).unwrap();
        let c = contraction_certificate(&p, &g).unwrap();
        assert_eq!(c.m, 1.0);
        assert_eq!(c.delta, 0.125);
    }

    #[test]
    fn picard_zero_iterations_and_trivial_fixed_point() {
        let p = problem(1.0, 0.0, 0.0, 0.0, 2.0);
        let g = Grid::new(&p, &GridConfig::default()).unwrap();
        let c = ContractionCertificate::from_bound(&p, 1.0);
        let run = picard_run(&p, &g, &c, 0.5, 0).unwrap();
        assert_eq!(run.iterates.len(), 1);
        assert!(run.iterates[0].values.iter().all(|&v| v == 0.0));
        let run = picard_run(&p, &g, &c, 0.5, 3).unwrap();
        assert!(run.distances.iter().all(|&d| d == 0.0));
        assert!(run.ratios.is_empty());
    }

    #[test]
    fn picard_contracts_on_coth_problem() {
        let p = problem(1.0, 1.0, 0.0, 0.0, 2.0);
        let g = Grid::new(&p, &GridConfig::default()).unwrap();
        let c = ContractionCertificate::from_bound(&p, 1.0);
        let run = picard_run(&p, &g, &c, c.delta, 6).unwrap();
        assert!(run.left_ball.is_empty());
        assert!(!run.ratios.is_empty());
        assert!(run.ratios.iter().all(|&r| r <= 0.55), "{:?}", run.ratios);
        assert!(picard_run(&p, &g, &c, 0.2, 1).is_err());
    }
}

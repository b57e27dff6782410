//! Shared fixtures: the reference problems and an adaptive ODE integrator
//! used as an independent oracle.
#![allow(dead_code)]

pub mod control;

use liqsolve::config::ExperimentConfig;
use liqsolve::{build_problem, LiquidationProblem, ProblemConfig};

pub const DEMO: &str = include_str!("../../../../configs/demo.toml");
pub const DARK_POOL: &str = include_str!("../../../../configs/dark_pool.toml");
pub const OU_RISK: &str = include_str!("../../../../configs/ou_risk.toml");
pub const LOGISTIC_IMPACT: &str = include_str!("../../../../configs/logistic_impact.toml");
pub const TWO_FACTOR: &str = include_str!("../../../../configs/two_factor.toml");

pub fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).unwrap()
}

pub fn problem(text: &str) -> LiquidationProblem {
    build_problem(&config(text).problem).unwrap()
}

/// Constant costs on T = 1, box [-1, 1], driftless factor with volatility 0.2.
pub fn constant(eta: f64, gamma: f64, lambda: f64, theta: f64, p: f64) -> LiquidationProblem {
    build_problem(&ProblemConfig::constant_coefficients(eta, gamma, lambda, theta, p)).unwrap()
}

/// The reference problems by name: separable, coth, dark pool, OU-driven
/// risk and logistic impact.
pub fn reference_problems() -> Vec<(&'static str, ExperimentConfig)> {
    let mut separable = config(DEMO);
    separable.problem.costs.lambda = liqsolve::Coefficient::constant(0.0);
    vec![
        ("separable", separable),
        ("coth", config(DEMO)),
        ("dark-pool", config(DARK_POOL)),
        ("ou-risk", config(OU_RISK)),
        ("logistic-impact", config(LOGISTIC_IMPACT)),
    ]
}

/// Dormand-Prince 5(4) with adaptive steps for a scalar ODE `y' = f(t, y)`.
pub fn dopri45(f: impl Fn(f64, f64) -> f64, t0: f64, y0: f64, t1: f64, rtol: f64, atol: f64) -> f64 {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let (mut t, mut y) = (t0, y0);
    let mut h = (t1 - t0) * 1e-3;
    while t < t1 {
        h = h.min(t1 - t);
        let mut k = [0.0; 7];
        for i in 0..7 {
            let yi = y + h * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
            k[i] = f(t + C[i] * h, yi);
        }
        let y5 = y + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
        let y4 = y + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
        let err = (y5 - y4).abs() / (atol + rtol * y5.abs().max(y.abs()));
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
    y
}

/// `v` at remaining time `horizon` for constant costs, integrating the
/// regular variable `w = v^(-beta)`: `w(0) = 0`, `w' = -beta w^(1 + 1/beta) F(w^(-1/beta))`.
pub fn constant_value(eta: f64, gamma: f64, lambda: f64, theta: f64, p: f64, horizon: f64) -> f64 {
    let beta = 1.0 / (p - 1.0);
    let rhs = |_t: f64, w: f64| {
        let w = w.max(0.0);
        if w == 0.0 {
            return eta.powf(-beta);
        }
        let v = w.powf(-1.0 / beta);
        // w^(1+1/beta) F(v), with the v^(beta+1) term folded in exactly.
        let scale = w.powf(1.0 + 1.0 / beta);
        let dark = theta * gamma * v / (gamma.powf(beta) + v.powf(beta)).powf(1.0 / beta);
        eta.powf(-beta) - beta * scale * (lambda + dark - theta * v)
    };
    dopri45(rhs, 0.0, 0.0, horizon, 1e-12, 1e-14).powf(-1.0 / beta)
}

pub fn constant_value_p2(eta: f64, gamma: f64, lambda: f64, theta: f64, horizon: f64) -> f64 {
    constant_value(eta, gamma, lambda, theta, 2.0, horizon)
}

//! Pointwise evaluation of the HJB nonlinearity, the nonlinearity of the
//! transformed equation for the correction `u`, the ansatz reconstruction and
//! the optimal feedback maps.
//!
//! Everything here is pure and works on coefficient values already evaluated
//! at a factor state ([`LocalCosts`]); the generator term `(L eta)(y)` is
//! always supplied by the caller.

use crate::error::{Error, Result};
use crate::model::CostModel;

/// Hard cap on the number of binomial-series terms.
pub const MAX_SERIES_TERMS: usize = 10_000;

/// Default absolute tolerance for truncating the binomial series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;

/// Cost coefficients evaluated at one factor state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCosts {
    pub eta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub theta: f64,
    pub p: f64,
}

/// Optimal trading rate and dark-pool order for a position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackPair {
    /// Primary-market trading rate (shares per unit time).
    pub xi_rate: f64,
    /// Passive dark-pool order size (shares).
    pub pi_size: f64,
}

/// Partial sum of the binomial tail `sum_{k>=2} C(beta+1, k) z^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    /// The term cap was reached before the tail bound met the tolerance.
    pub capped: bool,
}

/// `a b / (a^beta + b^beta)^(1/beta)` for `a, b >= 0`, zero if either vanishes.
///
/// Scaled by `max(a, b)` so that neither power under- nor overflows.
pub(crate) fn soft_harmonic(a: f64, b: f64, beta: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let m = a.max(b);
    let (ra, rb) = (a / m, b / m);
    a * rb / (ra.powf(beta) + rb.powf(beta)).powf(1.0 / beta)
}

/// Generalized binomial coefficient `C(beta + 1, k)`.
pub fn generalized_binomial(beta: f64, k: u32) -> f64 {
    let a = beta + 1.0;
    (0..k).fold(1.0, |c, j| c * (a - j as f64) / (j + 1) as f64)
}

/// `sum_{k>=2} C(beta+1, k) z^k`, truncated once the geometric tail bound
/// drops below `tol`. Terminates exactly when `beta + 1` is a positive integer.
pub fn binomial_tail(beta: f64, z: f64, tol: f64) -> SeriesSum {
    if z == 0.0 {
        return SeriesSum {
            value: 0.0,
            terms: 0,
            capped: false,
        };
    }
    let a = beta + 1.0;
    let az = z.abs();
    // c_k for k = 2.
    let mut c = a * (a - 1.0) / 2.0;
    let mut zk = z * z;
    let mut sum = 0.0;
    let mut k = 2usize;
    loop {
        sum += c * zk;
        let next = c * (a - k as f64) / (k + 1) as f64;
        if next == 0.0 {
            return SeriesSum {
                value: sum,
                terms: k - 1,
                capped: false,
            };
        }
        // Coefficient magnitudes are nonincreasing from index k+1 on once 2k >= beta.
        if az < 1.0 && 2.0 * k as f64 >= beta {
            let bound = next.abs() * zk.abs() * az / (1.0 - az);
            if bound < tol {
                return SeriesSum {
                    value: sum,
                    terms: k - 1,
                    capped: false,
                };
            }
        }
        if k > MAX_SERIES_TERMS {
            log::warn!("binomial series capped at {MAX_SERIES_TERMS} terms (|z| = {az})");
            return SeriesSum {
                value: sum,
                terms: k - 1,
                capped: true,
            };
        }
        c = next;
        zk *= z;
        k += 1;
    }
}

impl LocalCosts {
    pub fn beta(&self) -> f64 {
        1.0 / (self.p - 1.0)
    }

    /// F(y, v) = lambda - v^(beta+1) / (beta eta^beta)
    ///           + theta gamma v / (gamma^beta + v^beta)^(1/beta) - theta v.
    pub fn hjb_nonlinearity(&self, v: f64) -> f64 {
        let beta = self.beta();
        let v_abs = v.abs();
        self.lambda - v_abs.powf(beta + 1.0) / (beta * self.eta.powf(beta))
            + self.theta * soft_harmonic(self.gamma, v_abs, beta) * v.signum()
            - self.theta * v
    }

    /// Growth check `|u| <= t eta`.
    pub fn check_growth(&self, t: f64, u: f64) -> Result<()> {
        let limit = t * self.eta;
        if u.abs() > limit {
            return Err(Error::GrowthCondition {
                t,
                y: Vec::new(),
                u_abs: u.abs(),
                limit,
            });
        }
        Ok(())
    }

    /// Mean over `[t0, t1]` of the purely time-dependent part of `f`,
    /// `t L eta + t^p lambda - theta t eta`, integrated exactly.
    /// Returns the point value when `t0 == t1`.
    pub fn time_source_mean(&self, l_eta: f64, t0: f64, t1: f64) -> f64 {
        let p = self.p;
        let lin = l_eta - self.theta * self.eta;
        if t1 == t0 {
            return lin * t1 + self.lambda * t1.powf(p);
        }
        let mean_t = 0.5 * (t0 + t1);
        let mean_tp = (t1.powf(p + 1.0) - t0.powf(p + 1.0)) / ((p + 1.0) * (t1 - t0));
        lin * mean_t + self.lambda * mean_tp
    }

    /// State-dependent part of `f`:
    /// `-(eta/beta) sum_{k>=2} C(beta+1,k) (u/(t eta))^k + theta t^p gamma w / ((t^p gamma)^beta + |w|^beta)^(1/beta) - theta u`
    /// with `w = t eta + u`.
    pub fn state_part(&self, t: f64, u: f64, series_tol: f64) -> Result<f64> {
        if t == 0.0 {
            if u == 0.0 {
                return Ok(0.0);
            }
            return self.check_growth(t, u).map(|_| 0.0);
        }
        self.check_growth(t, u)?;
        let beta = self.beta();
        let z = u / (t * self.eta);
        let series = binomial_tail(beta, z, series_tol).value;
        let w = t * self.eta + u;
        let dark = soft_harmonic(t.powf(self.p) * self.gamma, w.abs(), beta) * w.signum();
        Ok(-self.eta / beta * series + self.theta * dark - self.theta * u)
    }

    /// The nonlinearity f(t, u) of the transformed equation at one factor state.
    pub fn transformed_nonlinearity(&self, l_eta: f64, t: f64, u: f64, series_tol: f64) -> Result<f64> {
        let state = self.state_part(t, u, series_tol)?;
        Ok(self.time_source_mean(l_eta, t, t) + state)
    }

    /// Optimal feedback (xi*, pi*) for value `v >= 0` and position `x`.
    pub fn feedback(&self, v: f64, x: f64) -> FeedbackPair {
        let beta = self.beta();
        let v = v.max(0.0);
        let xi_rate = (v / self.eta).powf(beta) * x;
        let frac = if v <= 0.0 {
            0.0
        } else if self.gamma <= 0.0 {
            1.0
        } else {
            1.0 / (1.0 + (self.gamma / v).powf(beta))
        };
        FeedbackPair {
            xi_rate,
            pi_size: frac * x,
        }
    }
}

/// F(y, v) for the problem's cost model.
pub fn eval_hjb_nonlinearity(costs: &CostModel, y: &[f64], v: f64) -> f64 {
    costs.local(y).hjb_nonlinearity(v)
}

/// f(t, u) at factor state `y`; `l_eta` is a supplied value of `(L eta)(y)`.
pub fn eval_transformed_nonlinearity(
    costs: &CostModel,
    l_eta: f64,
    t: f64,
    u: f64,
    y: &[f64],
    series_tol: f64,
) -> Result<f64> {
    costs
        .local(y)
        .transformed_nonlinearity(l_eta, t, u, series_tol)
        .map_err(|e| with_state(e, y))
}

pub(crate) fn with_state(e: Error, y: &[f64]) -> Error {
    match e {
        Error::GrowthCondition { t, u_abs, limit, .. } => Error::GrowthCondition {
            t,
            y: y.to_vec(),
            u_abs,
            limit,
        },
        other => other,
    }
}

/// v = eta / tau^(1/beta) + u / tau^(1 + 1/beta) with remaining time `tau`.
pub fn reconstruct_value(eta: f64, tau: f64, u: f64, beta: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Singular(tau));
    }
    let lead = tau.powf(1.0 / beta);
    Ok(eta / lead + u / (tau * lead))
}

/// Optimal feedback for the problem's cost model at state `y`.
pub fn feedback(costs: &CostModel, y: &[f64], v: f64, x: f64) -> FeedbackPair {
    costs.local(y).feedback(v, x)
}

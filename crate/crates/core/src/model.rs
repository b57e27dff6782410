//! Problem definition: factor diffusion, cost coefficients, horizon and the
//! truncated state domain, validated against the standing assumptions by
//! dense sampling.

use crate::coefficient::Coefficient;
use crate::config::ProblemConfig;
use crate::error::{Assumption, Error, Result};

/// Boundary treatment on the truncated factor box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Zero normal derivative for the PDE, reflection for factor paths.
    Reflecting,
}

/// Axis-aligned truncation box for the factor state.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub boundary: Boundary,
}

impl Domain {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// True when `y` is at least `fraction` of the box width away from every face.
    pub fn is_interior(&self, y: &[f64], fraction: f64) -> bool {
        (0..self.dim()).all(|k| {
            let margin = fraction * self.width(k);
            y[k] >= self.lower[k] + margin - 1e-12 && y[k] <= self.upper[k] - margin + 1e-12
        })
    }

    /// Tensor mesh with `per_axis` nodes per axis, first axis fastest.
    pub fn mesh(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|k| linspace(self.lower[k], self.upper[k], per_axis))
            .collect();
        tensor_nodes(&axes)
    }

    /// Reflects `y` back into the box, axis by axis.
    pub fn reflect(&self, y: &mut [f64]) {
        for (k, v) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            if *v > hi {
                *v = 2.0 * hi - *v;
            }
            if *v < lo {
                *v = 2.0 * lo - *v;
            }
            *v = v.clamp(lo, hi);
        }
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}

pub(crate) fn tensor_nodes(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = axes.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    for mut flat in 0..total {
        let mut y = Vec::with_capacity(axes.len());
        for ax in axes {
            y.push(ax[flat % ax.len()]);
            flat /= ax.len();
        }
        out.push(y);
    }
    out
}

/// Sampled or declared bounds of the factor coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorBounds {
    pub drift_sup: f64,
    pub diffusion_sup: f64,
    pub lipschitz: f64,
    pub ellipticity: f64,
}

/// The d-dimensional Ito diffusion dY = b(Y) ds + sigma(Y) dW.
#[derive(Debug, Clone)]
pub struct FactorModel {
    pub dim: usize,
    pub noise_dim: usize,
    pub drift: Vec<Coefficient>,
    /// Row-major `dim x noise_dim`.
    pub diffusion: Vec<Coefficient>,
    pub bounds: FactorBounds,
}

impl FactorModel {
    pub fn drift_at(&self, y: &[f64], out: &mut [f64]) {
        for (o, b) in out.iter_mut().zip(&self.drift) {
            *o = b.eval(y);
        }
    }

    pub fn diffusion_at(&self, y: &[f64], out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.diffusion) {
            *o = s.eval(y);
        }
    }

    /// sigma sigma^T at `y`, row-major `dim x dim`.
    pub fn covariance_at(&self, y: &[f64]) -> Vec<f64> {
        let (d, n) = (self.dim, self.noise_dim);
        let mut s = vec![0.0; d * n];
        self.diffusion_at(y, &mut s);
        let mut a = vec![0.0; d * d];
        for k in 0..d {
            for l in 0..d {
                a[k * d + l] = (0..n).map(|j| s[k * n + j] * s[l * n + j]).sum();
            }
        }
        a
    }

    /// True when drift and diffusion are constant, so the generator annihilates
    /// constants and has state-independent coefficients.
    pub fn is_constant(&self) -> bool {
        self.drift.iter().chain(&self.diffusion).all(Coefficient::is_constant)
    }

    /// `(L g)(y) = 1/2 tr(sigma sigma^T D^2 g) + <b, D g>` by central differences
    /// with step `h`.
    pub fn apply_generator(&self, g: &dyn Fn(&[f64]) -> f64, y: &[f64], h: f64) -> f64 {
        let d = self.dim;
        let a = self.covariance_at(y);
        let mut b = vec![0.0; d];
        self.drift_at(y, &mut b);
        let g0 = g(y);
        let mut p = y.to_vec();
        let mut total = 0.0;
        for k in 0..d {
            p[k] = y[k] + h;
            let gp = g(&p);
            p[k] = y[k] - h;
            let gm = g(&p);
            p[k] = y[k];
            total += b[k] * (gp - gm) / (2.0 * h);
            total += 0.5 * a[k * d + k] * (gp - 2.0 * g0 + gm) / (h * h);
            for l in (k + 1)..d {
                let akl = a[k * d + l];
                if akl == 0.0 {
                    continue;
                }
                let mut corner = |sk: f64, sl: f64| {
                    p[k] = y[k] + sk * h;
                    p[l] = y[l] + sl * h;
                    let v = g(&p);
                    p[k] = y[k];
                    p[l] = y[l];
                    v
                };
                let cross = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * h * h);
                total += akl * cross;
            }
        }
        total
    }
}

/// Sup-norms of the cost coefficients on the validation mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostNorms {
    pub eta_sup: f64,
    pub gamma_sup: f64,
    pub lambda_sup: f64,
    /// sup |L eta|, with the generator applied by finite differences.
    pub l_eta_sup: f64,
}

/// Cost coefficients of the running cost eta|xi|^p + gamma|pi|^p + lambda|x|^p.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub eta: Coefficient,
    pub gamma: Coefficient,
    pub lambda: Coefficient,
    /// Dark-pool matching intensity.
    pub theta: f64,
    p: f64,
    pub kappa0: f64,
    pub norms: CostNorms,
}

impl CostModel {
    pub fn p(&self) -> f64 {
        self.p
    }

    /// beta = 1 / (p - 1).
    pub fn beta(&self) -> f64 {
        1.0 / (self.p - 1.0)
    }

    pub fn local(&self, y: &[f64]) -> crate::hjb::LocalCosts {
        crate::hjb::LocalCosts {
            eta: self.eta.eval(y),
            gamma: self.gamma.eval(y),
            lambda: self.lambda.eval(y),
            theta: self.theta,
            p: self.p,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.eta.is_constant() && self.gamma.is_constant() && self.lambda.is_constant()
    }
}

/// Start of the liquidation: time, factor state and position in shares.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub t0: f64,
    pub y0: Vec<f64>,
    pub x0: f64,
}

#[derive(Debug, Clone)]
pub struct ValidationSettings {
    pub mesh_per_axis: usize,
    pub lipschitz_tolerance: f64,
}

/// A validated liquidation problem. Immutable once built.
#[derive(Debug, Clone)]
pub struct LiquidationProblem {
    pub factor: FactorModel,
    pub costs: CostModel,
    pub horizon: f64,
    pub domain: Domain,
    pub initial: InitialState,
    pub validation: ValidationSettings,
}

fn violation(assumption: Assumption, witness: &[f64], detail: impl Into<String>) -> Error {
    Error::Assumption {
        assumption,
        witness: witness.to_vec(),
        detail: detail.into(),
    }
}

/// Builds and validates a problem from its configuration section.
pub fn build_problem(cfg: &ProblemConfig) -> Result<LiquidationProblem> {
    let d = cfg.domain.lower.len();
    if d == 0 || cfg.domain.upper.len() != d {
        return Err(Error::Config("domain.lower and domain.upper must have the same nonzero length".into()));
    }
    if cfg.factor.drift.len() != d || cfg.factor.diffusion.len() != d {
        return Err(Error::Config(format!("factor drift/diffusion must have {d} rows")));
    }
    let n = cfg
        .factor
        .noise_dim
        .unwrap_or_else(|| cfg.factor.diffusion.first().map_or(0, Vec::len));
    if n == 0 || cfg.factor.diffusion.iter().any(|row| row.len() != n) {
        return Err(Error::Config(format!("every diffusion row must have noise_dim = {n} > 0 entries")));
    }
    for c in cfg
        .factor
        .drift
        .iter()
        .chain(cfg.factor.diffusion.iter().flatten())
        .chain([&cfg.costs.eta, &cfg.costs.gamma, &cfg.costs.lambda])
    {
        c.check_shape(d)?;
    }
    if cfg.initial.y0.len() != d {
        return Err(Error::Config(format!("initial.y0 must have {d} entries")));
    }
    if cfg.validation.mesh_per_axis < 2 {
        return Err(Error::Config("validation.mesh_per_axis must be at least 2".into()));
    }

    let factor = FactorModel {
        dim: d,
        noise_dim: n,
        drift: cfg.factor.drift.clone(),
        diffusion: cfg.factor.diffusion.iter().flatten().cloned().collect(),
        bounds: FactorBounds {
            drift_sup: cfg.factor.drift_bound.unwrap_or(f64::NAN),
            diffusion_sup: cfg.factor.diffusion_bound.unwrap_or(f64::NAN),
            lipschitz: cfg.factor.lipschitz.unwrap_or(f64::NAN),
            ellipticity: cfg.factor.ellipticity.unwrap_or(f64::NAN),
        },
    };
    let costs = CostModel {
        eta: cfg.costs.eta.clone(),
        gamma: cfg.costs.gamma.clone(),
        lambda: cfg.costs.lambda.clone(),
        theta: cfg.theta,
        p: cfg.p,
        kappa0: cfg.kappa0.unwrap_or(f64::NAN),
        norms: CostNorms {
            eta_sup: f64::NAN,
            gamma_sup: f64::NAN,
            lambda_sup: f64::NAN,
            l_eta_sup: f64::NAN,
        },
    };
    let mut problem = LiquidationProblem {
        factor,
        costs,
        horizon: cfg.horizon,
        domain: Domain {
            lower: cfg.domain.lower.clone(),
            upper: cfg.domain.upper.clone(),
            boundary: Boundary::Reflecting,
        },
        initial: InitialState {
            t0: cfg.initial.t0,
            y0: cfg.initial.y0.clone(),
            x0: cfg.initial.x0,
        },
        validation: ValidationSettings {
            mesh_per_axis: cfg.validation.mesh_per_axis,
            lipschitz_tolerance: cfg.validation.lipschitz_tolerance,
        },
    };
    let report = problem.check()?;
    let b = &mut problem.factor.bounds;
    if b.drift_sup.is_nan() {
        b.drift_sup = report.drift_sup;
    }
    if b.diffusion_sup.is_nan() {
        b.diffusion_sup = report.diffusion_sup;
    }
    if b.lipschitz.is_nan() {
        b.lipschitz = report.lipschitz;
    }
    if b.ellipticity.is_nan() {
        b.ellipticity = report.min_eigenvalue;
    }
    if problem.costs.kappa0.is_nan() {
        problem.costs.kappa0 = report.eta_min;
    }
    problem.costs.norms = report.norms;
    Ok(problem)
}

/// Raw sampled quantities from one validation sweep.
#[derive(Debug, Clone)]
struct SampleReport {
    drift_sup: f64,
    diffusion_sup: f64,
    lipschitz: f64,
    min_eigenvalue: f64,
    eta_min: f64,
    norms: CostNorms,
}

impl LiquidationProblem {
    pub fn dim(&self) -> usize {
        self.factor.dim
    }

    pub fn beta(&self) -> f64 {
        self.costs.beta()
    }

    pub fn p(&self) -> f64 {
        self.costs.p()
    }

    /// Re-runs every assumption check against the declared (or populated) bounds.
    pub fn validate(&self) -> Result<()> {
        self.check().map(|_| ())
    }

    /// (L eta)(y) by central differences on the analytic coefficient.
    pub fn l_eta_at(&self, y: &[f64]) -> f64 {
        let h = 1e-4 * (0..self.dim()).map(|k| self.domain.width(k)).fold(1.0, f64::max);
        self.factor.apply_generator(&|z| self.costs.eta.eval(z), y, h)
    }

    fn check(&self) -> Result<SampleReport> {
        let c = &self.costs;
        let origin = self.initial.y0.as_slice();
        if !(c.p > 1.0) || !c.p.is_finite() {
            return Err(violation(Assumption::ExponentAboveOne, origin, format!("p = {}", c.p)));
        }
        if !(c.theta >= 0.0) || !c.theta.is_finite() {
            return Err(violation(Assumption::Setup, origin, format!("theta = {} must be >= 0", c.theta)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(violation(Assumption::Setup, origin, format!("horizon T = {} must be > 0", self.horizon)));
        }
        if !(self.initial.t0 >= 0.0 && self.initial.t0 < self.horizon) {
            return Err(violation(
                Assumption::Setup,
                origin,
                format!("need 0 <= t0 < T, got t0 = {}, T = {}", self.initial.t0, self.horizon),
            ));
        }
        for k in 0..self.dim() {
            if !(self.domain.lower[k] < self.domain.upper[k]) {
                return Err(violation(Assumption::Setup, origin, format!("empty domain along axis {k}")));
            }
        }
        if !self.domain.contains(origin) {
            return Err(violation(Assumption::Setup, origin, "y0 outside the truncation box"));
        }
        if let Some(k0) = Some(c.kappa0).filter(|k| !k.is_nan()) {
            if !(k0 > 0.0) {
                return Err(violation(Assumption::ImpactFloor, origin, format!("kappa0 = {k0} must be > 0")));
            }
        }

        let m = self.validation.mesh_per_axis;
        let mesh = self.domain.mesh(m);
        let (d, n) = (self.factor.dim, self.factor.noise_dim);
        let mut bvec = vec![0.0; d];
        let mut svec = vec![0.0; d * n];
        let mut rep = SampleReport {
            drift_sup: 0.0,
            diffusion_sup: 0.0,
            lipschitz: 0.0,
            min_eigenvalue: f64::INFINITY,
            eta_min: f64::INFINITY,
            norms: CostNorms {
                eta_sup: 0.0,
                gamma_sup: 0.0,
                lambda_sup: 0.0,
                l_eta_sup: 0.0,
            },
        };
        let mut eta_argmin = origin.to_vec();
        for y in &mesh {
            let eta = c.eta.eval(y);
            let gamma = c.gamma.eval(y);
            let lambda = c.lambda.eval(y);
            if !(eta.is_finite() && gamma.is_finite() && lambda.is_finite()) {
                return Err(violation(Assumption::BoundedLipschitz, y, "cost coefficient not finite"));
            }
            if gamma < 0.0 || lambda < 0.0 {
                return Err(violation(
                    Assumption::NonnegativeCosts,
                    y,
                    format!("gamma = {gamma}, lambda = {lambda}"),
                ));
            }
            if eta < rep.eta_min {
                rep.eta_min = eta;
                eta_argmin.clone_from(y);
            }
            rep.norms.eta_sup = rep.norms.eta_sup.max(eta.abs());
            rep.norms.gamma_sup = rep.norms.gamma_sup.max(gamma);
            rep.norms.lambda_sup = rep.norms.lambda_sup.max(lambda);

            self.factor.drift_at(y, &mut bvec);
            self.factor.diffusion_at(y, &mut svec);
            if bvec.iter().chain(&svec).any(|v| !v.is_finite()) {
                return Err(violation(Assumption::BoundedLipschitz, y, "factor coefficient not finite"));
            }
            rep.drift_sup = bvec.iter().fold(rep.drift_sup, |a, v| a.max(v.abs()));
            rep.diffusion_sup = svec.iter().fold(rep.diffusion_sup, |a, v| a.max(v.abs()));
            let eig = min_eigenvalue(&self.factor.covariance_at(y), d);
            rep.min_eigenvalue = rep.min_eigenvalue.min(eig);
            if !(eig > 0.0) {
                return Err(violation(
                    Assumption::Ellipticity,
                    y,
                    format!("smallest eigenvalue of sigma sigma^T is {eig}"),
                ));
            }
            if !self.factor.bounds.ellipticity.is_nan() && eig < self.factor.bounds.ellipticity {
                return Err(violation(
                    Assumption::Ellipticity,
                    y,
                    format!("eigenvalue {eig} below declared bound {}", self.factor.bounds.ellipticity),
                ));
            }
        }

        let kappa0 = if c.kappa0.is_nan() { rep.eta_min } else { c.kappa0 };
        if !(kappa0 > 0.0) || rep.eta_min < kappa0 {
            return Err(violation(
                Assumption::ImpactFloor,
                &eta_argmin,
                format!("eta = {} below kappa0 = {kappa0}", rep.eta_min),
            ));
        }

        // Lipschitz ratios between axis neighbours of the validation mesh.
        let tol = self.validation.lipschitz_tolerance;
        let mut left = vec![0.0; d * (n + 1)];
        let mut right = vec![0.0; d * (n + 1)];
        let sample = |y: &[f64], out: &mut [f64]| {
            self.factor.drift_at(y, &mut out[..d]);
            self.factor.diffusion_at(y, &mut out[d..]);
        };
        let mut stride = 1;
        for k in 0..d {
            let h = self.domain.width(k) / (m - 1) as f64;
            for (i, y) in mesh.iter().enumerate() {
                if (i / stride) % m == m - 1 {
                    continue;
                }
                let z = &mesh[i + stride];
                sample(y, &mut left);
                sample(z, &mut right);
                for (a, b) in left.iter().zip(&right) {
                    rep.lipschitz = rep.lipschitz.max((a - b).abs() / h);
                }
            }
            stride *= m;
        }

        let fb = &self.factor.bounds;
        let exceeds = |sampled: f64, declared: f64| !declared.is_nan() && sampled > declared * (1.0 + tol) + tol;
        if exceeds(rep.drift_sup, fb.drift_sup) || exceeds(rep.diffusion_sup, fb.diffusion_sup) {
            return Err(violation(
                Assumption::BoundedLipschitz,
                origin,
                format!(
                    "sampled sup |b| = {}, |sigma| = {} exceed declared {}, {}",
                    rep.drift_sup, rep.diffusion_sup, fb.drift_sup, fb.diffusion_sup
                ),
            ));
        }
        if exceeds(rep.lipschitz, fb.lipschitz) {
            return Err(violation(
                Assumption::BoundedLipschitz,
                origin,
                format!("sampled Lipschitz ratio {} exceeds declared {}", rep.lipschitz, fb.lipschitz),
            ));
        }

        rep.norms.l_eta_sup = mesh.iter().map(|y| self.l_eta_at(y).abs()).fold(0.0, f64::max);
        Ok(rep)
    }
}

/// Smallest eigenvalue of a symmetric `d x d` matrix (cyclic Jacobi).
pub(crate) fn min_eigenvalue(a: &[f64], d: usize) -> f64 {
    match d {
        1 => a[0],
        2 => {
            let (p, q, r) = (a[0], a[1], a[3]);
            let mean = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            mean - rad
        }
        _ => {
            let mut m = a.to_vec();
            for _sweep in 0..64 {
                let off: f64 = (0..d)
                    .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                    .map(|(i, j)| m[i * d + j] * m[i * d + j])
                    .sum();
                if off < 1e-24 {
                    break;
                }
                for p in 0..d {
                    for q in (p + 1)..d {
                        let apq = m[p * d + q];
                        if apq.abs() < 1e-300 {
                            continue;
                        }
                        let theta = (m[q * d + q] - m[p * d + p]) / (2.0 * apq);
                        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                        let t = if theta == 0.0 { 1.0 } else { t };
                        let c = 1.0 / (t * t + 1.0).sqrt();
                        let s = t * c;
                        for k in 0..d {
                            let (akp, akq) = (m[k * d + p], m[k * d + q]);
                            m[k * d + p] = c * akp - s * akq;
                            m[k * d + q] = s * akp + c * akq;
                        }
                        for k in 0..d {
                            let (apk, aqk) = (m[p * d + k], m[q * d + k]);
                            m[p * d + k] = c * apk - s * aqk;
                            m[q * d + k] = s * apk + c * aqk;
                        }
                    }
                }
            }
            (0..d).map(|i| m[i * d + i]).fold(f64::INFINITY, f64::min)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::*;

    fn constant_config(eta: f64, gamma: f64, lambda: f64, theta: f64, p: f64) -> ProblemConfig {
        ProblemConfig::constant_coefficients(eta, gamma, lambda, theta, p)
    }

    #[test]
    fn constant_problem_is_valid() {
        let p = build_problem(&constant_config(1.0, 1.0, 0.0, 0.0, 2.0)).unwrap();
        assert_eq!(p.beta(), 1.0);
        assert_eq!(p.costs.kappa0, 1.0);
        assert_eq!(p.costs.norms.l_eta_sup, 0.0);
        assert_eq!(p.factor.bounds.ellipticity, 0.2 * 0.2);
    }

    #[test]
    fn beta_for_empirical_exponent() {
        let p = build_problem(&constant_config(1.0, 1.0, 0.0, 0.0, 8.0 / 5.0)).unwrap();
        assert!((p.beta() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_p_at_most_one() {
        let err = build_problem(&constant_config(1.0, 0.0, 0.0, 0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Assumption { assumption: Assumption::ExponentAboveOne, .. }));
    }

    #[test]
    fn rejects_eta_below_floor_with_witness() {
        let mut cfg = constant_config(1.0, 0.0, 0.0, 0.0, 2.0);
        cfg.domain = DomainConfig {
            lower: vec![0.0],
            upper: vec![2.0],
        };
        cfg.initial.y0 = vec![1.0];
        cfg.kappa0 = Some(0.1);
        cfg.costs.eta = Coefficient::Clipped {
            raw: Box::new(Coefficient::Affine {
                weights: vec![1.0],
                offset: 0.0,
            }),
            floor: 0.0,
            cap: 1e6,
            width: 0.0,
        };
        match build_problem(&cfg).unwrap_err() {
            Error::Assumption {
                assumption, witness, ..
            } => {
                assert_eq!(assumption, Assumption::ImpactFloor);
                assert_eq!(witness, vec![0.0]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_degenerate_diffusion() {
        let mut cfg = constant_config(1.0, 0.0, 0.0, 0.0, 2.0);
        cfg.factor.diffusion = vec![vec![Coefficient::Affine {
            weights: vec![1.0],
            offset: 0.0,
        }]];
        let err = build_problem(&cfg).unwrap_err();
        assert!(matches!(err, Error::Assumption { assumption: Assumption::Ellipticity, .. }), "{err}");
    }

    #[test]
    fn rejects_declared_lipschitz_too_small() {
        let mut cfg = constant_config(1.0, 0.0, 0.0, 0.0, 2.0);
        cfg.factor.drift = vec![Coefficient::AffineClipped {
            weights: vec![-2.0],
            offset: 0.0,
            floor: -1.0,
            cap: 1.0,
            width: 0.1,
        }];
        cfg.factor.lipschitz = Some(1.0);
        assert!(build_problem(&cfg).is_err());
        cfg.factor.lipschitz = Some(2.0);
        build_problem(&cfg).unwrap();
    }

    #[test]
    fn revalidation_is_idempotent() {
        let mut cfg = constant_config(1.0, 0.5, 0.3, 1.0, 1.6);
        cfg.costs.eta = Coefficient::Logistic {
            weights: vec![1.5],
            offset: 0.0,
            low: 0.5,
            high: 1.5,
        };
        let p = build_problem(&cfg).unwrap();
        p.validate().unwrap();
        p.validate().unwrap();
        assert!(p.costs.norms.l_eta_sup > 0.0);
    }

    #[test]
    fn generator_of_quadratic() {
        // L y^2 = sigma^2 + 2 b y for constant b, sigma.
        let mut cfg = constant_config(1.0, 0.0, 0.0, 0.0, 2.0);
        cfg.factor.drift = vec![Coefficient::constant(0.3)];
        let p = build_problem(&cfg).unwrap();
        let v = p.factor.apply_generator(&|y| y[0] * y[0], &[0.5], 1e-3);
        assert!((v - (0.04 + 0.3)).abs() < 1e-8);
    }

    #[test]
    fn jacobi_matches_closed_form() {
        let a = [2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 3.0];
        let lam = min_eigenvalue(&a, 3);
        // Characteristic polynomial root check.
        let det = |l: f64| {
            let m = [a[0] - l, a[1], a[2], a[3], a[4] - l, a[5], a[6], a[7], a[8] - l];
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6])
        };
        assert!(det(lam).abs() < 1e-10);
        assert!(lam < 1.0 && lam > 0.5);
    }
}

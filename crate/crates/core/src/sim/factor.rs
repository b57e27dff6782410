use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::LiquidationProblem;

/// Factor states on a time mesh, flat with `dim` entries per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPath {
    pub dim: usize,
    pub states: Vec<f64>,
}

impl FactorPath {
    pub fn at(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Euler-Maruyama on `mesh` starting from `y0` at `mesh[0]`, reflected into the box.
pub fn simulate_factor<R: Rng + ?Sized>(problem: &LiquidationProblem, y0: &[f64], mesh: &[f64], rng: &mut R) -> FactorPath {
    let f = &problem.factor;
    let (d, n) = (f.dim, f.noise_dim);
    let mut states = Vec::with_capacity(mesh.len() * d);
    states.extend_from_slice(y0);
    let mut y = y0.to_vec();
    let mut b = vec![0.0; d];
    let mut s = vec![0.0; d * n];
    let mut dw = vec![0.0; n];
    let constant = f.is_constant();
    if constant {
        f.drift_at(&y, &mut b);
        f.diffusion_at(&y, &mut s);
    }
    for w in mesh.windows(2) {
        let dt = w[1] - w[0];
        let sq = dt.sqrt();
        for z in dw.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *z = g * sq;
        }
        if !constant {
            f.drift_at(&y, &mut b);
            f.diffusion_at(&y, &mut s);
        }
        for k in 0..d {
            let noise: f64 = (0..n).map(|j| s[k * n + j] * dw[j]).sum();
            y[k] += b[k] * dt + noise;
        }
        problem.domain.reflect(&mut y);
        states.extend_from_slice(&y);
    }
    FactorPath { dim: d, states }
}

/// Jump times of a rate-`theta` Poisson clock on `(t0, t_end)`, from
/// exponential inter-arrival times.
pub fn sample_fill_times<R: Rng + ?Sized>(theta: f64, t0: f64, t_end: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    if !(theta > 0.0) {
        return out;
    }
    let mut t = t0;
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / theta;
        if t >= t_end {
            return out;
        }
        out.push(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::Coefficient;
    use crate::config::ProblemConfig;
    use crate::model::build_problem;
    use crate::rng::{stream, Substream};
    use rand::RngCore;

    #[test]
    fn constant_drift_is_exact() {
        // Zero diffusion fails validation, so edit a built problem.
        let mut p = build_problem(&ProblemConfig::constant_coefficients(1.0, 0.0, 0.0, 0.0, 2.0)).unwrap();
        p.factor.drift = vec![Coefficient::Constant { value: 1.0 }];
        p.factor.diffusion = vec![Coefficient::Constant { value: 0.0 }];
        p.domain.lower = vec![-5.0];
        p.domain.upper = vec![5.0];
        let mesh: Vec<f64> = (0..=7).map(|k| k as f64 / 7.0).collect();
        let path = simulate_factor(&p, &[0.25], &mesh, &mut stream(1, Substream::Factor, 0));
        assert!((path.at(7)[0] - 1.25).abs() < 1e-14);
        p.factor.drift = vec![Coefficient::Constant { value: 0.0 }];
        let path = simulate_factor(&p, &[0.25], &mesh, &mut stream(1, Substream::Factor, 0));
        assert!(path.states.iter().all(|&y| y == 0.25));
    }

    #[test]
    fn reflection_keeps_paths_in_box() {
        let mut p = build_problem(&ProblemConfig::constant_coefficients(1.0, 0.0, 0.0, 0.0, 2.0)).unwrap();
        p.factor.diffusion = vec![Coefficient::Constant { value: 3.0 }];
        let mesh: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
        let path = simulate_factor(&p, &[0.9], &mesh, &mut stream(3, Substream::Factor, 1));
        assert!(path.states.iter().all(|&y| (-1.0..=1.0).contains(&y)));
    }

    #[test]
    fn no_fills_without_intensity() {
        assert!(sample_fill_times(0.0, 0.0, 1.0, &mut stream(1, Substream::Fills, 0)).is_empty());
    }

    /// Returns the largest `u64`, so the first uniform is just below 1.
    struct Saturated;
    impl RngCore for Saturated {
        fn next_u32(&mut self) -> u32 {
            u32::MAX
        }
        fn next_u64(&mut self) -> u64 {
            u64::MAX
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0xff);
        }
    }

    #[test]
    fn long_first_wait_gives_no_fill() {
        assert!(sample_fill_times(2.0, 0.0, 1.0, &mut Saturated).is_empty());
    }
}

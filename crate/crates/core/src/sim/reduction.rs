//! Pathwise monotone reduction of a control: drop trades against the
//! liquidation direction and never sell past zero.

/// A control on a fixed mesh with coefficients frozen per step. Fills, if
/// any, happen at the end of the step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRecord {
    pub times: Vec<f64>,
    pub x0: f64,
    pub p: f64,
    pub xi: Vec<f64>,
    pub pi: Vec<f64>,
    pub fill: Vec<bool>,
    pub eta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl ControlRecord {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Position at every node.
    pub fn positions(&self) -> Vec<f64> {
        let mut x = self.x0;
        let mut out = vec![x];
        for k in 0..self.steps() {
            x -= self.xi[k] * (self.times[k + 1] - self.times[k]);
            if self.fill[k] {
                x -= self.pi[k];
            }
            out.push(x);
        }
        out
    }

    /// `sum eta |xi|^p dt + gamma |pi|^p at fills + lambda |X_k|^p dt`, left-point in `X`.
    pub fn pathwise_cost(&self) -> f64 {
        let x = self.positions();
        (0..self.steps())
            .map(|k| {
                let dt = self.times[k + 1] - self.times[k];
                let mut c = self.eta[k] * self.xi[k].abs().powf(self.p) * dt + self.lambda[k] * x[k].abs().powf(self.p) * dt;
                if self.fill[k] {
                    c += self.gamma[k] * self.pi[k].abs().powf(self.p);
                }
                c
            })
            .sum()
    }
}

/// `xi -> xi 1{xi >= 0} 1{X > 0}` (capped so the step cannot overshoot zero)
/// and `pi -> min(pi, X-) 1{pi >= 0} 1{X- > 0}`, mirrored for short positions.
pub fn monotone_reduction(raw: &ControlRecord) -> ControlRecord {
    let sign = if raw.x0 < 0.0 { -1.0 } else { 1.0 };
    let mut out = raw.clone();
    let mut x = sign * raw.x0;
    for k in 0..raw.steps() {
        let dt = raw.times[k + 1] - raw.times[k];
        let xi = sign * raw.xi[k];
        let xi_bar = if xi >= 0.0 && x > 0.0 { xi.min(x / dt) } else { 0.0 };
        x = (x - xi_bar * dt).max(0.0);
        let pi = sign * raw.pi[k];
        let pi_bar = if pi >= 0.0 && x > 0.0 { pi.min(x) } else { 0.0 };
        if raw.fill[k] {
            x -= pi_bar;
        }
        out.xi[k] = sign * xi_bar;
        out.pi[k] = sign * pi_bar;
    }
    out
}

use rand::Rng;

use crate::config::RateTableConfig;
use crate::error::{Error, Result};
use crate::model::LiquidationProblem;
use crate::pde::ValueSurface;
use crate::rng::{stream, Substream};

use super::factor::{sample_fill_times, simulate_factor, FactorPath};

/// Piecewise-constant trading rate: `rates[i]` on `[times[i], times[i+1])`,
/// the last rate until the final step.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub times: Vec<f64>,
    pub rates: Vec<f64>,
}

impl RateTable {
    pub fn new(times: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != rates.len() {
            return Err(Error::invalid("rate table needs matching, non-empty times and rates"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("rate table times must increase"));
        }
        Ok(RateTable { times, rates })
    }

    pub fn rate(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            self.rates[0]
        } else {
            self.rates[i - 1]
        }
    }
}

impl TryFrom<&RateTableConfig> for RateTable {
    type Error = Error;
    fn try_from(c: &RateTableConfig) -> Result<Self> {
        RateTable::new(c.times.clone(), c.rates.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Optimal rate and dark-pool order from the value surface.
    OptimalFeedback,
    /// Optimal rate from the value surface, no dark-pool orders.
    PrimaryOnlyFeedback,
    /// Constant rate `x0 / (T - t0)`, no dark-pool orders.
    Twap,
    RateTable(RateTable),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::OptimalFeedback => "optimal-feedback",
            Strategy::PrimaryOnlyFeedback => "primary-only-feedback",
            Strategy::Twap => "twap",
            Strategy::RateTable(_) => "rate-table",
        }
    }

    pub fn needs_surface(&self) -> bool {
        matches!(self, Strategy::OptimalFeedback | Strategy::PrimaryOnlyFeedback)
    }
}

/// A dark-pool matching time and the executed size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fill {
    pub time: f64,
    pub size: f64,
}

/// Running-cost components of one path.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostBreakdown {
    /// `int eta |xi|^p` before the final step.
    pub impact: f64,
    /// `sum gamma |pi|^p` over realized fills.
    pub dark: f64,
    /// `int theta gamma |pi|^p`: same expectation as `dark`.
    pub dark_intensity: f64,
    /// `int lambda |X|^p`.
    pub risk: f64,
    /// Impact cost of the forced execution over the last step.
    pub forced: f64,
}

impl CostBreakdown {
    /// Realized cost (pathwise dark-pool accounting).
    pub fn total(&self) -> f64 {
        self.impact + self.dark + self.risk + self.forced
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub times: Vec<f64>,
    pub factor: FactorPath,
    /// Position at each node, after any fill at that instant.
    pub position: Vec<f64>,
    /// Trading rate at the start of each step.
    pub xi: Vec<f64>,
    /// Posted dark-pool size at the start of each step.
    pub pi: Vec<f64>,
    pub fills: Vec<Fill>,
    /// Cost accumulated up to each node.
    pub running_cost: Vec<f64>,
    pub cost: CostBreakdown,
    /// Position left before the forced execution of the last step.
    pub unliquidated: f64,
    pub terminal_position: f64,
}

/// Independent generators for the factor noise and the Poisson clock of one path.
pub struct PathStreams<R> {
    pub factor: R,
    pub fills: R,
}

impl PathStreams<rand_chacha::ChaCha8Rng> {
    pub fn new(seed: u64, path: u64) -> Self {
        PathStreams {
            factor: stream(seed, Substream::Factor, path),
            fills: stream(seed, Substream::Fills, path),
        }
    }
}

/// `steps` equal steps from `t0` to `t_end`, last node exactly `t_end`.
pub fn uniform_mesh(t0: f64, t_end: f64, steps: usize) -> Vec<f64> {
    let h = (t_end - t0) / steps as f64;
    (0..=steps).map(|k| if k == steps { t_end } else { t0 + h * k as f64 }).collect()
}

/// How the position moves inside one step.
#[derive(Clone, Copy)]
enum Motion {
    /// `xi = c X / (T - s)`, so `X(s) = X(a) ((T - s) / (T - a))^c`.
    Feedback { c: f64 },
    Linear { rate: f64 },
}

impl Motion {
    fn evolve(self, x: f64, a: f64, b: f64, horizon: f64) -> f64 {
        match self {
            Motion::Feedback { c } => x * ((horizon - b) / (horizon - a)).powf(c),
            Motion::Linear { rate } => x - rate * (b - a),
        }
    }

    fn rate(self, x: f64, s: f64, horizon: f64) -> f64 {
        match self {
            Motion::Feedback { c } => c * x / (horizon - s),
            Motion::Linear { rate } => rate,
        }
    }
}

/// Simulates one controlled path on `mesh` (from `t0` to `T`).
pub fn run_strategy<R: Rng>(
    problem: &LiquidationProblem,
    strategy: &Strategy,
    surface: Option<&ValueSurface>,
    mesh: &[f64],
    streams: &mut PathStreams<R>,
) -> Result<PathResult> {
    let horizon = problem.horizon;
    if mesh.len() < 2 || (mesh[mesh.len() - 1] - horizon).abs() > 1e-12 * horizon {
        return Err(Error::invalid("simulation mesh must have at least one step and end at T"));
    }
    let surface = match (strategy.needs_surface(), surface) {
        (true, None) => return Err(Error::invalid(format!("strategy {} needs a value surface", strategy.name()))),
        (_, s) => s,
    };
    let t0 = mesh[0];
    let x0 = problem.initial.x0;
    let p = problem.p();
    let beta = problem.beta();
    let factor = simulate_factor(problem, &problem.initial.y0, mesh, &mut streams.factor);
    let fill_times = sample_fill_times(problem.costs.theta, t0, horizon, &mut streams.fills);
    let steps = mesh.len() - 1;
    let mut position = Vec::with_capacity(steps + 1);
    let mut xi = Vec::with_capacity(steps);
    let mut pi = Vec::with_capacity(steps);
    let mut running = Vec::with_capacity(steps + 1);
    let mut fills = Vec::with_capacity(fill_times.len());
    let mut cost = CostBreakdown::default();
    let mut next_fill = 0usize;
    let mut x = x0;
    let mut unliquidated = 0.0;
    position.push(x);
    running.push(0.0);

    for k in 0..steps {
        let (ta, tb) = (mesh[k], mesh[k + 1]);
        let y = factor.at(k);
        let c = problem.costs.local(y);
        let last = k + 1 == steps;
        let posts = matches!(strategy, Strategy::OptimalFeedback) && !last;
        let motion = if last {
            unliquidated = x;
            Motion::Linear { rate: x / (tb - ta) }
        } else {
            match strategy {
                Strategy::OptimalFeedback | Strategy::PrimaryOnlyFeedback => {
                    let v = surface.unwrap().value(ta, y)?;
                    Motion::Feedback {
                        c: (horizon - ta) * (v / c.eta).powf(beta),
                    }
                }
                Strategy::Twap => Motion::Linear { rate: x0 / (horizon - t0) },
                Strategy::RateTable(table) => Motion::Linear { rate: table.rate(ta) },
            }
        };
        let posted = |s: f64, x_pre: f64| -> Result<f64> {
            if !posts || x_pre == 0.0 {
                return Ok(0.0);
            }
            let v = surface.unwrap().value(s, y)?;
            Ok(c.feedback(v, x_pre).pi_size)
        };
        xi.push(motion.rate(x, ta, horizon));
        pi.push(posted(ta, x)?);

        let mut a = ta;
        loop {
            let fill_here = next_fill < fill_times.len() && fill_times[next_fill] <= tb;
            let b = if fill_here { fill_times[next_fill] } else { tb };
            let xb = if last && !fill_here { 0.0 } else { motion.evolve(x, a, b, horizon) };
            let dt = b - a;
            let ra = motion.rate(x, a, horizon).abs().powf(p);
            let rb = if last { ra } else { motion.rate(xb, b, horizon).abs().powf(p) };
            let impact = 0.5 * c.eta * (ra + rb) * dt;
            if last {
                cost.forced += impact;
            } else {
                cost.impact += impact;
            }
            cost.risk += 0.5 * c.lambda * (x.abs().powf(p) + xb.abs().powf(p)) * dt;
            if posts {
                let (pa, pb) = (posted(a, x)?, posted(b, xb)?);
                cost.dark_intensity += 0.5 * c.theta * c.gamma * (pa.abs().powf(p) + pb.abs().powf(p)) * dt;
            }
            x = xb;
            if !fill_here {
                break;
            }
            let size = posted(b, x)?;
            cost.dark += c.gamma * size.abs().powf(p);
            fills.push(Fill { time: b, size });
            x -= size;
            next_fill += 1;
            a = b;
        }
        position.push(x);
        running.push(cost.total());
    }
    Ok(PathResult {
        times: mesh.to_vec(),
        factor,
        position,
        xi,
        pi,
        fills,
        running_cost: running,
        cost,
        unliquidated,
        terminal_position: x,
    })
}

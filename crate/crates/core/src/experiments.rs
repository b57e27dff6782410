//! Named batch experiments over one configuration file, each writing CSV
//! artifacts and reporting whether its verification threshold was met.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::bounds::{residual_cost_diagnostic, verify_surface_bounds_with};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::model::{build_problem, LiquidationProblem};
use crate::output;
use crate::pde::{check_asymptotics, contraction_certificate, picard_run, solve_v_with, Grid, SolverSettings, ValueSurface};
use crate::sim::{
    run_strategy, simulate_ensemble, summarize, uniform_mesh, CostEstimate, EnsembleSettings, PathStreams, RateTable, Strategy,
};

pub const EXPERIMENTS: [&str; 7] = [
    "solve",
    "certificate",
    "asymptotics",
    "verify-bounds",
    "simulate",
    "compare-strategies",
    "residual-cost",
];

/// Picard iterations run by the certificate experiment.
pub const PICARD_ITERATIONS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub summary: String,
}

/// Problem, grid and (lazily) the solved surface shared by the experiments of one run.
pub struct Session {
    pub config: ExperimentConfig,
    pub problem: LiquidationProblem,
    pub grid: Grid,
    out_dir: PathBuf,
    surface: Option<ValueSurface>,
}

impl Session {
    pub fn new(config: ExperimentConfig, out_dir: impl AsRef<Path>) -> Result<Self> {
        let problem = build_problem(&config.problem)?;
        let grid = Grid::new(&problem, &config.grid)?;
        std::fs::create_dir_all(out_dir.as_ref())?;
        Ok(Session {
            config,
            problem,
            grid,
            out_dir: out_dir.as_ref().to_path_buf(),
            surface: None,
        })
    }

    pub fn surface(&mut self) -> Result<&ValueSurface> {
        if self.surface.is_none() {
            let settings = SolverSettings {
                series_tol: self.config.grid.series_tol,
                min_step: self.config.grid.min_step,
            };
            self.surface = Some(solve_v_with(&self.problem, &self.grid, &settings)?);
        }
        Ok(self.surface.as_ref().unwrap())
    }

    fn output_path(&self, name: &str) -> PathBuf {
        let file = self
            .config
            .experiments
            .get(name)
            .cloned()
            .unwrap_or_else(|| format!("{name}.csv"));
        self.out_dir.join(file)
    }

    fn create(&self, path: &Path) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(path)?))
    }

    pub fn run(&mut self, name: &str) -> Result<Outcome> {
        log::info!("running experiment {name}");
        match name {
            "solve" => self.solve(),
            "certificate" => self.certificate(),
            "asymptotics" => self.asymptotics(),
            "verify-bounds" => self.verify_bounds(),
            "simulate" => self.simulate(),
            "compare-strategies" => self.compare_strategies(),
            "residual-cost" => self.residual_cost(),
            other => Err(Error::Config(format!(
                "unknown experiment `{other}` (known: {})",
                EXPERIMENTS.join(", ")
            ))),
        }
    }

    fn solve(&mut self) -> Result<Outcome> {
        let path = self.output_path("solve");
        let y0 = self.problem.initial.y0.clone();
        let t0 = self.problem.initial.t0;
        let file = self.create(&path)?;
        let surface = self.surface()?;
        let v0 = surface.value(t0, &y0)?;
        let stats = surface.u_surface.stats;
        output::write_surface(surface, file)?;
        Ok(Outcome {
            name: "solve".into(),
            files: vec![path],
            passed: true,
            summary: format!("v(t0, y0) = {v0:.6}; {} steps, {} halvings", stats.steps, stats.halvings),
        })
    }

    fn certificate(&mut self) -> Result<Outcome> {
        let path = self.output_path("certificate");
        let mut cert = contraction_certificate(&self.problem, &self.grid)?;
        let run = picard_run(&self.problem, &self.grid, &cert, cert.delta, PICARD_ITERATIONS)?;
        cert.observed_factors = run.ratios.clone();
        output::write_certificate(&cert, self.create(&path)?)?;
        let picard_path = sibling(&path, "picard");
        output::write_picard(&run, self.create(&picard_path)?)?;
        let worst = run.ratios.iter().cloned().fold(0.0, f64::max);
        let passed = run.left_ball.is_empty() && worst <= 0.55;
        Ok(Outcome {
            name: "certificate".into(),
            files: vec![path, picard_path],
            passed,
            summary: format!(
                "M = {}, R = {}, L = {}, delta = {}; worst Picard ratio {worst:.4}",
                cert.m, cert.r, cert.l, cert.delta
            ),
        })
    }

    fn asymptotics(&mut self) -> Result<Outcome> {
        let path = self.output_path("asymptotics");
        let report = check_asymptotics(self.surface()?)?;
        let file = self.create(&path)?;
        output::write_asymptotics(&report, file)?;
        let passed = match report.slope {
            Some(s) => s >= 0.9,
            None => true,
        };
        Ok(Outcome {
            name: "asymptotics".into(),
            files: vec![path],
            passed,
            summary: match report.slope {
                Some(s) => format!("fitted slope {s:.4}, max e/tau {:.4e}", report.max_ratio),
                None => "leading term exact: all deviations vanish".into(),
            },
        })
    }

    fn verify_bounds(&mut self) -> Result<Outcome> {
        let path = self.output_path("verify-bounds");
        let cfg = self.config.bounds.clone();
        let probes: Vec<(f64, Vec<f64>)> = if cfg.probes.is_empty() {
            vec![(self.problem.initial.t0, self.problem.initial.y0.clone())]
        } else {
            cfg.probes.iter().map(|p| (p[0], p[1..].to_vec())).collect()
        };
        let problem = self.problem.clone();
        let surface = self.surface()?;
        let report = verify_surface_bounds_with(&problem, surface, &probes, cfg.n_paths, cfg.seed, cfg.path_steps)?;
        output::write_bounds_report(&report, self.create(&path)?)?;
        Ok(Outcome {
            name: "verify-bounds".into(),
            files: vec![path],
            passed: report.violations.is_empty(),
            summary: format!("{} probes, {} violations", report.probes.len(), report.violations.len()),
        })
    }

    fn ensemble(&mut self, strategy: &Strategy, checkpoints: Vec<f64>) -> Result<Vec<crate::sim::PathSummary>> {
        let sim = self.config.simulation.clone();
        let settings = EnsembleSettings {
            n_paths: sim.n_paths,
            seed: sim.seed,
            steps: sim.steps,
            checkpoints,
        };
        let problem = self.problem.clone();
        let surface = self.surface()?;
        simulate_ensemble(&problem, strategy, Some(surface), &settings)
    }

    fn target_cost(&mut self) -> Result<f64> {
        let (t0, y0, x0) = (self.problem.initial.t0, self.problem.initial.y0.clone(), self.problem.initial.x0);
        let p = self.problem.p();
        Ok(self.surface()?.value(t0, &y0)? * x0.abs().powf(p))
    }

    fn simulate(&mut self) -> Result<Outcome> {
        let path = self.output_path("simulate");
        if self.config.simulation.n_paths < 2 {
            return Err(Error::Config("simulation.n_paths must be at least 2".into()));
        }
        let est = summarize(&self.ensemble(&Strategy::OptimalFeedback, Vec::new())?);
        output::write_cost_estimates(&[("optimal-feedback".to_string(), est)], self.create(&path)?)?;
        let mut files = vec![path.clone()];
        let dumps = self.config.simulation.dump_paths;
        if dumps > 0 {
            let mesh = uniform_mesh(self.problem.initial.t0, self.problem.horizon, self.config.simulation.steps);
            let seed = self.config.simulation.seed;
            let problem = self.problem.clone();
            let surface = self.surface()?.clone();
            for i in 0..dumps {
                let mut streams = PathStreams::new(seed, i as u64);
                let result = run_strategy(&problem, &Strategy::OptimalFeedback, Some(&surface), &mesh, &mut streams)?;
                let file = sibling(&path, &format!("path_{i:03}"));
                output::write_path(&result, self.create(&file)?)?;
                files.push(file);
            }
        }
        let target = self.target_cost()?;
        let passed = cost_matches(&est, target);
        Ok(Outcome {
            name: "simulate".into(),
            files,
            passed,
            summary: format!(
                "mean cost {:.6} +- {:.2e} vs v x0^p = {target:.6}; forced share {:.2e}",
                est.mean, est.se, est.forced_share
            ),
        })
    }

    fn compare_strategies(&mut self) -> Result<Outcome> {
        let path = self.output_path("compare-strategies");
        let mut strategies = vec![Strategy::OptimalFeedback, Strategy::PrimaryOnlyFeedback, Strategy::Twap];
        if let Some(table) = &self.config.simulation.rate_table {
            strategies.push(Strategy::RateTable(RateTable::try_from(table)?));
        }
        let mut rows = Vec::with_capacity(strategies.len());
        for s in &strategies {
            let est = summarize(&self.ensemble(s, Vec::new())?);
            rows.push((s.name().to_string(), est));
        }
        output::write_cost_estimates(&rows, self.create(&path)?)?;
        let best = rows[0].1;
        let passed = rows[1..].iter().all(|(_, e)| no_worse(&best, e));
        Ok(Outcome {
            name: "compare-strategies".into(),
            files: vec![path],
            passed,
            summary: rows
                .iter()
                .map(|(n, e)| format!("{n} {:.6}", e.mean))
                .collect::<Vec<_>>()
                .join(", "),
        })
    }

    fn residual_cost(&mut self) -> Result<Outcome> {
        let path = self.output_path("residual-cost");
        let checkpoints = residual_checkpoints(self.problem.horizon);
        let runs = self.ensemble(&Strategy::OptimalFeedback, checkpoints.clone())?;
        let problem = self.problem.clone();
        let report = residual_cost_diagnostic(&problem, self.surface()?, &runs, &checkpoints)?;
        output::write_residual_costs(&report, self.create(&path)?)?;
        let passed = report.decreasing && report.final_ratio <= 0.05;
        Ok(Outcome {
            name: "residual-cost".into(),
            files: vec![path],
            passed,
            summary: format!(
                "decreasing: {}, final {:.3e} ({:.2}% of first)",
                report.decreasing,
                report.final_value,
                100.0 * report.final_ratio
            ),
        })
    }
}

/// `T - 2^{-k} T`, k = 1..8.
pub fn residual_checkpoints(horizon: f64) -> Vec<f64> {
    (1..=8).map(|k| horizon - horizon * 0.5f64.powi(k)).collect()
}

/// Mean cost within three standard errors plus 1% of the target.
pub fn cost_matches(est: &CostEstimate, target: f64) -> bool {
    (est.mean - target).abs() <= 3.0 * est.se + 1e-2 * target.abs() && est.forced_share <= 0.01
}

/// `a` costs no more than `b` beyond three combined standard errors.
pub fn no_worse(a: &CostEstimate, b: &CostEstimate) -> bool {
    a.mean <= b.mean + 3.0 * (a.se * a.se + b.se * b.se).sqrt()
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Runs `names` in order; an empty list runs every experiment listed in the config.
pub fn run_experiments(config: ExperimentConfig, names: &[String], out_dir: impl AsRef<Path>) -> Result<Vec<Outcome>> {
    let names: Vec<String> = if names.is_empty() {
        config.experiments.keys().cloned().collect()
    } else {
        names.to_vec()
    };
    if let Some(bad) = names.iter().find(|n| !EXPERIMENTS.contains(&n.as_str())) {
        return Err(Error::Config(format!("unknown experiment `{bad}` (known: {})", EXPERIMENTS.join(", "))));
    }
    let mut session = Session::new(config, out_dir)?;
    names.iter().map(|n| session.run(n)).collect()
}

//! CSV artifacts. Floats use Rust's shortest round-trip formatting, so equal
//! results give byte-identical files.

use std::io::Write;

use crate::bounds::{BoundsReport, ResidualCostReport};
use crate::error::Result;
use crate::pde::{AsymptoticsReport, ContractionCertificate, PicardRun, ValueSurface};
use crate::sim::{CostEstimate, PathResult};

fn axis_names(prefix: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=d).map(|k| format!("{prefix}{k}")).collect()
    }
}

fn fmt(x: f64) -> String {
    x.to_string()
}

/// Rows `(t, y..., u, v)` in forward time order, space index fastest.
/// At `t = T` the value is written as `inf`.
pub fn write_surface<W: Write>(surface: &ValueSurface, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let grid = &surface.grid;
    let d = grid.dim();
    let mut header = vec!["t".to_string()];
    header.extend(axis_names("y", d));
    header.extend(["u".to_string(), "v".to_string()]);
    out.write_record(&header)?;
    let nodes = grid.nodes();
    for j in (0..grid.n_time()).rev() {
        let tau = grid.time_nodes[j];
        let t = surface.horizon - tau;
        for (i, y) in nodes.iter().enumerate() {
            let u = surface.u_surface.at(j, i);
            let v = if tau > 0.0 {
                crate::hjb::reconstruct_value(surface.eta_samples[i], tau, u, surface.beta)?
            } else {
                f64::INFINITY
            };
            let mut row = vec![fmt(t)];
            row.extend(y.iter().map(|&c| fmt(c)));
            row.push(fmt(u));
            row.push(fmt(v));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_bounds_report<W: Write>(report: &BoundsReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let d = report.probes.first().map_or(1, |p| p.bounds.y.len());
    let mut header = vec!["probe".to_string(), "t".to_string()];
    header.extend(axis_names("y", d));
    header.extend(["lower", "se_lower", "v", "upper", "se_upper", "verdict"].map(String::from));
    out.write_record(&header)?;
    for (i, p) in report.probes.iter().enumerate() {
        let b = &p.bounds;
        let mut row = vec![i.to_string(), fmt(b.t)];
        row.extend(b.y.iter().map(|&c| fmt(c)));
        row.extend([b.lower, b.se_lower, p.value, b.upper, b.se_upper].map(fmt));
        row.push(if p.pass { "pass" } else { "fail" }.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per node: `(t, y..., X, xi, pi, fill_flag, running_cost)`; `xi` and
/// `pi` apply on the step starting at the node, and `fill_flag` marks a fill
/// in the step ending at it.
pub fn write_path<W: Write>(path: &PathResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let d = path.factor.dim;
    let mut header = vec!["t".to_string()];
    header.extend(axis_names("y", d));
    header.extend(["X", "xi", "pi", "fill_flag", "running_cost"].map(String::from));
    out.write_record(&header)?;
    let mut fill = 0usize;
    for (k, &t) in path.times.iter().enumerate() {
        let mut flag = false;
        while fill < path.fills.len() && path.fills[fill].time <= t {
            flag = true;
            fill += 1;
        }
        let mut row = vec![fmt(t)];
        row.extend(path.factor.at(k).iter().map(|&c| fmt(c)));
        row.push(fmt(path.position[k]));
        row.push(fmt(path.xi.get(k).copied().unwrap_or(0.0)));
        row.push(fmt(path.pi.get(k).copied().unwrap_or(0.0)));
        row.push(u8::from(flag).to_string());
        row.push(fmt(path.running_cost[k]));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Ensemble report, one row per strategy.
pub fn write_cost_estimates<W: Write>(rows: &[(String, CostEstimate)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "strategy",
        "n_paths",
        "mean_cost",
        "se",
        "mean_unliquidated",
        "forced_share",
        "dark_pathwise",
        "dark_intensity",
        "dark_gap_se",
    ])?;
    for (name, e) in rows {
        let mut row = vec![name.clone(), e.n_paths.to_string()];
        row.extend(
            [
                e.mean,
                e.se,
                e.mean_unliquidated,
                e.forced_share,
                e.dark_mean,
                e.dark_intensity_mean,
                e.dark_gap_se,
            ]
            .map(fmt),
        );
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_certificate<W: Write>(cert: &ContractionCertificate, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["M", "R", "L", "delta", "degenerate"])?;
    out.write_record([fmt(cert.m), fmt(cert.r), fmt(cert.l), fmt(cert.delta), cert.degenerate.to_string()])?;
    out.flush()?;
    Ok(())
}

/// Per-iteration Picard distances and norms; `ratio` is empty where it is not
/// reported.
pub fn write_picard<W: Write>(run: &PicardRun, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "distance", "norm", "ratio", "in_ball"])?;
    for (m, d) in run.distances.iter().enumerate() {
        let ratio = if m >= 1 { run.ratios.get(m - 1).map(|&r| fmt(r)).unwrap_or_default() } else { String::new() };
        let in_ball = !run.left_ball.contains(&(m + 1));
        out.write_record([(m + 1).to_string(), fmt(*d), fmt(run.norms[m + 1]), ratio, in_ball.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_asymptotics<W: Write>(report: &AsymptoticsReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["tau", "deviation", "deviation_over_tau"])?;
    for (&tau, &e) in report.taus.iter().zip(&report.deviations) {
        out.write_record([fmt(tau), fmt(e), fmt(e / tau)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_residual_costs<W: Write>(report: &ResidualCostReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s", "mean", "se"])?;
    for ((&s, &m), &se) in report.checkpoints.iter().zip(&report.means).zip(&report.ses) {
        out.write_record([fmt(s), fmt(m), fmt(se)])?;
    }
    out.flush()?;
    Ok(())
}

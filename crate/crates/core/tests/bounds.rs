mod common;

use liqsolve::bounds::{bsde_bounds, estimate_bounds, estimate_bounds_with, verify_surface_bounds};
use liqsolve::pde::{solve_v, Grid};
use liqsolve::build_problem;

const TOL: f64 = liqsolve::hjb::DEFAULT_SERIES_TOL;

#[test]
fn sandwich_holds_on_the_ou_problem() {
    let cfg = common::config(common::OU_RISK);
    let problem = build_problem(&cfg.problem).unwrap();
    let surface = solve_v(&problem, &Grid::new(&problem, &cfg.grid).unwrap(), TOL).unwrap();
    let probes = vec![(0.0, vec![0.0]), (0.3, vec![-1.0]), (0.6, vec![1.2])];
    let report = verify_surface_bounds(&problem, &surface, &probes, 20_000, 3).unwrap();
    assert!(report.violations.is_empty(), "{:?}", report.probes);
    for c in &report.probes {
        assert!(c.bounds.lower < c.bounds.upper);
    }
}

#[test]
fn probes_near_the_boundary_are_refused() {
    let problem = common::problem(common::OU_RISK);
    let surface = solve_v(&problem, &Grid::new(&problem, &common::config(common::OU_RISK).grid).unwrap(), TOL).unwrap();
    assert!(verify_surface_bounds(&problem, &surface, &[(0.0, vec![1.9])], 10, 1).is_err());
    assert!(verify_surface_bounds(&problem, &surface, &[(1.0, vec![0.0])], 10, 1).is_err());
}

#[test]
fn same_seed_same_estimate() {
    let problem = common::problem(common::LOGISTIC_IMPACT);
    let a = estimate_bounds(&problem, 0.2, &[0.3], 2000, 17).unwrap();
    let b = estimate_bounds(&problem, 0.2, &[0.3], 2000, 17).unwrap();
    let c = estimate_bounds(&problem, 0.2, &[0.3], 2000, 18).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.lower, c.lower);
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let problem = common::problem(common::OU_RISK);
    let small = estimate_bounds_with(&problem, 0.0, &[0.3], 4000, 5, 500).unwrap();
    let large = estimate_bounds_with(&problem, 0.0, &[0.3], 16_000, 5, 500).unwrap();
    let ratio = large.se_upper / small.se_upper;
    assert!((0.4..0.6).contains(&ratio), "se ratio {ratio}");
}

#[test]
fn probe_just_before_the_deadline() {
    let cfg = common::config(common::OU_RISK);
    let problem = build_problem(&cfg.problem).unwrap();
    let surface = solve_v(&problem, &Grid::new(&problem, &cfg.grid).unwrap(), TOL).unwrap();
    let t = 1.0 - 1e-9;
    let b = estimate_bounds(&problem, t, &[0.2], 1000, 1).unwrap();
    assert!(b.lower.is_finite() && b.upper.is_finite() && b.lower <= b.upper);
    assert!(b.contains(surface.value(t, &[0.2]).unwrap()));
}

#[test]
fn constant_costs_give_exact_bounds() {
    let problem = common::constant(1.0, 0.0, 1.0, 0.0, 2.0);
    let b = estimate_bounds(&problem, 0.0, &[0.0], 100, 1).unwrap();
    assert_eq!((b.se_lower, b.se_upper), (0.0, 0.0));
    assert!((b.lower - 1.0).abs() < 1e-12);
    // int_0^1 1 + s^2 ds = 4/3, up to the trapezoid error on 2000 steps.
    assert!((b.upper - 4.0 / 3.0).abs() < 1e-7);
}

#[test]
fn backward_form_agrees_with_forward_estimates() {
    let problem = common::problem(common::OU_RISK);
    let a = estimate_bounds(&problem, 0.1, &[-0.4], 3000, 9).unwrap();
    let b = bsde_bounds(&problem, 0.1, &[-0.4], 3000, 9).unwrap();
    assert_eq!(a, b);
    assert!(bsde_bounds(&common::problem(common::DARK_POOL), 0.0, &[0.0], 10, 1).is_err());
}

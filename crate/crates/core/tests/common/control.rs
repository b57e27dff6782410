use rand::Rng;

use liqsolve::sim::ControlRecord;

/// A random control that trades both ways, overshoots zero and places
/// oversized or wrong-signed dark orders, but still ends flat.
pub fn random_control<R: Rng>(rng: &mut R, steps: usize) -> ControlRecord {
    let x0: f64 = rng.random_range(0.2..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    let dt = 1.0 / steps as f64;
    let mut xi: Vec<f64> = (0..steps).map(|_| x0.signum() * rng.random_range(-2.0..4.0)).collect();
    let pi: Vec<f64> = (0..steps).map(|_| x0.signum() * rng.random_range(-0.5..1.0) * x0.abs()).collect();
    let fill: Vec<bool> = (0..steps).map(|_| rng.random_bool(0.1)).collect();
    let mut rec = ControlRecord {
        times,
        x0,
        p: rng.random_range(1.2..3.0),
        xi: xi.clone(),
        pi,
        fill,
        eta: (0..steps).map(|_| rng.random_range(0.5..2.0)).collect(),
        gamma: (0..steps).map(|_| rng.random_range(0.0..2.0)).collect(),
        lambda: (0..steps).map(|_| rng.random_range(0.0..2.0)).collect(),
    };
    // Close out whatever is left on the last step.
    rec.fill[steps - 1] = false;
    let before_last = rec.positions()[steps - 1];
    xi[steps - 1] = before_last / dt;
    rec.xi = xi;
    rec
}

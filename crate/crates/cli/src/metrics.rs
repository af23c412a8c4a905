//! Trajectory quality measures in physical units.

use flatfw_core::{FlatTrajectory, Scenario};

/// `0, dt, 2 dt, …` up to and including `duration`.
pub fn sample_times(duration: f64, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0 && duration >= 0.0);
    let n = (duration / dt).ceil() as usize;
    let mut t: Vec<f64> = (0..n).map(|k| k as f64 * dt).filter(|&t| t < duration).collect();
    t.push(duration);
    t
}

/// Horizontal distance from `p` to the nearest cylinder surface, negative
/// inside. Infinite without obstacles.
pub fn clearance(scenario: &Scenario, p: &flatfw_core::Vec3) -> f64 {
    scenario.obstacles.iter().map(|o| o.axis_distance(p) - o.radius).fold(f64::INFINITY, f64::min)
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2).zip(f.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
}

/// `∫ max(1 − d_obs / R_safe, 0) dt` with `d_obs` the distance to the
/// nearest cylinder surface, by the trapezoidal rule on a `dt` grid.
pub fn obstacle_violation(traj: &FlatTrajectory, scenario: &Scenario, dt: f64) -> f64 {
    if scenario.safe_radius <= 0.0 {
        return 0.0;
    }
    let t = sample_times(traj.duration(), dt);
    let f: Vec<f64> = t
        .iter()
        .map(|&t| {
            let p = traj.derivative(t, 0).expect("sample time inside the domain");
            (1.0 - clearance(scenario, &p) / scenario.safe_radius).max(0.0)
        })
        .collect();
    trapezoid(&t, &f)
}

/// `E = ∫ jᵀj dt`, exact for the piecewise-quadratic jerk of a quintic
/// spline (three-point Gauss-Legendre per segment).
pub fn smoothness(traj: &FlatTrajectory) -> f64 {
    let r = (0.6f64).sqrt();
    let nodes = [(0.5 * (1.0 - r), 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 * (1.0 + r), 5.0 / 18.0)];
    let h = traj.segment_duration();
    (0..traj.segments())
        .map(|i| nodes.iter().map(|&(tau, w)| w * traj.segment_derivative(i, tau, 3).norm_squared()).sum::<f64>() * h)
        .sum()
}

/// Smallest [`clearance`] on a `dt` grid.
pub fn min_clearance(traj: &FlatTrajectory, scenario: &Scenario, dt: f64) -> f64 {
    sample_times(traj.duration(), dt)
        .into_iter()
        .map(|t| clearance(scenario, &traj.derivative(t, 0).expect("sample time inside the domain")))
        .fold(f64::INFINITY, f64::min)
}

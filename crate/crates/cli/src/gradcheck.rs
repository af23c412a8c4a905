//! Analytic objective gradient against central differences on random
//! problem instances.

use flatfw_core::gradients::finite_difference_gradient;
use flatfw_core::solver::Problem;
use flatfw_core::{Bounds, LoadControls, Obstacle, Scenario, SegmentCount, SolverConfig, TimeMode, UavState, Vec3, GRAVITY};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::scenarios::SAFE_RADIUS;

/// Central-difference step in normalized units.
pub const STEP: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckRecord {
    pub sample: usize,
    pub seed: u64,
    pub segments: usize,
    pub obstacles: usize,
    pub time_mode: &'static str,
    pub dim: usize,
    pub objective: f64,
    pub grad_norm: f64,
    /// `‖g − g_fd‖₂`.
    pub abs_error: f64,
    /// `‖g − g_fd‖₂ / (1 + ‖g_fd‖₂)`.
    pub rel_error: f64,
    pub pass: bool,
}

fn random_state(rng: &mut ChaCha8Rng, north: f64, east: f64) -> UavState {
    UavState::new(
        Vec3::new(north, east, rng.gen_range(-1500.0..-200.0)),
        rng.gen_range(30.0..40.0),
        rng.gen_range(-180f64..180.0).to_radians(),
        rng.gen_range(-8f64..8.0).to_radians(),
    )
}

/// Random scenario with obstacles scattered along the start-goal line,
/// perturbed so that speed, load and obstacle penalties are active.
pub fn random_instance(seed: u64) -> (Scenario, SolverConfig, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = rng.gen_range(2000.0..8000.0);
    let heading = rng.gen_range(0.0..std::f64::consts::TAU);
    let (gn, ge) = (length * heading.cos(), length * heading.sin());
    let start = random_state(&mut rng, 0.0, 0.0);
    let goal = random_state(&mut rng, gn, ge);
    let obstacles = (0..rng.gen_range(0..=6))
        .map(|_| {
            let s = rng.gen_range(0.2..0.8);
            Obstacle::new(s * gn + rng.gen_range(-400.0..400.0), s * ge + rng.gen_range(-400.0..400.0), rng.gen_range(100.0..500.0))
        })
        .collect();
    let nominal = length / 35.0;
    let time_mode = match rng.gen_range(0..3) {
        0 => TimeMode::MinTime,
        1 => TimeMode::Window { min: 0.9 * nominal, max: 1.1 * nominal },
        _ => TimeMode::Fixed { duration: nominal * rng.gen_range(0.9..1.3) },
    };
    let scenario = Scenario {
        start,
        start_controls: LoadControls::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(0.9..1.1)),
        goal,
        goal_controls: LoadControls::LEVEL,
        bounds: Bounds::reference(),
        obstacles,
        safe_radius: SAFE_RADIUS,
        time_mode,
        gravity: GRAVITY,
    };
    let segments = rng.gen_range(3..=20);
    let config = SolverConfig { segments: SegmentCount::Fixed(segments), ..Default::default() };
    (scenario, config, segments)
}

fn time_mode_name(m: &TimeMode) -> &'static str {
    match m {
        TimeMode::MinTime => "min_time",
        TimeMode::Window { .. } => "window",
        TimeMode::Fixed { .. } => "fixed",
    }
}

/// Checks one random instance. The decision vector is the Dubins initial
/// guess with waypoints jittered by up to 5 % of the normalized length and
/// `𝒯` by up to ±0.3.
pub fn check_one(sample: usize, seed: u64) -> flatfw_core::Result<GradCheckRecord> {
    let (scenario, config, segments) = random_instance(seed);
    let problem = Problem::new(&scenario, &config)?;
    let obj = &problem.objective;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut x = problem.x0.clone();
    let waypoint_dims = 3 * (segments - 1);
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += if i < waypoint_dims { rng.gen_range(-0.05..0.05) } else { rng.gen_range(-0.3..0.3) };
    }
    let mut analytic = vec![0.0; x.len()];
    let objective = obj.value_and_gradient(&x, &mut analytic)?.total;
    let mut fd = vec![0.0; x.len()];
    finite_difference_gradient(obj, &x, STEP, &mut fd)?;
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|a| a * a).sum::<f64>().sqrt();
    let abs_error = norm(&mut analytic.iter().zip(&fd).map(|(a, b)| a - b));
    let rel_error = abs_error / (1.0 + norm(&mut fd.iter().copied()));
    Ok(GradCheckRecord {
        sample,
        seed,
        segments,
        obstacles: scenario.obstacles.len(),
        time_mode: time_mode_name(&scenario.time_mode),
        dim: x.len(),
        objective,
        grad_norm: norm(&mut analytic.iter().copied()),
        abs_error,
        rel_error,
        pass: rel_error <= TOLERANCE,
    })
}

/// `samples` instances with seeds `seed, seed + 1, …`, in order.
pub fn grad_check(samples: usize, seed: u64) -> flatfw_core::Result<Vec<GradCheckRecord>> {
    (0..samples).into_par_iter().map(|i| check_one(i, seed.wrapping_add(i as u64))).collect()
}

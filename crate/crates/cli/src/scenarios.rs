//! Reference scenarios.

use flatfw_core::{Bounds, LoadControls, Margins, Obstacle, Scenario, SolverConfig, TimeMode, UavState, Vec2, Vec3, Weights, GRAVITY};

use crate::env::{gen_env_clear_of, EnvSpec, Region};

pub const SAFE_RADIUS: f64 = 100.0;

/// Seed of the fixed obstacle field used by [`penetration`].
pub const PENETRATION_SEED: u64 = 2024;

fn state(x: f64, y: f64, z: f64, speed: f64, heading_deg: f64) -> UavState {
    UavState::new(Vec3::new(x, y, z), speed, heading_deg.to_radians(), 0.0)
}

/// Centers of the two minimum-radius turning circles tangent to the heading.
fn turn_circles(s: &UavState, radius: f64) -> [Vec2; 2] {
    let side = Vec2::new(-s.heading.sin(), s.heading.cos()) * radius;
    let p = s.position.xy();
    [p + side, p - side]
}

/// Random field in which both terminal turning circles stay clear of every
/// safety zone, so neither endpoint is boxed in.
fn field(spec: &EnvSpec, seed: u64, start: &UavState, goal: &UavState) -> Vec<Obstacle> {
    let radius = Bounds::reference().min_turn_radius(GRAVITY);
    let keep: Vec<Vec2> = turn_circles(start, radius).into_iter().chain(turn_circles(goal, radius)).collect();
    gen_env_clear_of(spec, seed, &keep, radius + SAFE_RADIUS)
}

fn base(start: UavState, goal: UavState, obstacles: Vec<Obstacle>) -> Scenario {
    Scenario {
        start,
        start_controls: LoadControls::LEVEL,
        goal,
        goal_controls: LoadControls::LEVEL,
        bounds: Bounds::reference(),
        obstacles,
        safe_radius: SAFE_RADIUS,
        time_mode: TimeMode::MinTime,
        gravity: GRAVITY,
    }
}

/// Minimum-time penetration through a field of 15 cylinders with a 1.6 km
/// climb.
pub fn penetration() -> Scenario {
    let start = state(500.0, 500.0, -200.0, 30.5, -90.0);
    let goal = state(9500.0, 500.0, -1800.0, 30.5, 0.0);
    let spec = EnvSpec { region: Region::new((1000.0, 8500.0), (-2000.0, 3000.0)), density: 0.4, radius: (200.0, 400.0) };
    let obstacles = field(&spec, PENETRATION_SEED, &start, &goal);
    base(start, goal, obstacles)
}

/// Two large cylinders between diagonal corners of a 5 km square.
pub fn two_cylinder() -> Scenario {
    base(
        state(300.0, 4700.0, -500.0, 30.0, -90.0),
        state(4700.0, 300.0, -1000.0, 30.0, -90.0),
        vec![Obstacle::new(1800.0, 3800.0, 800.0), Obstacle::new(3200.0, 1200.0, 800.0)],
    )
}

/// Solver settings used with [`two_cylinder`]: unit penalty weights of 10³
/// and 1 % margins.
pub fn two_cylinder_config() -> SolverConfig {
    SolverConfig {
        weights: Weights { effort: 1e-3, obstacle: 1e3, speed: 1e3, flight_path: 1e3, nx: 1e3, ny: 1e3, nz: 1e3 },
        margins: Margins::uniform(0.01),
        ..Default::default()
    }
}

/// Benchmark group `i ≥ 1`: a `(5 + 2.5 i) km × 5 km` field at 0.4 obstacles
/// per km² with radii in [200, 400] m.
pub fn bench_group(i: usize, seed: u64) -> Scenario {
    let length = 5000.0 + 2500.0 * i as f64;
    let start = state(500.0, 2500.0, -500.0, 30.0, 0.0);
    let goal = state(4500.0 + 2500.0 * i as f64, 2500.0, -1000.0, 30.0, 0.0);
    let spec = EnvSpec { region: Region::new((0.0, length), (0.0, 5000.0)), density: 0.4, radius: (200.0, 400.0) };
    let obstacles = field(&spec, seed, &start, &goal);
    base(start, goal, obstacles)
}

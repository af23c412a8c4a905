//! Problem normalization and the Dubins-based initial guess.

use crate::costs::{Bounds, Obstacle, Range, Scenario, SegmentCount, TimeMode};
use crate::dubins::{dubins3d, DubinsPath3D};
use crate::flat::UavState;
use crate::{Error, Result, Vec3};

/// Spatial and temporal scales: lengths are divided by `length`, times by
/// `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub length: f64,
    pub time: f64,
}

impl Scaling {
    /// `η_T = η_L / V_max`, so unit normalized speed is `V_max`.
    pub fn new(length: f64, v_max: f64) -> Self {
        Self { length, time: length / v_max }
    }

    pub const IDENTITY: Scaling = Scaling { length: 1.0, time: 1.0 };

    pub fn speed(&self) -> f64 {
        self.length / self.time
    }

    pub fn acceleration(&self) -> f64 {
        self.length / (self.time * self.time)
    }

    /// Factor taking a physical effort weight to the normalized problem:
    /// `∫jᵀj dt` scales by `η_L²/η_T⁵` and the whole objective by `1/η_T`.
    pub fn effort_factor(&self) -> f64 {
        (self.length / self.time.powi(3)).powi(2)
    }

    /// Scales every dimensional quantity of `scenario` by `1/s`.
    /// Load factors and angles are unchanged.
    pub fn apply(&self, scenario: &Scenario) -> Scenario {
        self.rescale(scenario, 1.0 / self.length, 1.0 / self.time)
    }

    /// Inverse of [`Scaling::apply`].
    pub fn revert(&self, scenario: &Scenario) -> Scenario {
        self.rescale(scenario, self.length, self.time)
    }

    fn rescale(&self, s: &Scenario, l: f64, t: f64) -> Scenario {
        let v = l / t;
        let state = |x: &UavState| UavState { position: x.position * l, speed: x.speed * v, ..*x };
        let b = &s.bounds;
        Scenario {
            start: state(&s.start),
            goal: state(&s.goal),
            bounds: Bounds { speed: Range::new(b.speed.min * v, b.speed.max * v), ..*b },
            obstacles: s.obstacles.iter().map(|o| Obstacle { center: o.center * l, radius: o.radius * l }).collect(),
            safe_radius: s.safe_radius * l,
            time_mode: match s.time_mode {
                TimeMode::MinTime => TimeMode::MinTime,
                TimeMode::Window { min, max } => TimeMode::Window { min: min * t, max: max * t },
                TimeMode::Fixed { duration } => TimeMode::Fixed { duration: duration * t },
            },
            gravity: s.gravity * l / (t * t),
            ..s.clone()
        }
    }
}

/// Minimum turning radius and 3D Dubins connection for a physical scenario.
pub fn dubins_connection(scenario: &Scenario) -> Result<DubinsPath3D> {
    let b = &scenario.bounds;
    let radius = b.min_turn_radius(scenario.gravity);
    dubins3d(&scenario.start, &scenario.goal, radius, b.flight_path.min, b.flight_path.max)
}

/// Normalizes by the Dubins length `η_L` and `η_T = η_L / V_max`.
pub fn normalize(scenario: &Scenario) -> Result<(Scenario, Scaling, DubinsPath3D)> {
    let path = dubins_connection(scenario)?;
    let scaling = Scaling::new(path.length(), scenario.bounds.speed.max);
    Ok((scaling.apply(scenario), scaling, path))
}

/// `N = max(2, round(k_n · L / R_min))`.
pub fn choose_segments(length: f64, min_turn_radius: f64, k_n: f64) -> usize {
    ((k_n * length / min_turn_radius).round() as usize).max(2)
}

pub fn segment_count(count: SegmentCount, path: &DubinsPath3D) -> usize {
    match count {
        SegmentCount::Auto { k_n } => choose_segments(path.length(), path.horizontal.radius, k_n),
        SegmentCount::Fixed(n) => n,
    }
}

/// `N − 1` waypoints equally spaced in arc length along the path, in
/// normalized units, and `𝒯⁰ = 0` (normalized `T⁰ = 1`).
pub fn initial_guess(path: &DubinsPath3D, segments: usize, scaling: &Scaling) -> Result<(Vec<Vec3>, f64)> {
    if segments == 0 {
        return Err(Error::InitFailure("segment count must be positive".into()));
    }
    let waypoints = (1..segments).map(|i| path.point_at(i as f64 / segments as f64) / scaling.length).collect();
    Ok((waypoints, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat::LoadControls;
    use crate::GRAVITY;
    use approx::assert_relative_eq;

    fn scenario(goal: Vec3, heading_deg: f64) -> Scenario {
        Scenario {
            start: UavState::new(Vec3::new(0.0, 0.0, -100.0), 35.0, 0.0, 0.0),
            start_controls: LoadControls::LEVEL,
            goal: UavState::new(goal, 32.0, heading_deg.to_radians(), 0.05),
            goal_controls: LoadControls::new(0.01, 0.1, 1.0),
            bounds: Bounds::reference(),
            obstacles: vec![Obstacle::new(1000.0, 200.0, 300.0)],
            safe_radius: 100.0,
            time_mode: TimeMode::Window { min: 100.0, max: 200.0 },
            gravity: GRAVITY,
        }
    }

    #[test]
    fn scaling_round_trip() {
        let s = scenario(Vec3::new(4000.0, 1500.0, -300.0), 60.0);
        let k = Scaling::new(4321.0, 40.0);
        assert_relative_eq!(k.time, 4321.0 / 40.0);
        let back = k.revert(&k.apply(&s));
        assert_relative_eq!(back.start.position, s.start.position, epsilon = 1e-12);
        assert_relative_eq!(back.goal.position, s.goal.position, epsilon = 1e-9);
        assert_relative_eq!(back.goal.speed, s.goal.speed, epsilon = 1e-12);
        assert_relative_eq!(back.gravity, s.gravity, epsilon = 1e-12);
        assert_relative_eq!(back.safe_radius, s.safe_radius, epsilon = 1e-12);
        assert_relative_eq!(back.obstacles[0].center, s.obstacles[0].center, epsilon = 1e-9);
        assert_relative_eq!(back.obstacles[0].radius, s.obstacles[0].radius, epsilon = 1e-12);
        assert_eq!(back.goal.heading, s.goal.heading);
        assert_eq!(back.goal_controls, s.goal_controls);
        match (back.time_mode, s.time_mode) {
            (TimeMode::Window { min: a, max: b }, TimeMode::Window { min: c, max: d }) => {
                assert_relative_eq!(a, c, epsilon = 1e-12);
                assert_relative_eq!(b, d, epsilon = 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn normalized_path_has_unit_length() {
        let s = scenario(Vec3::new(4000.0, 1500.0, -300.0), 60.0);
        let (ns, k, path) = normalize(&s).unwrap();
        assert_relative_eq!(k.time, path.length() / 40.0, epsilon = 1e-12);
        let again = dubins_connection(&ns).unwrap();
        assert_relative_eq!(again.length(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(ns.bounds.speed.max, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn segment_rule() {
        assert_eq!(choose_segments(10.0 * 458.7, 458.7, 1.0), 10);
        assert_eq!(choose_segments(10.0 * 458.7, 458.7, 1.5), 15);
        assert_eq!(choose_segments(100.0, 458.7, 1.25), 2);
    }

    #[test]
    fn straight_line_guess() {
        let mut s = scenario(Vec3::new(4000.0, 0.0, -100.0), 0.0);
        s.goal.flight_path = 0.0;
        let (_, k, path) = normalize(&s).unwrap();
        let (wps, tau) = initial_guess(&path, 5, &k).unwrap();
        assert_eq!(tau, 0.0);
        assert_eq!(wps.len(), 4);
        for (i, w) in wps.iter().enumerate() {
            assert_relative_eq!(*w * k.length, Vec3::new(800.0 * (i + 1) as f64, 0.0, -100.0), epsilon = 1e-9);
        }
    }

    #[test]
    fn guess_lies_on_path() {
        let s = scenario(Vec3::new(2000.0, 2500.0, -400.0), 170.0);
        let (_, k, path) = normalize(&s).unwrap();
        let (wps, _) = initial_guess(&path, 9, &k).unwrap();
        let dense: Vec<Vec3> = (0..=20000).map(|i| path.point_at(i as f64 / 20000.0)).collect();
        for w in &wps {
            let d = dense.iter().map(|p| (p - w * k.length).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < path.length() / 20000.0);
        }
    }
}

//! Scenario description, penalty integrands and the trapezoidal objective.
//!
//! Every inequality constraint is relaxed into an integral penalty of the
//! form `max{φ, 0}^ϖ` with `φ` normalized by the constraint's own range, so
//! all penalties share one magnitude scale. Integrals are approximated with
//! the trapezoidal rule on `κ + 1` uniform nodes per segment.

use serde::{Deserialize, Serialize};

use crate::flat::{self, FlatPoint, FrameVectors, LoadControls, UavState};
use crate::spline::{BasisCache, Boundary, FlatTrajectory, SplineSystem};
use crate::{Error, Result, Vec2, Vec3};

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.max + self.min)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.max - self.min)
    }

    /// Distance outside the interval, zero inside.
    pub fn violation(&self, q: f64) -> f64 {
        (self.min - q).max(q - self.max).max(0.0)
    }

    pub fn contains(&self, q: f64) -> bool {
        self.min <= q && q <= self.max
    }
}

/// State and control bounds. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub speed: Range,
    pub flight_path: Range,
    pub nx: Range,
    pub ny: Range,
    pub nz: Range,
}

impl Bounds {
    /// Bounds used throughout the experiments: V ∈ [30, 40] m/s,
    /// γ ∈ [-10°, 10°], n_x, n_y ∈ [-0.2, 0.2], n_z ∈ [0.8, 1.2].
    pub fn reference() -> Self {
        Self {
            speed: Range::new(30.0, 40.0),
            flight_path: Range::new(-10f64.to_radians(), 10f64.to_radians()),
            nx: Range::new(-0.2, 0.2),
            ny: Range::new(-0.2, 0.2),
            nz: Range::new(0.8, 1.2),
        }
    }

    pub fn loads(&self) -> [Range; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// Minimum turning radius at the slowest speed and largest horizontal load.
    pub fn min_turn_radius(&self, g: f64) -> f64 {
        let ny = self.ny.max.abs().max(self.ny.min.abs());
        self.speed.min.powi(2) / (g * ny)
    }
}

/// Vertical cylinder obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    /// Horizontal center (north, east) [m].
    pub center: Vec2,
    pub radius: f64,
}

impl Obstacle {
    pub fn new(north: f64, east: f64, radius: f64) -> Self {
        Self { center: Vec2::new(north, east), radius }
    }

    /// Horizontal distance from `p` to the cylinder axis.
    pub fn axis_distance(&self, p: &Vec3) -> f64 {
        (p.xy() - self.center).norm()
    }
}

/// Time-related part of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TimeMode {
    /// Minimize flight time, `Q = T`.
    MinTime,
    /// Penalize arrival outside `[min, max]`.
    Window { min: f64, max: f64 },
    /// Duration fixed at `duration`; `T` leaves the decision vector.
    Fixed { duration: f64 },
}

/// Planning problem in consistent units (physical or normalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub start: UavState,
    pub start_controls: LoadControls,
    pub goal: UavState,
    pub goal_controls: LoadControls,
    pub bounds: Bounds,
    pub obstacles: Vec<Obstacle>,
    pub safe_radius: f64,
    pub time_mode: TimeMode,
    pub gravity: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        let b = &self.bounds;
        if !(b.speed.min > 0.0 && b.speed.max > b.speed.min) {
            return bad(format!("speed bounds {:?} must satisfy 0 < min < max", b.speed));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(b.flight_path.min > -half_pi && b.flight_path.max < half_pi && b.flight_path.max > b.flight_path.min) {
            return bad("flight-path bounds must lie strictly inside (-90°, 90°)".into());
        }
        for (name, r) in [("nx", b.nx), ("ny", b.ny), ("nz", b.nz)] {
            if !(r.max > r.min) {
                return bad(format!("{name} bounds must satisfy min < max"));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.radius > 0.0) || !o.center.iter().all(|c| c.is_finite()) {
                return bad(format!("obstacle {i} must have a finite center and positive radius"));
            }
        }
        if !(self.safe_radius >= 0.0) {
            return bad("safe radius must be non-negative".into());
        }
        if !(self.gravity > 0.0) {
            return bad("gravity must be positive".into());
        }
        for (name, s) in [("start", &self.start), ("goal", &self.goal)] {
            if !(s.speed > 0.0) || s.flight_path.abs() >= half_pi || !s.position.iter().all(|c| c.is_finite()) {
                return bad(format!("{name} state must have positive speed and |γ| < 90°"));
            }
        }
        match self.time_mode {
            TimeMode::MinTime => {}
            TimeMode::Window { min, max } if min > 0.0 && max > min => {}
            TimeMode::Fixed { duration } if duration > 0.0 => {}
            m => return bad(format!("invalid time mode {m:?}")),
        }
        Ok(())
    }

    /// Flat-space boundary conditions from the terminal states and controls.
    pub fn boundary(&self) -> Boundary {
        Boundary {
            start: flat::inverse_map(&self.start, &self.start_controls, self.gravity),
            goal: flat::inverse_map(&self.goal, &self.goal_controls, self.gravity),
        }
    }
}

/// Integral cost weights λ_σ. Through [`crate::solve`], `effort` weights
/// `∫jᵀj dt` of the physical trajectory [m²/s⁵] against flight time [s];
/// an [`Objective`] built directly applies every weight in its own units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Weights {
    pub effort: f64,
    pub obstacle: f64,
    pub speed: f64,
    pub flight_path: f64,
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { effort: 1e-3, obstacle: 1e4, speed: 1e3, flight_path: 1e3, nx: 1e3, ny: 1e3, nz: 1e3 }
    }
}

/// Threshold margins ζ_σ as fractions: state/control ranges shrink to
/// `(1 - ζ)` of their half-width, obstacle radii grow by `(1 + ζ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Margins {
    pub obstacle: f64,
    pub speed: f64,
    pub flight_path: f64,
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl Margins {
    pub fn uniform(z: f64) -> Self {
        Self { obstacle: z, speed: z, flight_path: z, nx: z, ny: z, nz: z }
    }
}

impl Default for Margins {
    fn default() -> Self {
        Self::uniform(0.05)
    }
}

/// How many spline segments to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentCount {
    /// `N = max(2, round(k_n · L / R_min))` from the Dubins length `L`.
    Auto { k_n: f64 },
    Fixed(usize),
}

/// Source of the objective gradient used by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    Analytic,
    /// Central differences on the decision vector.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub weights: Weights,
    pub margins: Margins,
    /// κ, quadrature intervals per segment.
    pub samples_per_segment: usize,
    /// ϖ, penalty exponent.
    pub penalty_exponent: u32,
    /// ξ, gradient-norm tolerance (normalized units).
    pub grad_tol: f64,
    /// L-BFGS memory m.
    pub memory: usize,
    pub segments: SegmentCount,
    pub max_iterations: usize,
    pub gradient_mode: GradientMode,
    /// Skip obstacle terms proven inactive on a segment.
    pub filter_inactive: bool,
    /// Singularity guard on the velocity norms (normalized units).
    pub v_eps: f64,
    /// Iterations between refreshes of the curvature preconditioner;
    /// 0 runs plain L-BFGS.
    pub hessian_refresh: usize,
    /// Waypoint coupling kept in the curvature preconditioner.
    pub hessian_bandwidth: usize,
    /// Restarts around a blocking obstacle cluster when no feasible iterate
    /// has appeared within `stall_iterations`.
    pub max_restarts: usize,
    pub stall_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            margins: Margins::default(),
            samples_per_segment: 5,
            penalty_exponent: 3,
            grad_tol: 1e-3,
            memory: 8,
            segments: SegmentCount::Auto { k_n: 1.25 },
            max_iterations: 5000,
            gradient_mode: GradientMode::Analytic,
            filter_inactive: true,
            v_eps: flat::V_EPS,
            hessian_refresh: 25,
            hessian_bandwidth: 12,
            max_restarts: 3,
            stall_iterations: 300,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.samples_per_segment < 2 {
            return bad("samples_per_segment (κ) must be at least 2");
        }
        if self.penalty_exponent < 2 {
            return bad("penalty_exponent (ϖ) must be at least 2");
        }
        let w = &self.weights;
        if [w.effort, w.obstacle, w.speed, w.flight_path, w.nx, w.ny, w.nz].iter().any(|x| !(*x >= 0.0)) {
            return bad("weights must be non-negative");
        }
        let m = &self.margins;
        if [m.speed, m.flight_path, m.nx, m.ny, m.nz].iter().any(|x| !(0.0..1.0).contains(x)) || !(m.obstacle >= 0.0) {
            return bad("margins must lie in [0, 1) (obstacle margin >= 0)");
        }
        if self.memory == 0 {
            return bad("L-BFGS memory must be positive");
        }
        if self.stall_iterations == 0 {
            return bad("stall_iterations must be positive");
        }
        match self.segments {
            SegmentCount::Fixed(0) => return bad("segment count must be positive"),
            SegmentCount::Auto { k_n } if !(k_n > 0.0) => return bad("k_n must be positive"),
            _ => {}
        }
        Ok(())
    }
}

/// Per-term objective values. Integral terms are unweighted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub time: f64,
    pub effort: f64,
    pub obstacle: f64,
    pub speed: f64,
    pub flight_path: f64,
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn integrals(&self) -> [f64; 7] {
        [self.effort, self.obstacle, self.speed, self.flight_path, self.nx, self.ny, self.nz]
    }

    fn finish(mut self, w: &Weights) -> Self {
        let lambdas = [w.effort, w.obstacle, w.speed, w.flight_path, w.nx, w.ny, w.nz];
        self.total = self.time + lambdas.iter().zip(self.integrals()).map(|(l, i)| l * i).sum::<f64>();
        self
    }
}

/// `T = e^𝒯`.
pub fn time_mapping(tau: f64) -> f64 {
    tau.exp()
}

/// `𝒯 = ln T`.
pub fn inverse_time_mapping(duration: f64) -> f64 {
    duration.ln()
}

/// Time cost `Q(T)` and `dQ/dT`.
pub fn time_cost(duration: f64, mode: &TimeMode, exponent: u32) -> (f64, f64) {
    match *mode {
        TimeMode::MinTime => (duration, 1.0),
        TimeMode::Window { min, max } => {
            let c = 0.5 * (min + max);
            let h = 0.5 * (max - min);
            let phi = ((duration - c) / h).powi(2) - 1.0;
            if phi <= 0.0 {
                (0.0, 0.0)
            } else {
                let e = exponent as i32;
                (phi.powi(e), e as f64 * phi.powi(e - 1) * 2.0 * (duration - c) / (h * h))
            }
        }
        TimeMode::Fixed { .. } => (0.0, 0.0),
    }
}

/// `max{φ, 0}^ϖ`
#[inline]
pub fn hinge(phi: f64, exponent: u32) -> f64 {
    if phi > 0.0 {
        phi.powi(exponent as i32)
    } else {
        0.0
    }
}

/// `d/dφ max{φ, 0}^ϖ`
#[inline]
pub fn hinge_derivative(phi: f64, exponent: u32) -> f64 {
    if phi > 0.0 {
        exponent as f64 * phi.powi(exponent as i32 - 1)
    } else {
        0.0
    }
}

/// Two-sided range penalty `φ = ((q − q_c)/(ζ' q_h))² − 1` with
/// `ζ' = 1 − margin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangePenalty {
    pub center: f64,
    /// Shrunk half-width `ζ' q_h`.
    pub half_width: f64,
}

impl RangePenalty {
    pub fn new(range: Range, margin: f64) -> Self {
        Self { center: range.center(), half_width: (1.0 - margin) * range.half_width() }
    }

    #[inline]
    pub fn phi(&self, q: f64) -> f64 {
        ((q - self.center) / self.half_width).powi(2) - 1.0
    }

    /// `dφ/dq`
    #[inline]
    pub fn phi_slope(&self, q: f64) -> f64 {
        2.0 * (q - self.center) / (self.half_width * self.half_width)
    }
}

/// Obstacle with its inflated penalty radius `(1 + ζ_obs)(R + R_safe)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InflatedObstacle {
    pub center: Vec2,
    pub radius: f64,
}

impl InflatedObstacle {
    #[inline]
    pub fn phi(&self, p: &Vec3) -> f64 {
        let d2 = (p.xy() - self.center).norm_squared();
        1.0 - d2 / (self.radius * self.radius)
    }
}

/// All penalty parameters resolved from a scenario and a configuration.
#[derive(Debug, Clone)]
pub struct Penalties {
    pub exponent: u32,
    pub speed: RangePenalty,
    /// Acts on `sin γ`.
    pub flight_path: RangePenalty,
    pub loads: [RangePenalty; 3],
    pub obstacles: Vec<InflatedObstacle>,
    pub gravity: f64,
    pub v_eps: f64,
}

impl Penalties {
    pub fn new(scenario: &Scenario, config: &SolverConfig) -> Self {
        let b = &scenario.bounds;
        let m = &config.margins;
        let sin_range = Range::new(b.flight_path.min.sin(), b.flight_path.max.sin());
        Self {
            exponent: config.penalty_exponent,
            speed: RangePenalty::new(b.speed, m.speed),
            flight_path: RangePenalty::new(sin_range, m.flight_path),
            loads: [
                RangePenalty::new(b.nx, m.nx),
                RangePenalty::new(b.ny, m.ny),
                RangePenalty::new(b.nz, m.nz),
            ],
            obstacles: scenario
                .obstacles
                .iter()
                .map(|o| InflatedObstacle {
                    center: o.center,
                    radius: (1.0 + m.obstacle) * (o.radius + scenario.safe_radius),
                })
                .collect(),
            gravity: scenario.gravity,
            v_eps: config.v_eps,
        }
    }
}

/// `jᵀj`
pub fn jerk_integrand(fp: &FlatPoint) -> f64 {
    fp.j.norm_squared()
}

/// Sum of obstacle penalties over `active` obstacle indices.
pub fn obstacle_integrand(fp: &FlatPoint, pen: &Penalties, active: impl IntoIterator<Item = usize>) -> f64 {
    active.into_iter().map(|j| hinge(pen.obstacles[j].phi(&fp.p), pen.exponent)).sum()
}

pub fn speed_integrand(fp: &FlatPoint, pen: &Penalties) -> Result<f64> {
    let speed = fp.v.norm();
    if speed < pen.v_eps {
        return Err(Error::SingularVelocity(speed));
    }
    Ok(hinge(pen.speed.phi(speed), pen.exponent))
}

/// Penalty on `sin γ = −e3ᵀ r1`.
pub fn gamma_integrand(fp: &FlatPoint, pen: &Penalties) -> Result<f64> {
    let speed = fp.v.norm();
    if speed < pen.v_eps {
        return Err(Error::SingularVelocity(speed));
    }
    Ok(hinge(pen.flight_path.phi(-fp.v.z / speed), pen.exponent))
}

/// Penalty on load factor `l` (0 = x, 1 = y, 2 = z).
pub fn load_integrand(fp: &FlatPoint, pen: &Penalties, l: usize) -> Result<f64> {
    let frame = flat::speed_frame(fp, pen.gravity, pen.v_eps)?;
    Ok(load_integrand_in_frame(&frame, pen, l))
}

fn load_integrand_in_frame(frame: &FrameVectors, pen: &Penalties, l: usize) -> f64 {
    let n = flat::controls_from_frame(frame).as_array()[l];
    hinge(pen.loads[l].phi(n), pen.exponent)
}

/// Terms that can contribute on one segment at the current iterate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActiveSet {
    pub obstacles: Vec<usize>,
    pub speed: bool,
    pub flight_path: bool,
    pub loads: [bool; 3],
}

/// Conservative obstacle pre-filter for one segment: an obstacle is dropped
/// when the bounding circle of the segment's samples stays outside its
/// inflated radius, which implies every sample does.
pub fn active_obstacles(segment: &[FlatPoint], pen: &Penalties, out: &mut Vec<usize>) {
    out.clear();
    let k = segment.len() as f64;
    let center = segment.iter().map(|s| s.p.xy()).sum::<Vec2>() / k;
    let spread = segment.iter().map(|s| (s.p.xy() - center).norm()).fold(0.0, f64::max);
    for (j, o) in pen.obstacles.iter().enumerate() {
        if (center - o.center).norm() - spread < o.radius {
            out.push(j);
        }
    }
}

/// Per-segment active sets for a trajectory.
pub fn filter_active(traj: &FlatTrajectory, scenario: &Scenario, config: &SolverConfig) -> Result<Vec<ActiveSet>> {
    let pen = Penalties::new(scenario, config);
    let cache = BasisCache::new(config.samples_per_segment);
    let samples = traj.samples(&cache);
    let per = cache.values.len();
    samples
        .chunks(per)
        .map(|seg| {
            let mut set = ActiveSet::default();
            active_obstacles(seg, &pen, &mut set.obstacles);
            for fp in seg {
                set.speed |= speed_integrand(fp, &pen)? > 0.0;
                set.flight_path |= gamma_integrand(fp, &pen)? > 0.0;
                let frame = flat::speed_frame(fp, pen.gravity, pen.v_eps)?;
                for l in 0..3 {
                    set.loads[l] |= load_integrand_in_frame(&frame, &pen, l) > 0.0;
                }
            }
            Ok(set)
        })
        .collect()
}

/// Trapezoid weight of node `k` out of `0..=kappa`.
#[inline]
pub fn trapezoid_weight(k: usize, kappa: usize) -> f64 {
    if k == 0 || k == kappa {
        0.5
    } else {
        1.0
    }
}

/// `Σᵢ (T/(κN)) Σₖ ωₖ 𝒢(t_k)` for samples laid out segment-major.
pub fn integral_cost(values: &[f64], segments: usize, kappa: usize, duration: f64) -> f64 {
    assert_eq!(values.len(), segments * (kappa + 1));
    let dt = duration / (kappa * segments) as f64;
    values
        .chunks(kappa + 1)
        .map(|seg| seg.iter().enumerate().map(|(k, g)| trapezoid_weight(k, kappa) * g).sum::<f64>())
        .sum::<f64>()
        * dt
}

/// Evaluation context for one scenario and segment count: the factorized
/// spline system, the basis cache and resolved penalty parameters.
#[derive(Debug, Clone)]
pub struct Objective {
    pub(crate) scenario: Scenario,
    pub(crate) config: SolverConfig,
    pub(crate) system: SplineSystem,
    pub(crate) cache: BasisCache,
    pub(crate) penalties: Penalties,
    pub(crate) boundary: Boundary,
}

impl Objective {
    pub fn new(scenario: &Scenario, config: &SolverConfig, segments: usize) -> Result<Self> {
        scenario.validate()?;
        config.validate()?;
        Ok(Self {
            scenario: scenario.clone(),
            config: config.clone(),
            system: SplineSystem::new(segments)?,
            cache: BasisCache::new(config.samples_per_segment),
            penalties: Penalties::new(scenario, config),
            boundary: scenario.boundary(),
        })
    }

    pub fn segments(&self) -> usize {
        self.system.segments()
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn system(&self) -> &SplineSystem {
        &self.system
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn fixed_duration(&self) -> Option<f64> {
        match self.scenario.time_mode {
            TimeMode::Fixed { duration } => Some(duration),
            _ => None,
        }
    }

    /// Decision-vector length: `3(N − 1) + 1`, or `3(N − 1)` with a fixed duration.
    pub fn dim(&self) -> usize {
        3 * (self.segments() - 1) + usize::from(self.fixed_duration().is_none())
    }

    /// Packs waypoints and `𝒯` into a decision vector.
    pub fn pack(&self, waypoints: &[Vec3], tau: f64) -> Vec<f64> {
        let mut x: Vec<f64> = waypoints.iter().flat_map(|w| w.iter().copied()).collect();
        if self.fixed_duration().is_none() {
            x.push(tau);
        }
        x
    }

    /// Waypoints and duration `T` from a decision vector.
    pub fn unpack(&self, x: &[f64]) -> (Vec<Vec3>, f64) {
        assert_eq!(x.len(), self.dim());
        let wps = x[..3 * (self.segments() - 1)].chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        let duration = match self.fixed_duration() {
            Some(d) => d,
            None => time_mapping(x[x.len() - 1]),
        };
        (wps, duration)
    }

    pub fn trajectory(&self, x: &[f64]) -> FlatTrajectory {
        let (wps, duration) = self.unpack(x);
        FlatTrajectory::new(&self.system, self.boundary, wps, duration)
    }

    /// Objective value at a decision vector.
    pub fn value(&self, x: &[f64]) -> Result<CostBreakdown> {
        let traj = self.trajectory(x);
        self.trajectory_cost(&traj)
    }

    /// Objective with waypoints and `𝒯` given separately.
    pub fn total_cost(&self, waypoints: &[Vec3], tau: f64) -> Result<CostBreakdown> {
        let x = self.pack(waypoints, tau);
        self.value(&x)
    }

    /// Cost of a trajectory, sampling all nodes once and reusing the samples
    /// for every integrand.
    pub fn trajectory_cost(&self, traj: &FlatTrajectory) -> Result<CostBreakdown> {
        let w = &self.config.weights;
        let pen = &self.penalties;
        let n = traj.segments();
        let kappa = self.cache.samples;
        let samples = traj.samples(&self.cache);
        let mut active = Vec::new();
        let mut out = CostBreakdown::default();
        let dt = traj.duration() / (kappa * n) as f64;
        let all: Vec<usize> = (0..pen.obstacles.len()).collect();
        for seg in samples.chunks(kappa + 1) {
            if self.config.filter_inactive {
                active_obstacles(seg, pen, &mut active);
            } else {
                active.clone_from(&all);
            }
            for (k, fp) in seg.iter().enumerate() {
                let q = trapezoid_weight(k, kappa) * dt;
                out.effort += q * jerk_integrand(fp);
                out.obstacle += q * obstacle_integrand(fp, pen, active.iter().copied());
                out.speed += q * speed_integrand(fp, pen)?;
                out.flight_path += q * gamma_integrand(fp, pen)?;
                let frame = flat::speed_frame(fp, pen.gravity, pen.v_eps)?;
                out.nx += q * load_integrand_in_frame(&frame, pen, 0);
                out.ny += q * load_integrand_in_frame(&frame, pen, 1);
                out.nz += q * load_integrand_in_frame(&frame, pen, 2);
            }
        }
        out.time = time_cost(traj.duration(), &self.scenario.time_mode, pen.exponent).0;
        Ok(out.finish(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GRAVITY;
    use approx::assert_relative_eq;

    fn pen_with(bounds: Bounds, obstacles: Vec<Obstacle>, margin: f64) -> Penalties {
        let scenario = Scenario {
            start: UavState::new(Vec3::zeros(), 35.0, 0.0, 0.0),
            start_controls: LoadControls::LEVEL,
            goal: UavState::new(Vec3::new(1000.0, 0.0, 0.0), 35.0, 0.0, 0.0),
            goal_controls: LoadControls::LEVEL,
            bounds,
            obstacles,
            safe_radius: 100.0,
            time_mode: TimeMode::MinTime,
            gravity: GRAVITY,
        };
        let config = SolverConfig { margins: Margins::uniform(margin), ..Default::default() };
        Penalties::new(&scenario, &config)
    }

    fn moving(v: Vec3) -> FlatPoint {
        FlatPoint { v, ..Default::default() }
    }

    #[test]
    fn time_cost_modes() {
        assert_eq!(time_cost(167.16, &TimeMode::MinTime, 3), (167.16, 1.0));
        let w = TimeMode::Window { min: 100.0, max: 200.0 };
        assert_eq!(time_cost(150.0, &w, 3).0, 0.0);
        assert_relative_eq!(time_cost(220.0, &w, 3).0, 0.96f64.powi(3), epsilon = 1e-12);
        assert_relative_eq!(time_cost(220.0, &w, 3).0, 0.884736, epsilon = 1e-12);
        assert_eq!(time_cost(50.0, &TimeMode::Fixed { duration: 50.0 }, 3), (0.0, 0.0));
        // derivative against central difference
        let h = 1e-6;
        let fd = (time_cost(220.0 + h, &w, 3).0 - time_cost(220.0 - h, &w, 3).0) / (2.0 * h);
        assert_relative_eq!(time_cost(220.0, &w, 3).1, fd, epsilon = 1e-7);
    }

    #[test]
    fn time_mapping_round_trip() {
        assert_eq!(time_mapping(0.0), 1.0);
        assert_relative_eq!(time_mapping(inverse_time_mapping(167.16)), 167.16, epsilon = 1e-12);
        for t in [-3.0, -0.1, 0.0, 0.7, 4.2] {
            assert!((inverse_time_mapping(time_mapping(t)) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_constant_and_linear() {
        let (n, kappa, duration) = (4, 5, 3.0);
        let ones = vec![1.0; n * (kappa + 1)];
        assert_relative_eq!(integral_cost(&ones, n, kappa, duration), duration, epsilon = 1e-14);
        // 𝒢 = 2τ on one unit segment integrates to 1
        let lin: Vec<f64> = (0..=kappa).map(|k| 2.0 * k as f64 / kappa as f64).collect();
        assert_relative_eq!(integral_cost(&lin, 1, kappa, 1.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn jerk_integrand_values() {
        let fp = FlatPoint { j: Vec3::new(1.0, 2.0, 2.0), ..Default::default() };
        assert_eq!(jerk_integrand(&fp), 9.0);
        assert_eq!(jerk_integrand(&moving(Vec3::new(1.0, 0.0, 0.0))), 0.0);
    }

    #[test]
    fn obstacle_integrand_values() {
        let pen = pen_with(Bounds::reference(), vec![Obstacle::new(0.0, 0.0, 300.0)], 0.05);
        let rho = 1.05 * 400.0;
        let at = |d: f64| FlatPoint { p: Vec3::new(d, 0.0, -123.0), ..Default::default() };
        assert_eq!(obstacle_integrand(&at(2.0 * rho), &pen, [0]), 0.0);
        assert_eq!(obstacle_integrand(&at(0.0), &pen, [0]), 1.0);
        assert!(obstacle_integrand(&at(rho), &pen, [0]).abs() < 1e-30);
        // altitude does not matter
        let mut p = at(0.5 * rho);
        let g1 = obstacle_integrand(&p, &pen, [0]);
        p.p.z = 5000.0;
        assert_eq!(obstacle_integrand(&p, &pen, [0]), g1);
    }

    #[test]
    fn speed_integrand_values() {
        let pen = pen_with(Bounds::reference(), vec![], 0.05);
        assert_eq!(speed_integrand(&moving(Vec3::new(35.0, 0.0, 0.0)), &pen).unwrap(), 0.0);
        let g = speed_integrand(&moving(Vec3::new(40.0, 0.0, 0.0)), &pen).unwrap();
        let phi = (1.0f64 / 0.95).powi(2) - 1.0;
        assert_relative_eq!(g, phi.powi(3), epsilon = 1e-15);
        assert_relative_eq!(g, 1.26e-3, epsilon = 1e-5);
        assert!(matches!(speed_integrand(&moving(Vec3::zeros()), &pen), Err(Error::SingularVelocity(_))));
    }

    #[test]
    fn gamma_and_load_integrands_vanish_in_level_flight() {
        let pen = pen_with(Bounds::reference(), vec![], 0.05);
        let fp = moving(Vec3::new(35.0, 0.0, 0.0));
        assert_eq!(gamma_integrand(&fp, &pen).unwrap(), 0.0);
        for l in 0..3 {
            assert_eq!(load_integrand(&fp, &pen, l).unwrap(), 0.0);
        }
        // steep climb violates the flight-path bound
        let climb = moving(Vec3::new(30.0, 0.0, -15.0));
        assert!(gamma_integrand(&climb, &pen).unwrap() > 0.0);
    }

    #[test]
    fn penalties_are_scale_invariant() {
        let b = Bounds::reference();
        let pen = pen_with(b, vec![Obstacle::new(10.0, 20.0, 300.0)], 0.05);
        let s = 0.01;
        let mut bs = b;
        bs.speed = Range::new(b.speed.min * s, b.speed.max * s);
        let scaled = Scenario {
            start: UavState::new(Vec3::zeros(), 35.0 * s, 0.0, 0.0),
            start_controls: LoadControls::LEVEL,
            goal: UavState::new(Vec3::new(10.0, 0.0, 0.0), 35.0 * s, 0.0, 0.0),
            goal_controls: LoadControls::LEVEL,
            bounds: bs,
            obstacles: vec![Obstacle::new(10.0 * s, 20.0 * s, 300.0 * s)],
            safe_radius: 100.0 * s,
            time_mode: TimeMode::MinTime,
            gravity: GRAVITY,
        };
        let pen_s = Penalties::new(&scaled, &SolverConfig::default());
        for v in [28.0, 33.0, 39.9, 41.0] {
            let phi = pen.speed.phi(v);
            assert_relative_eq!(pen_s.speed.phi(v * s), phi, epsilon = 1e-12);
        }
        let p = Vec3::new(100.0, 200.0, 0.0);
        assert_relative_eq!(pen_s.obstacles[0].phi(&(p * s)), pen.obstacles[0].phi(&p), epsilon = 1e-12);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut sc = Scenario {
            start: UavState::new(Vec3::zeros(), 35.0, 0.0, 0.0),
            start_controls: LoadControls::LEVEL,
            goal: UavState::new(Vec3::new(1000.0, 0.0, 0.0), 35.0, 0.0, 0.0),
            goal_controls: LoadControls::LEVEL,
            bounds: Bounds::reference(),
            obstacles: vec![],
            safe_radius: 100.0,
            time_mode: TimeMode::MinTime,
            gravity: GRAVITY,
        };
        assert!(sc.validate().is_ok());
        sc.bounds.speed.min = 0.0;
        assert!(sc.validate().is_err());
        sc.bounds = Bounds::reference();
        sc.obstacles.push(Obstacle::new(0.0, 0.0, -1.0));
        assert!(sc.validate().is_err());
        let cfg = SolverConfig { penalty_exponent: 1, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { samples_per_segment: 1, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}

//! The optimization loop: normalize, seed from Dubins, run L-BFGS until the
//! trajectory is feasible against the original bounds and stationary.

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::costs::{CostBreakdown, GradientMode, Objective, Scenario, SolverConfig};
use crate::detour::detour;
use crate::dubins::DubinsPath3D;
use crate::flat::{self, FlatPoint};
use crate::gradients::finite_difference_gradient;
use crate::init::{self, Scaling};
use crate::lbfgs::{self, LbfgsConfig, Status};
use crate::precond::Preconditioner;
use crate::spline::{BasisCache, FlatTrajectory};
use crate::{Error, Result};

/// Step used when the optimizer runs on finite-difference gradients.
pub const FD_STEP: f64 = 1e-6;
/// Largest residual still counted as satisfied; absorbs rounding when a
/// boundary state sits exactly on a bound.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Largest violation of each constraint family over all quadrature samples,
/// in the units of the scenario that was checked. Zero means satisfied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Residuals {
    /// `max(R_obs + R_safe − d_axis, 0)`.
    pub obstacle: f64,
    pub speed: f64,
    /// Radians.
    pub flight_path: f64,
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl Residuals {
    pub fn as_array(&self) -> [f64; 6] {
        [self.obstacle, self.speed, self.flight_path, self.nx, self.ny, self.nz]
    }

    /// Converts length and speed residuals by the given scales.
    pub fn rescaled(&self, length: f64, speed: f64) -> Residuals {
        Residuals { obstacle: self.obstacle * length, speed: self.speed * speed, ..*self }
    }

    pub fn max_dimensionless(&self, scenario: &Scenario) -> f64 {
        let b = &scenario.bounds;
        let worst_obstacle = scenario.obstacles.iter().map(|o| o.radius).fold(0.0, f64::max) + scenario.safe_radius;
        let obs = if worst_obstacle > 0.0 { self.obstacle / worst_obstacle } else { 0.0 };
        [obs, self.speed / b.speed.max, self.flight_path, self.nx, self.ny, self.nz].into_iter().fold(0.0, f64::max)
    }

    /// Every residual within [`FEASIBILITY_TOL`]; meant for normalized or
    /// dimensionless units.
    pub fn is_satisfied(&self) -> bool {
        self.as_array().iter().all(|&r| r <= FEASIBILITY_TOL)
    }
}

/// Checks every quadrature sample against the unshrunk bounds.
/// A sample where the speed frame is undefined counts as a speed violation.
pub fn feasibility_check(traj: &FlatTrajectory, scenario: &Scenario, config: &SolverConfig) -> Residuals {
    let cache = BasisCache::new(config.samples_per_segment);
    residuals_at(&traj.samples(&cache), scenario, config.v_eps)
}

fn residuals_at(samples: &[FlatPoint], scenario: &Scenario, v_eps: f64) -> Residuals {
    let b = &scenario.bounds;
    let mut r = Residuals::default();
    for fp in samples {
        for o in &scenario.obstacles {
            r.obstacle = r.obstacle.max(o.radius + scenario.safe_radius - o.axis_distance(&fp.p));
        }
        let (state, u) = match (flat::map_state(fp, v_eps), flat::map_controls(fp, scenario.gravity, v_eps)) {
            (Ok(s), Ok(u)) => (s, u),
            _ => {
                r.speed = r.speed.max(b.speed.min);
                continue;
            }
        };
        r.speed = r.speed.max(b.speed.violation(state.speed));
        r.flight_path = r.flight_path.max(b.flight_path.violation(state.flight_path));
        r.nx = r.nx.max(b.nx.violation(u.nx));
        r.ny = r.ny.max(b.ny.violation(u.ny));
        r.nz = r.nz.max(b.nz.violation(u.nz));
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// Feasible and `‖∇𝒥‖ ≤ ξ`.
    Converged,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Feasible and stationary.
    pub converged: bool,
    pub feasible: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub evaluations: usize,
    /// Iteration index (0 = initial guess) at which the trajectory first
    /// satisfied every constraint.
    pub first_feasible: Option<usize>,
    pub wall_time: Duration,
    /// Wall time of each accepted iteration.
    pub iteration_times: Vec<Duration>,
    /// Objective terms in normalized units.
    pub cost: CostBreakdown,
    /// 𝒥 in physical units [s].
    pub objective: f64,
    pub grad_norm: f64,
    /// Detour restarts taken.
    pub restarts: usize,
    /// Physical units.
    pub residuals: Residuals,
    pub segments: usize,
    /// Physical flight time [s].
    pub duration: f64,
}

impl SolveReport {
    pub fn median_iteration_time(&self) -> Option<Duration> {
        let mut t = self.iteration_times.clone();
        if t.is_empty() {
            return None;
        }
        t.sort();
        Some(t[t.len() / 2])
    }
}

/// Solver output. Carries both the physical trajectory and its normalized
/// counterpart with the scaling that links them.
#[derive(Debug, Clone)]
pub struct Solution {
    pub report: SolveReport,
    pub trajectory: FlatTrajectory,
    pub normalized: FlatTrajectory,
    pub scaling: Scaling,
    pub scenario: Scenario,
}

/// A normalized problem ready for optimization.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Objective,
    pub scaling: Scaling,
    pub path: DubinsPath3D,
    pub x0: Vec<f64>,
}

impl Problem {
    pub fn new(scenario: &Scenario, config: &SolverConfig) -> Result<Self> {
        scenario.validate()?;
        config.validate()?;
        let (normalized, scaling, path) = init::normalize(scenario)?;
        let segments = init::segment_count(config.segments, &path);
        Self::with_scaling(&normalized, config, scaling, path, segments)
    }

    fn with_scaling(
        normalized: &Scenario,
        config: &SolverConfig,
        scaling: Scaling,
        path: DubinsPath3D,
        segments: usize,
    ) -> Result<Self> {
        let mut config = config.clone();
        config.weights.effort *= scaling.effort_factor();
        let objective = Objective::new(normalized, &config, segments)?;
        let (waypoints, tau) = init::initial_guess(&path, segments, &scaling)?;
        let x0 = objective.pack(&waypoints, tau);
        Ok(Self { objective, scaling, path, x0 })
    }

    /// Same problem normalized with a different spatial scale.
    pub fn rescaled(scenario: &Scenario, config: &SolverConfig, length_factor: f64) -> Result<Self> {
        let base = Self::new(scenario, config)?;
        let scaling = Scaling::new(base.scaling.length * length_factor, scenario.bounds.speed.max);
        let normalized = scaling.apply(scenario);
        let mut p = Self::with_scaling(&normalized, config, scaling, base.path, base.objective.segments())?;
        // keep the physical initial duration
        if let Some(last) = (p.objective.fixed_duration().is_none()).then(|| p.x0.len() - 1) {
            p.x0[last] = (base.scaling.time / scaling.time).ln();
        }
        Ok(p)
    }

    pub fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        evaluate(&self.objective, x, grad)
    }

    pub fn physical_scenario(&self) -> Scenario {
        self.scaling.revert(self.objective.scenario())
    }

    /// Runs the optimization loop from `x0`. If no feasible iterate appears
    /// within `stall_iterations`, the waypoints are moved around the
    /// obstacle cluster blocking the path and the iteration restarts with a
    /// fresh curvature history; all rounds share one iteration budget.
    /// Every `hessian_refresh` iterations the preconditioner is re-estimated
    /// at the current iterate and the L-BFGS memory is cleared.
    pub fn run(&self) -> Result<Solution> {
        let started = Instant::now();
        let obj = &self.objective;
        let config = obj.config().clone();
        let scenario = obj.scenario().clone();
        let refresh = config.hessian_refresh;
        let mut precond = Preconditioner::identity();
        let mut x = self.x0.clone();
        let mut first_feasible = None;
        let mut converged = false;
        let mut iteration_times = Vec::new();
        let (mut iterations, mut evaluations, mut restarts) = (0, 0, 0);
        let mut restarted_at = 0;
        let mut last_tick = Instant::now();
        let (state, status) = loop {
            if refresh > 0 {
                precond = Preconditioner::build(|x, g| evaluate(obj, x, g), &x, obj.segments() - 1, config.hessian_bandwidth)?;
            }
            let budget = config.max_iterations - iterations;
            let cfg = LbfgsConfig {
                memory: config.memory,
                max_iterations: if refresh > 0 { budget.min(refresh) } else { budget },
                // stationarity alone does not end the loop
                grad_tol: 0.0,
                ..Default::default()
            };
            let mut stalled = false;
            let result = lbfgs::minimize_preconditioned(
                |x, g| evaluate(obj, x, g),
                x,
                &cfg,
                |v| precond.apply(v),
                |state| {
                    // round setup counts toward the round's first iteration
                    if state.iteration > 0 {
                        let now = Instant::now();
                        iteration_times.push(now - last_tick);
                        last_tick = now;
                    }
                    let stationary = state.grad_norm() <= config.grad_tol;
                    if first_feasible.is_none() || stationary {
                        let feasible = feasibility_check(&obj.trajectory(&state.x), &scenario, &config).is_satisfied();
                        if feasible && first_feasible.is_none() {
                            first_feasible = Some(iterations + state.iteration);
                        }
                        if feasible && stationary {
                            converged = true;
                            return ControlFlow::Break(());
                        }
                    }
                    // an infeasible stationary point is a stall too
                    if first_feasible.is_none()
                        && restarts < config.max_restarts
                        && (stationary || iterations + state.iteration - restarted_at >= config.stall_iterations)
                    {
                        stalled = true;
                        return ControlFlow::Break(());
                    }
                    ControlFlow::Continue(())
                },
            )?;
            let state = result.state;
            iterations += state.iteration;
            evaluations += state.evaluations;
            let retry = match result.status {
                Status::MaxIterations => true,
                Status::LineSearchFailure => state.iteration > 0,
                _ => false,
            };
            if refresh > 0 && !converged && !stalled && iterations < config.max_iterations && retry {
                x = state.x.clone();
                continue;
            }
            // no descent left before any feasible iterate: leave the basin
            if result.status == Status::LineSearchFailure && first_feasible.is_none() && restarts < config.max_restarts {
                stalled = true;
            }
            match stalled.then(|| detour(obj, &state.x)).flatten() {
                Some(next) if iterations < config.max_iterations => {
                    restarts += 1;
                    restarted_at = iterations;
                    x = next;
                }
                _ => break (state, result.status),
            }
        };
        let termination = match (converged, status) {
            (true, _) => Termination::Converged,
            (false, Status::LineSearchFailure) => Termination::LineSearchFailure,
            _ => Termination::MaxIterations,
        };
        let normalized = obj.trajectory(&state.x);
        let residuals_n = feasibility_check(&normalized, &scenario, &config);
        let feasible = residuals_n.is_satisfied();
        let cost = obj.value(&state.x)?;
        let s = self.scaling;
        let trajectory = normalized.scaled(s.length, s.time);
        let report = SolveReport {
            converged,
            feasible,
            termination,
            iterations,
            evaluations,
            first_feasible,
            wall_time: started.elapsed(),
            iteration_times,
            cost,
            objective: cost.total * s.time,
            grad_norm: state.grad_norm(),
            restarts,
            residuals: residuals_n.rescaled(s.length, s.speed()),
            segments: obj.segments(),
            duration: trajectory.duration(),
        };
        let solution = Solution { report, trajectory, normalized, scaling: s, scenario: self.physical_scenario() };
        if feasible {
            Ok(solution)
        } else {
            Err(Error::Infeasible(Box::new(solution)))
        }
    }
}

fn evaluate(obj: &Objective, x: &[f64], grad: &mut [f64]) -> Result<f64> {
    match obj.config().gradient_mode {
        GradientMode::Analytic => Ok(obj.value_and_gradient(x, grad)?.total),
        GradientMode::FiniteDifference => finite_difference_gradient(obj, x, FD_STEP, grad),
    }
}

/// Plans a trajectory for `scenario`. Returns [`Error::Infeasible`] (holding
/// the best iterate) when the iteration budget runs out before the
/// constraints are met; a feasible but non-stationary result is returned as
/// `Ok` with `converged = false`.
pub fn solve(scenario: &Scenario, config: &SolverConfig) -> Result<Solution> {
    Problem::new(scenario, config)?.run()
}

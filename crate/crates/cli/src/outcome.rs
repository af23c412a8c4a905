//! One solve reduced to the numbers the bench and sweep tables report.

use std::time::Instant;

use flatfw_core::{solve, Error, Scenario, Solution, SolverConfig};
use serde::Serialize;

use crate::metrics::{obstacle_violation, smoothness};

/// Grid step [s] for the obstacle-violation integral.
pub const METRIC_DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub feasible: bool,
    pub converged: bool,
    /// 𝒥 [s].
    pub objective: f64,
    /// Time cost `Q` in normalized units.
    pub time_cost: f64,
    /// [s]
    pub flight_time: f64,
    /// Wall time of the solve [s].
    pub cpu_time: f64,
    pub iterations: usize,
    pub first_feasible: Option<usize>,
    pub restarts: usize,
    pub segments: usize,
    /// Largest constraint violation, dimensionless.
    pub max_residual: f64,
    /// `∫ max(1 − d_obs/R_safe, 0) dt` [s].
    pub x_obs: f64,
    /// `∫ jᵀj dt` [m²/s⁵].
    pub smoothness: f64,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.feasible && self.converged
    }

    fn failed(cpu_time: f64) -> Self {
        let nan = f64::NAN;
        Self {
            feasible: false,
            converged: false,
            objective: nan,
            time_cost: nan,
            flight_time: nan,
            cpu_time,
            iterations: 0,
            first_feasible: None,
            restarts: 0,
            segments: 0,
            max_residual: nan,
            x_obs: nan,
            smoothness: nan,
        }
    }

    fn from_solution(sol: &Solution, cpu_time: f64) -> Self {
        let r = &sol.report;
        Self {
            feasible: r.feasible,
            converged: r.converged,
            objective: r.objective,
            time_cost: r.cost.time,
            flight_time: r.duration,
            cpu_time,
            iterations: r.iterations,
            first_feasible: r.first_feasible,
            restarts: r.restarts,
            segments: r.segments,
            max_residual: r.residuals.max_dimensionless(&sol.scenario),
            x_obs: obstacle_violation(&sol.trajectory, &sol.scenario, METRIC_DT),
            smoothness: smoothness(&sol.trajectory),
        }
    }
}

/// Solves and measures. Infeasible results keep their final iterate's
/// metrics; other errors yield a failed record with `NaN` metrics.
pub fn evaluate(scenario: &Scenario, config: &SolverConfig) -> (Outcome, Option<Error>) {
    let started = Instant::now();
    let result = solve(scenario, config);
    let cpu = started.elapsed().as_secs_f64();
    match result {
        Ok(sol) => (Outcome::from_solution(&sol, cpu), None),
        Err(Error::Infeasible(sol)) => (Outcome::from_solution(&sol, cpu), None),
        Err(e) => (Outcome::failed(cpu), Some(e)),
    }
}

//! One-parameter sweeps of the solver settings.

use std::fmt;
use std::str::FromStr;

use flatfw_core::{Scenario, SegmentCount, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::outcome::{evaluate, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Segment count `N`.
    Segments,
    /// Obstacle weight λ_obs.
    ObstacleWeight,
    /// Effort weight λ_e.
    EffortWeight,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Segments => "N",
            Self::ObstacleWeight => "lambda-obs",
            Self::EffortWeight => "lambda-e",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(&self, base: &SolverConfig, value: f64) -> Result<SolverConfig, String> {
        let mut cfg = base.clone();
        match self {
            Self::Segments => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(format!("N must be a positive integer, got {value}"));
                }
                cfg.segments = SegmentCount::Fixed(value as usize);
            }
            Self::ObstacleWeight => cfg.weights.obstacle = value,
            Self::EffortWeight => cfg.weights.effort = value,
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "N" | "n" => Ok(Self::Segments),
            "lambda-obs" => Ok(Self::ObstacleWeight),
            "lambda-e" => Ok(Self::EffortWeight),
            _ => Err(format!("unknown sweep parameter {s:?} (expected N, lambda-obs or lambda-e)")),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub success: bool,
    pub feasible: bool,
    pub converged: bool,
    pub objective: f64,
    pub time_cost: f64,
    pub flight_time: f64,
    pub cpu_time: f64,
    pub iterations: usize,
    pub segments: usize,
    pub x_obs: f64,
    pub smoothness: f64,
}

impl SweepPoint {
    fn new(value: f64, o: &Outcome) -> Self {
        Self {
            value,
            success: o.success(),
            feasible: o.feasible,
            converged: o.converged,
            objective: o.objective,
            time_cost: o.time_cost,
            flight_time: o.flight_time,
            cpu_time: o.cpu_time,
            iterations: o.iterations,
            segments: o.segments,
            x_obs: o.x_obs,
            smoothness: o.smoothness,
        }
    }
}

/// Solves `scenario` once per value, in parallel unless `sequential`, and
/// returns the points in `values` order. Sequential runs give cleaner
/// timings.
pub fn sweep(
    param: SweepParam,
    values: &[f64],
    scenario: &Scenario,
    base: &SolverConfig,
    sequential: bool,
) -> Result<Vec<SweepPoint>, String> {
    let configs = values.iter().map(|&v| param.apply(base, v)).collect::<Result<Vec<_>, _>>()?;
    let run = |(v, cfg): (&f64, &SolverConfig)| SweepPoint::new(*v, &evaluate(scenario, cfg).0);
    Ok(if sequential {
        values.iter().zip(&configs).map(run).collect()
    } else {
        values.par_iter().zip(configs.par_iter()).map(run).collect()
    })
}

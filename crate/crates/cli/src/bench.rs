//! Monte Carlo benchmark over random obstacle fields of growing size.

use std::io::Write;

use flatfw_core::SolverConfig;
use rayon::prelude::*;
use serde::Serialize;

use crate::outcome::{evaluate, Outcome};
use crate::scenarios::bench_group;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Group indices, each `≥ 1`.
    pub groups: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

/// One benchmark solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub scenario_id: String,
    pub group: usize,
    pub obstacles: usize,
    pub seed: u64,
    pub success: bool,
    pub feasible: bool,
    pub converged: bool,
    pub objective: f64,
    pub flight_time: f64,
    pub cpu_time: f64,
    pub iterations: usize,
    pub first_feasible: Option<usize>,
    pub restarts: usize,
    pub max_residual: f64,
    pub x_obs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: usize,
    pub mean_obstacles: f64,
    pub runs: usize,
    pub success_rate: f64,
    pub mean_cpu_time: f64,
    pub p50_cpu_time: f64,
    pub p90_cpu_time: f64,
    pub max_cpu_time: f64,
    /// Over successful runs; `NaN` if there are none.
    pub mean_objective: f64,
    pub mean_iterations: f64,
}

/// Seed of run `run`; shared by all groups.
pub fn run_seed(base: u64, run: usize) -> u64 {
    base.wrapping_add(run as u64)
}

/// Solves every `(group, run)` pair in parallel. Results come back in
/// group-major, run-minor order.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchResult> {
    let jobs: Vec<(usize, u64)> = cfg.groups.iter().flat_map(|&g| (0..cfg.runs).map(move |r| (g, run_seed(cfg.seed, r)))).collect();
    jobs.par_iter().map(|&(group, seed)| run_one(group, seed, &cfg.solver)).collect()
}

pub fn run_one(group: usize, seed: u64, solver: &SolverConfig) -> BenchResult {
    let scenario = bench_group(group, seed);
    let (o, _) = evaluate(&scenario, solver);
    record(group, seed, scenario.obstacles.len(), &o)
}

fn record(group: usize, seed: u64, obstacles: usize, o: &Outcome) -> BenchResult {
    BenchResult {
        scenario_id: format!("g{group}-s{seed}"),
        group,
        obstacles,
        seed,
        success: o.success(),
        feasible: o.feasible,
        converged: o.converged,
        objective: o.objective,
        flight_time: o.flight_time,
        cpu_time: o.cpu_time,
        iterations: o.iterations,
        first_feasible: o.first_feasible,
        restarts: o.restarts,
        max_residual: o.max_residual,
        x_obs: o.x_obs,
    }
}

/// Nearest-rank percentile of sorted data, `q ∈ [0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Per-group aggregates in order of first appearance. Sums run
/// sequentially in result order, so the output does not depend on thread
/// scheduling.
pub fn summarize(results: &[BenchResult]) -> Vec<GroupSummary> {
    let mut groups: Vec<usize> = Vec::new();
    for r in results {
        if !groups.contains(&r.group) {
            groups.push(r.group);
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let rs: Vec<&BenchResult> = results.iter().filter(|r| r.group == g).collect();
            let mut cpu: Vec<f64> = rs.iter().map(|r| r.cpu_time).collect();
            cpu.sort_by(f64::total_cmp);
            GroupSummary {
                group: g,
                mean_obstacles: mean(rs.iter().map(|r| r.obstacles as f64)),
                runs: rs.len(),
                success_rate: rs.iter().filter(|r| r.success).count() as f64 / rs.len() as f64,
                mean_cpu_time: mean(rs.iter().map(|r| r.cpu_time)),
                p50_cpu_time: percentile(&cpu, 0.5),
                p90_cpu_time: percentile(&cpu, 0.9),
                max_cpu_time: cpu.last().copied().unwrap_or(f64::NAN),
                mean_objective: mean(rs.iter().filter(|r| r.success).map(|r| r.objective)),
                mean_iterations: mean(rs.iter().map(|r| r.iterations as f64)),
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

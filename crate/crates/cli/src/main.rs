use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flatfw_cli::bench::{run_bench, summarize, write_csv, BenchConfig};
use flatfw_cli::export::export_trajectory;
use flatfw_cli::gradcheck::{grad_check, TOLERANCE};
use flatfw_cli::metrics::{min_clearance, obstacle_violation, smoothness};
use flatfw_cli::outcome::METRIC_DT;
use flatfw_cli::scenario_file::ScenarioFile;
use flatfw_cli::scenarios;
use flatfw_cli::sweep::{sweep, SweepParam};
use flatfw_core::{solve, Error, Scenario, Solution, SolverConfig};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INVALID: u8 = 3;

/// Flatness-based trajectory optimization for fixed-wing UAVs.
///
/// Tables go to stdout (or --out) as CSV; summaries go to stderr.
#[derive(Parser)]
#[command(name = "flatfw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one trajectory. Exit code 2 if the result is infeasible.
    Solve {
        /// Scenario file, or a built-in: penetration, two-cylinder,
        /// group<i>[:seed].
        scenario: String,
        /// Trajectory CSV destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sample spacing of the trajectory CSV [s].
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
    /// Monte Carlo benchmark over random obstacle fields.
    Bench {
        #[arg(long, default_value_t = 8)]
        groups: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-run CSV destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-group summary CSV destination.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Re-solve one scenario across values of a solver parameter.
    Sweep {
        /// N, lambda-obs or lambda-e.
        #[arg(long)]
        param: SweepParam,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Scenario file or built-in name; the two-cylinder case by default.
        #[arg(long, default_value = "two-cylinder")]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve one value at a time for cleaner timings.
        #[arg(long)]
        sequential: bool,
    },
    /// Compare the analytic gradient with central differences.
    GradCheck {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in scenario as a scenario file.
    Scenario {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure that maps to a non-zero exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Self { code: EXIT_INVALID, message: message.to_string() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self { code: 1, message: format!("{}: {e}", path.display()) }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Solve { scenario, out, dt } => solve_cmd(&scenario, out.as_deref(), dt),
        Command::Bench { groups, runs, seed, out, summary } => bench_cmd(groups, runs, seed, out.as_deref(), summary.as_deref()),
        Command::Sweep { param, values, scenario, out, sequential } => sweep_cmd(param, &values, &scenario, out.as_deref(), sequential),
        Command::GradCheck { samples, seed, out } => grad_check_cmd(samples, seed, out.as_deref()),
        Command::Scenario { name, out } => {
            let (s, cfg, seed) = builtin(&name).ok_or_else(|| Failure::invalid(format!("unknown built-in scenario {name:?}")))?;
            let text = ScenarioFile::from_scenario(&s, &cfg, seed).to_toml().map_err(Failure::invalid)?;
            write_text(out.as_deref(), &text)?;
            Ok(0)
        }
    }
}

/// Built-in scenario with its solver settings and seed.
fn builtin(name: &str) -> Option<(Scenario, SolverConfig, u64)> {
    match name {
        "penetration" => Some((scenarios::penetration(), SolverConfig::default(), scenarios::PENETRATION_SEED)),
        "two-cylinder" => Some((scenarios::two_cylinder(), scenarios::two_cylinder_config(), 0)),
        _ => {
            let rest = name.strip_prefix("group")?;
            let (g, seed) = rest.split_once(':').unwrap_or((rest, "0"));
            let (g, seed): (usize, u64) = (g.parse().ok()?, seed.parse().ok()?);
            (g >= 1).then(|| (scenarios::bench_group(g, seed), SolverConfig::default(), seed))
        }
    }
}

fn load(name: &str) -> Result<(Scenario, SolverConfig), Failure> {
    if let Some((s, cfg, _)) = builtin(name) {
        return Ok((s, cfg));
    }
    ScenarioFile::load(name).and_then(|f| f.build()).map_err(Failure::invalid)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| Failure::io(p, e))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    output(path)?.write_all(text.as_bytes()).map_err(|e| Failure::io(path.unwrap_or(Path::new("<stdout>")), e))
}

fn write_table<T: serde::Serialize>(path: Option<&Path>, rows: &[T]) -> Result<(), Failure> {
    write_csv(rows, output(path)?).map_err(|e| Failure::io(path.unwrap_or(Path::new("<stdout>")), e))
}

fn solve_cmd(name: &str, out: Option<&Path>, dt: f64) -> Result<u8, Failure> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Failure::invalid("--dt must be positive"));
    }
    let (scenario, config) = load(name)?;
    let (sol, code) = match solve(&scenario, &config) {
        Ok(sol) => (sol, 0),
        Err(Error::Infeasible(sol)) => (*sol, EXIT_INFEASIBLE),
        Err(e) => return Err(Failure::invalid(e)),
    };
    summarize_solution(&sol, &scenario);
    match out {
        Some(p) => export_trajectory(&sol.trajectory, &scenario, dt, p).map_err(|e| Failure::io(p, e))?,
        None => {
            let rows = flatfw_cli::export::trajectory_rows(&sol.trajectory, &scenario, dt);
            flatfw_cli::export::write_rows(&rows, std::io::stdout().lock()).map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
        }
    }
    Ok(code)
}

fn summarize_solution(sol: &Solution, scenario: &Scenario) {
    let r = &sol.report;
    let status = match (r.feasible, r.converged) {
        (true, true) => "converged",
        (true, false) => "feasible, not converged",
        _ => "INFEASIBLE",
    };
    eprintln!("status          {status} ({:?})", r.termination);
    eprintln!("flight time     {:.3} s", r.duration);
    eprintln!("objective       {:.4} s", r.objective);
    eprintln!("segments        {}", r.segments);
    eprintln!("iterations      {} (first feasible: {})", r.iterations, r.first_feasible.map_or("none".into(), |i| i.to_string()));
    eprintln!("gradient norm   {:.3e}", r.grad_norm);
    eprintln!("restarts        {}", r.restarts);
    eprintln!("wall time       {:.1} ms", r.wall_time.as_secs_f64() * 1e3);
    eprintln!("min d_obs       {:.1} m", min_clearance(&sol.trajectory, scenario, METRIC_DT));
    eprintln!("X_obs           {:.4e} s", obstacle_violation(&sol.trajectory, scenario, METRIC_DT));
    eprintln!("E (jerk)        {:.4e}", smoothness(&sol.trajectory));
    eprintln!("max residual    {:.3e}", r.residuals.max_dimensionless(scenario));
}

fn bench_cmd(groups: usize, runs: usize, seed: u64, out: Option<&Path>, summary_out: Option<&Path>) -> Result<u8, Failure> {
    if groups == 0 || runs == 0 {
        return Err(Failure::invalid("--groups and --runs must be positive"));
    }
    let cfg = BenchConfig { groups: (1..=groups).collect(), runs, seed, solver: SolverConfig::default() };
    let results = run_bench(&cfg);
    let summary = summarize(&results);
    write_table(out, &results)?;
    if let Some(p) = summary_out {
        write_table(Some(p), &summary)?;
    }
    eprintln!("{:>5} {:>9} {:>8} {:>10} {:>10} {:>10} {:>12}", "group", "obstacles", "success", "mean cpu", "p50 cpu", "p90 cpu", "mean J");
    for g in &summary {
        eprintln!(
            "{:>5} {:>9.1} {:>7.0}% {:>8.1}ms {:>8.1}ms {:>8.1}ms {:>12.4}",
            g.group,
            g.mean_obstacles,
            100.0 * g.success_rate,
            1e3 * g.mean_cpu_time,
            1e3 * g.p50_cpu_time,
            1e3 * g.p90_cpu_time,
            g.mean_objective
        );
    }
    Ok(0)
}

fn sweep_cmd(param: SweepParam, values: &[f64], name: &str, out: Option<&Path>, sequential: bool) -> Result<u8, Failure> {
    let (scenario, config) = load(name)?;
    let points = sweep(param, values, &scenario, &config, sequential).map_err(Failure::invalid)?;
    write_table(out, &points)?;
    eprintln!("{:>10} {:>8} {:>12} {:>10} {:>10} {:>11} {:>11}", param.name(), "success", "J", "T [s]", "cpu [ms]", "X_obs", "E");
    for p in &points {
        eprintln!(
            "{:>10} {:>8} {:>12.5} {:>10.2} {:>10.1} {:>11.3e} {:>11.3e}",
            p.value,
            p.success,
            p.objective,
            p.flight_time,
            1e3 * p.cpu_time,
            p.x_obs,
            p.smoothness
        );
    }
    Ok(0)
}

fn grad_check_cmd(samples: usize, seed: u64, out: Option<&Path>) -> Result<u8, Failure> {
    let records = grad_check(samples, seed).map_err(Failure::invalid)?;
    write_table(out, &records)?;
    let failed = records.iter().filter(|r| !r.pass).count();
    let worst = records.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    eprintln!("{} / {} instances within {TOLERANCE:e}; worst relative error {worst:.3e}", samples - failed, samples);
    Ok(if failed == 0 { 0 } else { 1 })
}

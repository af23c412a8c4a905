//! Acceptance suite: one PASS/FAIL line per criterion. Timing criteria run
//! one solve at a time so that wall-clock measurements are not contended.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use flatfw_cli::bench::{run_bench, summarize, BenchConfig};
use flatfw_cli::gradcheck::{grad_check, TOLERANCE};
use flatfw_cli::metrics::min_clearance;
use flatfw_cli::scenarios::{bench_group, penetration, two_cylinder, two_cylinder_config, SAFE_RADIUS};
use flatfw_cli::sweep::{sweep, SweepParam};
use flatfw_core::flat::{inverse_map, map_controls, map_state};
use flatfw_core::spline::{Boundary, FlatTrajectory, SplineSystem};
use flatfw_core::costs::GradientMode;
use flatfw_core::solver::FEASIBILITY_TOL;
use flatfw_core::{solve, Bounds, FlatPoint, LoadControls, SegmentCount, SolverConfig, UavState, Vec3, GRAVITY};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative tolerance for calling two time costs equal in the λ_e sweep.
const TIE_TOLERANCE: f64 = 1e-6;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn wrap(angle: f64) -> f64 {
    (angle + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI
}

fn flat_round_trip() -> Verdict {
    let b = Bounds::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let started = Instant::now();
    let mut worst = 0.0f64;
    let samples = 10_000;
    for _ in 0..samples {
        let s = UavState::new(
            Vec3::new(rng.gen_range(-5e3..5e3), rng.gen_range(-5e3..5e3), rng.gen_range(-2e3..0.0)),
            rng.gen_range(b.speed.min..=b.speed.max),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            rng.gen_range(b.flight_path.min..=b.flight_path.max),
        );
        let u = LoadControls::new(rng.gen_range(b.nx.min..=b.nx.max), rng.gen_range(b.ny.min..=b.ny.max), rng.gen_range(b.nz.min..=b.nz.max));
        let fp = inverse_map(&s, &u, GRAVITY);
        let (Ok(s2), Ok(u2)) = (map_state(&fp, 1e-6), map_controls(&fp, GRAVITY, 1e-6)) else {
            return Verdict::new(false, "mapping reported a singularity inside the bounds");
        };
        let errs = [
            (s2.position - s.position).amax() / s.position.amax().max(1.0),
            rel(s2.speed, s.speed),
            wrap(s2.heading - s.heading).abs(),
            rel(s2.flight_path, s.flight_path),
            rel(u2.nx, u.nx),
            rel(u2.ny, u.ny),
            rel(u2.nz, u.nz),
        ];
        worst = errs.into_iter().fold(worst, f64::max);
    }
    let elapsed = started.elapsed();
    Verdict::new(
        worst <= 1e-9 && elapsed < Duration::from_secs(1),
        format!("{samples} pairs, worst relative error {worst:.2e}, {:.1} ms", elapsed.as_secs_f64() * 1e3),
    )
}

fn gradient_check() -> Verdict {
    match grad_check(100, 0) {
        Ok(records) => {
            let worst = records.iter().map(|r| r.rel_error).fold(0.0, f64::max);
            let failed = records.iter().filter(|r| !r.pass).count();
            let (lo, hi) = records.iter().fold((usize::MAX, 0), |(lo, hi), r| (lo.min(r.segments), hi.max(r.segments)));
            Verdict::new(failed == 0, format!("100 instances, N {lo}..{hi}, worst ‖Δg‖/(1+‖g_fd‖) {worst:.2e} (limit {TOLERANCE:e})"))
        }
        Err(e) => Verdict::new(false, format!("evaluation failed: {e}")),
    }
}

fn random_point(rng: &mut ChaCha8Rng) -> FlatPoint {
    let mut v = || Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    FlatPoint { p: v(), v: v(), a: v(), j: Vec3::zeros() }
}

fn spline_oracle() -> Verdict {
    // rest-to-rest quintic
    let sys = SplineSystem::new(1).expect("one segment");
    let rest = |p| FlatPoint { p, ..Default::default() };
    let traj = FlatTrajectory::new(&sys, Boundary { start: rest(Vec3::zeros()), goal: rest(Vec3::new(1.0, 0.0, 0.0)) }, vec![], 1.0);
    let quintic = (0..=100)
        .map(|k| {
            let t = k as f64 / 100.0;
            (traj.derivative(t, 0).unwrap().x - (10.0 * t.powi(3) - 15.0 * t.powi(4) + 6.0 * t.powi(5))).abs()
        })
        .fold(0.0, f64::max);

    // banded against dense
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut dense_err = 0.0f64;
    for n in 1..=8 {
        let sys = SplineSystem::new(n).unwrap();
        let b = Boundary { start: random_point(&mut rng), goal: random_point(&mut rng) };
        let wps: Vec<Vec3> = (1..n).map(|_| random_point(&mut rng).p).collect();
        let duration = rng.gen_range(0.5..3.0);
        let rhs = sys.rhs(&b, &wps, duration);
        let banded = sys.solve(rhs.clone());
        let lu = sys.matrix().to_dense().lu();
        for axis in 0..3 {
            let d = DVector::from_iterator(rhs.len(), rhs.iter().map(|r| r[axis]));
            let x = lu.solve(&d).expect("nonsingular");
            for (c, e) in banded.iter().zip(x.iter()) {
                dense_err = dense_err.max((c[axis] - e).abs());
            }
        }
    }

    // junction continuity through snap
    let mut cont_err = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(2..=30);
        let sys = SplineSystem::new(n).unwrap();
        let b = Boundary { start: random_point(&mut rng), goal: random_point(&mut rng) };
        let wps: Vec<Vec3> = (1..n).map(|_| random_point(&mut rng).p * 3.0).collect();
        let traj = FlatTrajectory::new(&sys, b, wps, n as f64 * rng.gen_range(0.5..2.0));
        for i in 0..n - 1 {
            for order in 0..=4 {
                let l = traj.segment_derivative(i, 1.0, order);
                let r = traj.segment_derivative(i + 1, 0.0, order);
                cont_err = cont_err.max((l - r).amax() / l.amax().max(1.0));
            }
        }
    }
    Verdict::new(
        quintic <= 1e-10 && dense_err <= 1e-9 && cont_err <= 1e-9,
        format!("quintic {quintic:.1e}, banded vs dense {dense_err:.1e}, continuity {cont_err:.1e}"),
    )
}

fn penetration_case() -> Verdict {
    let scenario = penetration();
    let started = Instant::now();
    let result = solve(&scenario, &SolverConfig::default());
    let cpu = started.elapsed();
    let sol = match result {
        Ok(s) => s,
        Err(e) => return Verdict::new(false, format!("no feasible solution: {e}")),
    };
    let r = &sol.report;
    let clearance = min_clearance(&sol.trajectory, &scenario, 0.01);
    let first = r.first_feasible.unwrap_or(usize::MAX);
    let pass = r.feasible
        && r.converged
        && r.residuals.max_dimensionless(&scenario) <= FEASIBILITY_TOL
        && clearance >= SAFE_RADIUS
        && first <= 100
        && r.iterations <= 1500
        && cpu <= Duration::from_secs(1);
    Verdict::new(
        pass,
        format!(
            "{} obstacles, min d_obs {clearance:.1} m, first feasible at {first}, converged at {}, {:.0} ms, T = {:.1} s",
            scenario.obstacles.len(),
            r.iterations,
            cpu.as_secs_f64() * 1e3,
            r.duration
        ),
    )
}

/// Least-squares fit of `log y = c + k log x`; returns `(k, R²)`.
fn power_law(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let k = sxy / sxx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - my - k * (a - mx)).powi(2)).sum();
    let ss_tot: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    (k, 1.0 - ss_res / ss_tot)
}

fn per_iteration_scaling() -> Verdict {
    let ns = [5usize, 10, 20, 40];
    let mut medians = Vec::new();
    for &n in &ns {
        let config = SolverConfig { segments: SegmentCount::Fixed(n), max_iterations: 300, ..Default::default() };
        let mut times: Vec<Duration> = (0..5)
            .flat_map(|seed| {
                let report = match solve(&bench_group(1, seed), &config) {
                    Ok(s) => s.report,
                    Err(flatfw_core::Error::Infeasible(s)) => s.report,
                    Err(_) => return Vec::new(),
                };
                report.iteration_times
            })
            .collect();
        if times.is_empty() {
            return Verdict::new(false, format!("no iterations recorded at N = {n}"));
        }
        times.sort();
        medians.push(times[times.len() / 2].as_secs_f64());
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (k, r2) = power_law(&x, &medians);
    let shown: Vec<String> = ns.iter().zip(&medians).map(|(n, t)| format!("N={n}: {:.0} µs", t * 1e6)).collect();
    Verdict::new(k <= 1.3 && r2 >= 0.9, format!("exponent {k:.2}, R² {r2:.3} ({})", shown.join(", ")))
}

fn obstacle_weight_sweep() -> Verdict {
    let values = [0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5];
    let pts = match sweep(SweepParam::ObstacleWeight, &values, &two_cylinder(), &two_cylinder_config(), false) {
        Ok(p) => p,
        Err(e) => return Verdict::new(false, e),
    };
    let x: Vec<f64> = pts.iter().map(|p| p.x_obs).collect();
    let monotone = x.windows(2).all(|w| w[1] <= w[0]);
    let zero = pts.iter().filter(|p| p.value >= 1e3).all(|p| p.x_obs == 0.0);
    let shown: Vec<String> = pts.iter().map(|p| format!("{:e}: {:.3}", p.value, p.x_obs)).collect();
    Verdict::new(monotone && zero, format!("X_obs [s] {}", shown.join(", ")))
}

fn effort_weight_sweep() -> Verdict {
    let values = [0.0, 1e-4, 1e-3, 1e-2, 1e-1];
    let pts = match sweep(SweepParam::EffortWeight, &values, &two_cylinder(), &two_cylinder_config(), false) {
        Ok(p) => p,
        Err(e) => return Verdict::new(false, e),
    };
    let e_ok = pts.windows(2).all(|w| w[1].smoothness <= w[0].smoothness);
    let q_ok = pts.windows(2).all(|w| w[1].time_cost >= w[0].time_cost * (1.0 - TIE_TOLERANCE));
    let all_ok = pts.iter().all(|p| p.success);
    let shown: Vec<String> = pts.iter().map(|p| format!("{:e}: E {:.3} Q {:.7}", p.value, p.smoothness, p.time_cost)).collect();
    Verdict::new(e_ok && q_ok && all_ok, shown.join(", "))
}

fn segment_sweep() -> Verdict {
    let pts = match sweep(SweepParam::Segments, &[5.0, 25.0], &two_cylinder(), &two_cylinder_config(), true) {
        Ok(p) => p,
        Err(e) => return Verdict::new(false, e),
    };
    let (a, b) = (&pts[0], &pts[1]);
    let growth = b.cpu_time / a.cpu_time;
    Verdict::new(
        a.success && b.success && b.objective <= a.objective && growth < 50.0,
        format!(
            "J(5) {:.3} s, J(25) {:.3} s, CPU {:.1} ms -> {:.1} ms ({growth:.1}x)",
            a.objective,
            b.objective,
            a.cpu_time * 1e3,
            b.cpu_time * 1e3
        ),
    )
}

fn monte_carlo() -> Verdict {
    let cfg = BenchConfig { groups: vec![1], runs: 100, seed: 0, solver: SolverConfig::default() };
    let summary = summarize(&run_bench(&cfg));
    let g = &summary[0];
    Verdict::new(
        g.success_rate >= 0.9 && g.mean_cpu_time < 1.0,
        format!("{} runs, {:.0}% success, mean CPU {:.1} ms", g.runs, g.success_rate * 100.0, g.mean_cpu_time * 1e3),
    )
}

fn gradient_speedup() -> Verdict {
    let mut analytic = Duration::ZERO;
    let mut fd = Duration::ZERO;
    for seed in 0..3 {
        let scenario = bench_group(1, seed);
        for (mode, total) in [(GradientMode::Analytic, &mut analytic), (GradientMode::FiniteDifference, &mut fd)] {
            let config = SolverConfig { segments: SegmentCount::Fixed(20), gradient_mode: mode, ..Default::default() };
            let started = Instant::now();
            let _ = solve(&scenario, &config);
            *total += started.elapsed();
        }
    }
    let ratio = fd.as_secs_f64() / analytic.as_secs_f64();
    Verdict::new(
        ratio >= 3.0,
        format!("3 scenarios at N = 20: analytic {:.0} ms, FD {:.0} ms ({ratio:.1}x)", analytic.as_secs_f64() * 1e3, fd.as_secs_f64() * 1e3),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("flat mapping round trip", flat_round_trip),
        ("gradient vs finite differences", gradient_check),
        ("spline oracle", spline_oracle),
        ("penetration scenario", penetration_case),
        ("linear per-iteration cost", per_iteration_scaling),
        ("lambda_obs sweep", obstacle_weight_sweep),
        ("lambda_e trade-off", effort_weight_sweep),
        ("N sweep", segment_sweep),
        ("Monte Carlo robustness", monte_carlo),
        ("analytic vs FD speedup", gradient_speedup),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!("{} criterion {:2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}


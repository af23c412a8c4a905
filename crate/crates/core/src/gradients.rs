//! Analytical gradient of the objective.
//!
//! Each integrand is differentiated with respect to the flat sample
//! `(p, v, a, j)`. Those partials map linearly onto the segment's
//! coefficient rows through the pre-sampled basis, and onto the duration
//! through the `(N/T)ⁿ` derivative scaling. The coefficient gradient is then
//! pulled back to waypoints and duration with a single transposed banded
//! solve (the adjoint of `C̄ = B⁻¹ D(P, T)`).

use std::ops::{AddAssign, Mul};

use crate::costs::{
    active_obstacles, hinge, hinge_derivative, jerk_integrand, time_cost, trapezoid_weight, CostBreakdown,
    InflatedObstacle, Objective, Penalties, RangePenalty,
};
use crate::flat::{self, FlatPoint, FrameVectors};
use crate::spline::{Boundary, SplineSystem, NCOEF};
use crate::{e3, Result, Vec3};

/// Partial derivatives of a scalar with respect to one flat sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Partials {
    pub p: Vec3,
    pub v: Vec3,
    pub a: Vec3,
    pub j: Vec3,
}

impl AddAssign for Partials {
    fn add_assign(&mut self, o: Partials) {
        self.p += o.p;
        self.v += o.v;
        self.a += o.a;
        self.j += o.j;
    }
}

impl Mul<f64> for Partials {
    type Output = Partials;
    fn mul(self, s: f64) -> Partials {
        Partials { p: self.p * s, v: self.v * s, a: self.a * s, j: self.j * s }
    }
}

impl Partials {
    /// Gradient with respect to the six coefficient rows of the sample's
    /// segment, given the basis derivatives at the node and `h = T/N`.
    pub fn coefficient_gradient(&self, node: &[[f64; NCOEF]; NCOEF], h: f64) -> [Vec3; NCOEF] {
        let (s1, s2, s3) = (1.0 / h, 1.0 / (h * h), 1.0 / (h * h * h));
        std::array::from_fn(|r| {
            self.p * node[0][r] + self.v * (node[1][r] * s1) + self.a * (node[2][r] * s2) + self.j * (node[3][r] * s3)
        })
    }

    /// Derivative with respect to `T` at fixed coefficients and fixed
    /// normalized node time: `v`, `a`, `j` scale as `T⁻¹`, `T⁻²`, `T⁻³`.
    pub fn duration_derivative(&self, fp: &FlatPoint, duration: f64) -> f64 {
        -(self.v.dot(&fp.v) + 2.0 * self.a.dot(&fp.a) + 3.0 * self.j.dot(&fp.j)) / duration
    }
}

/// `jᵀj` and its partials.
pub fn grad_jerk(fp: &FlatPoint) -> (f64, Partials) {
    (jerk_integrand(fp), Partials { j: 2.0 * fp.j, ..Default::default() })
}

/// Obstacle penalty for one obstacle and its partials; only `p` moves.
pub fn grad_obstacle(fp: &FlatPoint, obstacle: &InflatedObstacle, exponent: u32) -> (f64, Partials) {
    let phi = obstacle.phi(&fp.p);
    if phi <= 0.0 {
        return (0.0, Partials::default());
    }
    let diff = fp.p.xy() - obstacle.center;
    let scale = -2.0 * hinge_derivative(phi, exponent) / (obstacle.radius * obstacle.radius);
    (hinge(phi, exponent), Partials { p: Vec3::new(diff.x, diff.y, 0.0) * scale, ..Default::default() })
}

fn range_term(pen: &RangePenalty, q: f64, exponent: u32) -> Option<(f64, f64)> {
    let phi = pen.phi(q);
    (phi > 0.0).then(|| (hinge(phi, exponent), hinge_derivative(phi, exponent) * pen.phi_slope(q)))
}

/// Speed penalty; `∂V/∂v = r1`.
pub fn grad_speed(fp: &FlatPoint, frame: &FrameVectors, pen: &Penalties) -> (f64, Partials) {
    let speed = fp.v.norm();
    match range_term(&pen.speed, speed, pen.exponent) {
        Some((g, dg)) => (g, Partials { v: frame.r1 * dg, ..Default::default() }),
        None => (0.0, Partials::default()),
    }
}

/// Flight-path penalty on `sin γ = −e3ᵀ r1`;
/// `∂(e3ᵀ r1)/∂v = (I − r1 r1ᵀ) e3 / ‖v‖`.
pub fn grad_gamma(fp: &FlatPoint, frame: &FrameVectors, pen: &Penalties) -> (f64, Partials) {
    let speed = fp.v.norm();
    let sin_gamma = -frame.r1.z;
    match range_term(&pen.flight_path, sin_gamma, pen.exponent) {
        Some((g, dg)) => {
            let d_e3r1 = (e3() - frame.r1 * frame.r1.z) / speed;
            (g, Partials { v: -d_e3r1 * dg, ..Default::default() })
        }
        None => (0.0, Partials::default()),
    }
}

/// Load-factor penalty, `l ∈ {0, 1, 2}` for `n_x, n_y, n_z`.
pub fn grad_load(fp: &FlatPoint, frame: &FrameVectors, pen: &Penalties, l: usize) -> (f64, Partials) {
    let g = pen.gravity;
    let n_g = frame.n_g;
    let (n, dv, da) = match l {
        0 => {
            let n = n_g.dot(&frame.r1);
            (n, (n_g - frame.r1 * n) / fp.v.norm(), frame.r1 / g)
        }
        1 => {
            let n = n_g.dot(&frame.r2);
            let q = (n_g - frame.r2 * n) / frame.w2.norm();
            // w2 = [e3]ₓ v, so ∂n/∂v = [e3]ₓᵀ q = q × e3
            (n, q.cross(&e3()), frame.r2 / g)
        }
        2 => {
            let s = n_g.dot(&frame.r3);
            let q = (n_g - frame.r3 * s) / frame.w3.norm();
            // w3 = e3 (vᵀv) − v (vᵀe3); ∂w3/∂v = 2 e3 vᵀ − (vᵀe3) I − v e3ᵀ
            let v = fp.v;
            let ds = 2.0 * q.z * v - v.z * q - e3() * v.dot(&q);
            (-s, -ds, -frame.r3 / g)
        }
        _ => panic!("load index {l} out of range"),
    };
    match range_term(&pen.loads[l], n, pen.exponent) {
        Some((val, dg)) => (val, Partials { v: dv * dg, a: da * dg, ..Default::default() }),
        None => (0.0, Partials::default()),
    }
}

/// `∂𝒥/∂𝒯 = e^𝒯 · ∂𝒥/∂T`.
pub fn grad_time_mapping(d_duration: f64, tau: f64) -> f64 {
    tau.exp() * d_duration
}

/// Gradient of the objective with respect to the spline coefficients plus
/// the explicit duration derivative (at fixed coefficients).
#[derive(Debug, Clone, PartialEq)]
pub struct GradAccumulator {
    pub coeffs: Vec<Vec3>,
    pub duration: f64,
}

impl GradAccumulator {
    pub fn zeros(segments: usize) -> Self {
        Self { coeffs: vec![Vec3::zeros(); NCOEF * segments], duration: 0.0 }
    }
}

/// Gradient with respect to waypoints and duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGradient {
    pub waypoints: Vec<Vec3>,
    pub duration: f64,
}

/// Pulls a coefficient gradient back to `(P, T)`: one transposed banded
/// solve `Bᵀ Λ = ∂𝒥/∂C̄`, then `∂𝒥/∂pᵢ` is the waypoint row of `Λ` and the
/// duration picks up `Λ`-weighted derivatives of the boundary rows of `D`.
pub fn propagate(acc: &GradAccumulator, system: &SplineSystem, boundary: &Boundary, duration: f64) -> ParameterGradient {
    let n = system.segments();
    let mut lambda = acc.coeffs.clone();
    system.lu().solve_transpose_in_place(&mut lambda);
    let waypoints = (0..n - 1).map(|i| lambda[SplineSystem::waypoint_row(i)]).collect();
    let nf = n as f64;
    let rows = lambda.len();
    let dd_v = 1.0 / nf;
    let dd_a = 2.0 * duration / (nf * nf);
    let d_duration = acc.duration
        + lambda[1].dot(&boundary.start.v) * dd_v
        + lambda[2].dot(&boundary.start.a) * dd_a
        + lambda[rows - 2].dot(&boundary.goal.v) * dd_v
        + lambda[rows - 1].dot(&boundary.goal.a) * dd_a;
    ParameterGradient { waypoints, duration: d_duration }
}

impl Objective {
    /// Objective value and its gradient with respect to the decision vector.
    pub fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<CostBreakdown> {
        assert_eq!(grad.len(), self.dim());
        let (acc, out, duration) = self.accumulate(x)?;
        let pg = propagate(&acc, &self.system, &self.boundary, duration);
        for (slot, w) in grad.chunks_mut(3).zip(&pg.waypoints) {
            slot.copy_from_slice(w.as_slice());
        }
        if self.fixed_duration().is_none() {
            let (_, dq) = time_cost(duration, &self.scenario.time_mode, self.penalties.exponent);
            let last = grad.len() - 1;
            grad[last] = grad_time_mapping(pg.duration + dq, x[last]);
        }
        Ok(out)
    }

    /// Coefficient-space gradient, breakdown and duration at `x`.
    pub fn accumulate(&self, x: &[f64]) -> Result<(GradAccumulator, CostBreakdown, f64)> {
        let traj = self.trajectory(x);
        let duration = traj.duration();
        let n = traj.segments();
        let kappa = self.cache.samples;
        let h = duration / n as f64;
        let dt = h / kappa as f64;
        let w = &self.config.weights;
        let pen = &self.penalties;
        let samples = traj.samples(&self.cache);

        let mut acc = GradAccumulator::zeros(n);
        let mut out = CostBreakdown::default();
        let mut active = Vec::new();
        let all: Vec<usize> = (0..pen.obstacles.len()).collect();
        let mut weighted_integrand = 0.0;

        for (i, seg) in samples.chunks(kappa + 1).enumerate() {
            if self.config.filter_inactive {
                active_obstacles(seg, pen, &mut active);
            } else {
                active.clone_from(&all);
            }
            let rows = &mut acc.coeffs[NCOEF * i..NCOEF * (i + 1)];
            for (k, fp) in seg.iter().enumerate() {
                let q = trapezoid_weight(k, kappa) * dt;
                let frame = flat::speed_frame(fp, pen.gravity, pen.v_eps)?;
                let mut total = Partials::default();
                let mut value = 0.0;
                let mut add = |slot: &mut f64, lambda: f64, (g, d): (f64, Partials)| {
                    *slot += q * g;
                    if lambda != 0.0 && g != 0.0 {
                        value += lambda * g;
                        total += d * lambda;
                    }
                };
                add(&mut out.effort, w.effort, grad_jerk(fp));
                for &j in &active {
                    add(&mut out.obstacle, w.obstacle, grad_obstacle(fp, &pen.obstacles[j], pen.exponent));
                }
                add(&mut out.speed, w.speed, grad_speed(fp, &frame, pen));
                add(&mut out.flight_path, w.flight_path, grad_gamma(fp, &frame, pen));
                add(&mut out.nx, w.nx, grad_load(fp, &frame, pen, 0));
                add(&mut out.ny, w.ny, grad_load(fp, &frame, pen, 1));
                add(&mut out.nz, w.nz, grad_load(fp, &frame, pen, 2));
                if value == 0.0 {
                    continue;
                }
                weighted_integrand += trapezoid_weight(k, kappa) * value;
                for (row, g) in rows.iter_mut().zip(total.coefficient_gradient(&self.cache.values[k], h)) {
                    *row += g * q;
                }
                acc.duration += q * total.duration_derivative(fp, duration);
            }
        }
        // quadrature prefactor T/(κN)
        acc.duration += weighted_integrand / (kappa * n) as f64;
        out.time = time_cost(duration, &self.scenario.time_mode, pen.exponent).0;
        let lambdas = [w.effort, w.obstacle, w.speed, w.flight_path, w.nx, w.ny, w.nz];
        out.total = out.time + lambdas.iter().zip(out.integrals()).map(|(l, v)| l * v).sum::<f64>();
        Ok((acc, out, duration))
    }
}

/// Central-difference gradient of the objective; returns the value at `x`.
pub fn finite_difference_gradient(obj: &Objective, x: &[f64], step: f64, grad: &mut [f64]) -> Result<f64> {
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let up = obj.value(&probe)?.total;
        probe[i] = x[i] - step;
        let down = obj.value(&probe)?.total;
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    Ok(obj.value(x)?.total)
}

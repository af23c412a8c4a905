//! Uniform-time piecewise quintic splines.
//!
//! Each of the `N` segments is written on normalized time `τ ∈ [0, 1]` as
//! `p(τ) = C̄ᵢᵀ b(τ)` with the monomial basis `b(τ) = [1, τ, …, τ⁵]`. All
//! segments share the duration `T/N`, so the `6N × 6N` boundary/continuity
//! matrix depends on `N` only and is factorized once. The right-hand side
//! carries the waypoints and the duration-scaled boundary derivatives.

use crate::banded::{BandedLu, BandedMatrix};
use crate::flat::FlatPoint;
use crate::{Error, Result, Vec3};

/// Number of polynomial coefficients per segment (quintic).
pub const NCOEF: usize = 6;

/// Lower/upper bandwidth of the boundary matrix.
const KL: usize = 8;
const KU: usize = 7;

/// `order`-th derivative of the monomial basis with respect to `τ`.
pub fn basis(tau: f64, order: usize) -> [f64; NCOEF] {
    let mut out = [0.0; NCOEF];
    if order >= NCOEF {
        return out;
    }
    for (r, slot) in out.iter_mut().enumerate().skip(order) {
        // r! / (r - order)!
        let falling: f64 = ((r - order + 1)..=r).map(|k| k as f64).product();
        *slot = falling * tau.powi((r - order) as i32);
    }
    out
}

/// Position, velocity and acceleration pinned at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub start: FlatPoint,
    pub goal: FlatPoint,
}

impl Boundary {
    pub fn scaled(&self, length: f64, time: f64) -> Boundary {
        let s = |fp: &FlatPoint| FlatPoint {
            p: fp.p * length,
            v: fp.v * (length / time),
            a: fp.a * (length / (time * time)),
            j: fp.j * (length / time.powi(3)),
        };
        Boundary { start: s(&self.start), goal: s(&self.goal) }
    }
}

/// The boundary/continuity matrix for a fixed segment count together with
/// its banded factorization.
#[derive(Debug, Clone)]
pub struct SplineSystem {
    segments: usize,
    matrix: BandedMatrix,
    lu: BandedLu,
}

impl SplineSystem {
    pub fn new(segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::InvalidConfig("segment count must be positive".into()));
        }
        let n = NCOEF * segments;
        let mut m = BandedMatrix::zeros(n, KL, KU);
        let b0: Vec<[f64; NCOEF]> = (0..5).map(|k| basis(0.0, k)).collect();
        let b1: Vec<[f64; NCOEF]> = (0..5).map(|k| basis(1.0, k)).collect();
        for k in 0..3 {
            for c in 0..NCOEF {
                m.set(k, c, b0[k][c]);
            }
        }
        for junction in 0..segments - 1 {
            let row = 3 + NCOEF * junction;
            let left = NCOEF * junction;
            let right = left + NCOEF;
            for c in 0..NCOEF {
                m.set(row, left + c, b1[0][c]);
            }
            for k in 0..5 {
                for c in 0..NCOEF {
                    m.set(row + 1 + k, left + c, b1[k][c]);
                    m.set(row + 1 + k, right + c, -b0[k][c]);
                }
            }
        }
        let last = NCOEF * (segments - 1);
        for k in 0..3 {
            for c in 0..NCOEF {
                m.set(n - 3 + k, last + c, b1[k][c]);
            }
        }
        let lu = m.factorize()?;
        Ok(Self { segments, matrix: m, lu })
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn matrix(&self) -> &BandedMatrix {
        &self.matrix
    }

    pub fn lu(&self) -> &BandedLu {
        &self.lu
    }

    /// Row of the right-hand side holding interior waypoint `index`.
    pub fn waypoint_row(index: usize) -> usize {
        3 + NCOEF * index
    }

    /// Right-hand side for the given waypoints and duration.
    pub fn rhs(&self, boundary: &Boundary, waypoints: &[Vec3], duration: f64) -> Vec<Vec3> {
        assert_eq!(waypoints.len() + 1, self.segments, "waypoint count must be N - 1");
        let n = NCOEF * self.segments;
        let h = duration / self.segments as f64;
        let mut d = vec![Vec3::zeros(); n];
        d[0] = boundary.start.p;
        d[1] = boundary.start.v * h;
        d[2] = boundary.start.a * (h * h);
        for (i, w) in waypoints.iter().enumerate() {
            d[Self::waypoint_row(i)] = *w;
        }
        d[n - 3] = boundary.goal.p;
        d[n - 2] = boundary.goal.v * h;
        d[n - 1] = boundary.goal.a * (h * h);
        d
    }

    pub fn solve(&self, mut rhs: Vec<Vec3>) -> Vec<Vec3> {
        self.lu.solve_in_place(&mut rhs);
        rhs
    }

    pub fn coefficients(&self, boundary: &Boundary, waypoints: &[Vec3], duration: f64) -> Vec<Vec3> {
        self.solve(self.rhs(boundary, waypoints, duration))
    }

    /// `‖B C̄ − D‖∞`.
    pub fn residual(&self, coeffs: &[Vec3], rhs: &[Vec3]) -> f64 {
        self.matrix
            .mul(coeffs)
            .iter()
            .zip(rhs)
            .map(|(l, r)| (l - r).amax())
            .fold(0.0, f64::max)
    }
}

/// Builds the system for `segments` pieces and the right-hand side for the
/// given parameters.
pub fn assemble_system(
    segments: usize,
    boundary: &Boundary,
    waypoints: &[Vec3],
    duration: f64,
) -> Result<(SplineSystem, Vec<Vec3>)> {
    let sys = SplineSystem::new(segments)?;
    let rhs = sys.rhs(boundary, waypoints, duration);
    Ok((sys, rhs))
}

/// Basis values and derivatives pre-sampled at the `κ + 1` uniform
/// quadrature nodes of a segment.
#[derive(Debug, Clone)]
pub struct BasisCache {
    pub samples: usize,
    /// `values[k][order]` is the basis derivative of `order` at node `k`.
    pub values: Vec<[[f64; NCOEF]; NCOEF]>,
}

impl BasisCache {
    /// `samples` is κ, the number of quadrature intervals per segment.
    pub fn new(samples: usize) -> Self {
        let values = (0..=samples)
            .map(|k| {
                let tau = k as f64 / samples as f64;
                std::array::from_fn(|order| basis(tau, order))
            })
            .collect();
        Self { samples, values }
    }

    pub fn tau(&self, k: usize) -> f64 {
        k as f64 / self.samples as f64
    }
}

/// A trajectory in flat-output space.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatTrajectory {
    segments: usize,
    duration: f64,
    waypoints: Vec<Vec3>,
    coeffs: Vec<Vec3>,
    boundary: Boundary,
}

impl FlatTrajectory {
    pub fn new(system: &SplineSystem, boundary: Boundary, waypoints: Vec<Vec3>, duration: f64) -> Self {
        let coeffs = system.coefficients(&boundary, &waypoints, duration);
        Self { segments: system.segments(), duration, waypoints, coeffs, boundary }
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn waypoints(&self) -> &[Vec3] {
        &self.waypoints
    }

    /// Normalized coefficient rows, `6N` of them.
    pub fn coeffs(&self) -> &[Vec3] {
        &self.coeffs
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn segment_duration(&self) -> f64 {
        self.duration / self.segments as f64
    }

    /// Rescales space by `length` and time by `time`.
    pub fn scaled(&self, length: f64, time: f64) -> FlatTrajectory {
        FlatTrajectory {
            segments: self.segments,
            duration: self.duration * time,
            waypoints: self.waypoints.iter().map(|w| w * length).collect(),
            coeffs: self.coeffs.iter().map(|c| c * length).collect(),
            boundary: self.boundary.scaled(length, time),
        }
    }

    /// Segment index and normalized time for `t`; `t = T` maps to the last
    /// segment at `τ = 1`.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::OutOfDomain { t, duration: self.duration });
        }
        let s = t * self.segments as f64 / self.duration;
        let i = (s.floor() as usize).min(self.segments - 1);
        Ok((i, s - i as f64))
    }

    fn segment(&self, i: usize) -> &[Vec3] {
        &self.coeffs[NCOEF * i..NCOEF * (i + 1)]
    }

    /// `order`-th time derivative on segment `i` at normalized time `tau`.
    pub fn segment_derivative(&self, i: usize, tau: f64, order: usize) -> Vec3 {
        let b = basis(tau, order);
        let scale = (self.segments as f64 / self.duration).powi(order as i32);
        self.segment(i).iter().zip(b).map(|(c, bk)| c * bk).sum::<Vec3>() * scale
    }

    pub fn segment_point(&self, i: usize, tau: f64) -> FlatPoint {
        FlatPoint {
            p: self.segment_derivative(i, tau, 0),
            v: self.segment_derivative(i, tau, 1),
            a: self.segment_derivative(i, tau, 2),
            j: self.segment_derivative(i, tau, 3),
        }
    }

    /// `order`-th time derivative at `t`, `order ∈ 0..=5`.
    pub fn derivative(&self, t: f64, order: usize) -> Result<Vec3> {
        let (i, tau) = self.locate(t)?;
        Ok(self.segment_derivative(i, tau, order))
    }

    /// Position through jerk at `t`.
    pub fn evaluate(&self, t: f64) -> Result<FlatPoint> {
        let (i, tau) = self.locate(t)?;
        Ok(self.segment_point(i, tau))
    }

    /// Snap at `t`.
    pub fn snap(&self, t: f64) -> Result<Vec3> {
        self.derivative(t, 4)
    }

    /// All `N(κ + 1)` quadrature samples, segment-major.
    pub fn samples(&self, cache: &BasisCache) -> Vec<FlatPoint> {
        let h = self.segment_duration();
        let scales = [1.0, 1.0 / h, 1.0 / (h * h), 1.0 / (h * h * h)];
        let mut out = Vec::with_capacity(self.segments * cache.values.len());
        for i in 0..self.segments {
            let seg = self.segment(i);
            for node in &cache.values {
                let d = |order: usize| -> Vec3 {
                    let b = &node[order];
                    (seg[0] * b[0] + seg[1] * b[1] + seg[2] * b[2] + seg[3] * b[3] + seg[4] * b[4]
                        + seg[5] * b[5])
                        * scales[order]
                };
                out.push(FlatPoint { p: d(0), v: d(1), a: d(2), j: d(3) });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rest(p: Vec3) -> FlatPoint {
        FlatPoint { p, ..Default::default() }
    }

    #[test]
    fn basis_values() {
        assert_eq!(basis(0.0, 0), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(basis(1.0, 1), [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(basis(0.5, 2), [0.0, 0.0, 2.0, 3.0, 3.0, 2.5]);
        assert_eq!(basis(0.3, 5), [0.0, 0.0, 0.0, 0.0, 0.0, 120.0]);
        assert_eq!(basis(0.3, 6), [0.0; 6]);
    }

    #[test]
    fn single_segment_system_is_pure_boundary() {
        let sys = SplineSystem::new(1).unwrap();
        let dense = sys.matrix().to_dense();
        assert_eq!(dense.nrows(), 6);
        let expected = nalgebra::DMatrix::from_row_slice(
            6,
            6,
            &[
                1.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 2.0, 0.0, 0.0, 0.0, //
                1.0, 1.0, 1.0, 1.0, 1.0, 1.0, //
                0.0, 1.0, 2.0, 3.0, 4.0, 5.0, //
                0.0, 0.0, 2.0, 6.0, 12.0, 20.0,
            ],
        );
        assert_eq!(dense, expected);
    }

    #[test]
    fn rest_to_rest_quintic() {
        let sys = SplineSystem::new(1).unwrap();
        let b = Boundary { start: rest(Vec3::zeros()), goal: rest(Vec3::new(1.0, 0.0, 0.0)) };
        let traj = FlatTrajectory::new(&sys, b, vec![], 1.0);
        let expected = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
        for (c, e) in traj.coeffs().iter().zip(expected) {
            assert!((c.x - e).abs() < 1e-10);
            assert_eq!(c.y, 0.0);
        }
    }

    #[test]
    fn straight_line_is_reproduced() {
        let v = Vec3::new(2.0, -1.0, 0.5);
        let n = 4;
        let duration = 3.0;
        let at = |t: f64| FlatPoint { p: v * t, v, ..Default::default() };
        let b = Boundary { start: at(0.0), goal: at(duration) };
        let wps: Vec<Vec3> = (1..n).map(|i| v * (duration * i as f64 / n as f64)).collect();
        let sys = SplineSystem::new(n).unwrap();
        let traj = FlatTrajectory::new(&sys, b, wps, duration);
        for (r, c) in traj.coeffs().iter().enumerate() {
            if r % NCOEF >= 2 {
                assert!(c.amax() < 1e-12, "row {r}: {c:?}");
            }
        }
    }

    #[test]
    fn evaluate_hits_boundary_and_domain() {
        let sys = SplineSystem::new(3).unwrap();
        let b = Boundary {
            start: FlatPoint { p: Vec3::zeros(), v: Vec3::new(1.0, 0.0, 0.0), a: Vec3::new(0.0, 0.1, 0.0), j: Vec3::zeros() },
            goal: FlatPoint { p: Vec3::new(5.0, 1.0, 0.0), v: Vec3::new(0.0, 1.0, 0.0), a: Vec3::zeros(), j: Vec3::zeros() },
        };
        let traj = FlatTrajectory::new(&sys, b, vec![Vec3::new(2.0, 0.0, 0.0), Vec3::new(4.0, 0.0, 0.0)], 4.0);
        let s = traj.evaluate(0.0).unwrap();
        assert_relative_eq!(s.p, b.start.p, epsilon = 1e-12);
        assert_relative_eq!(s.v, b.start.v, epsilon = 1e-12);
        assert_relative_eq!(s.a, b.start.a, epsilon = 1e-12);
        let e = traj.evaluate(4.0).unwrap();
        assert_relative_eq!(e.p, b.goal.p, epsilon = 1e-10);
        assert_relative_eq!(e.v, b.goal.v, epsilon = 1e-10);
        assert_relative_eq!(e.a, b.goal.a, epsilon = 1e-10);
        assert_eq!(traj.locate(4.0).unwrap(), (2, 1.0));
        assert!(matches!(traj.evaluate(4.0 + 1e-9), Err(Error::OutOfDomain { .. })));
        assert!(matches!(traj.evaluate(-1e-9), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn doubling_duration_scales_derivatives() {
        let sys = SplineSystem::new(3).unwrap();
        let b = Boundary { start: rest(Vec3::zeros()), goal: rest(Vec3::new(3.0, 1.0, -1.0)) };
        let wps = vec![Vec3::new(1.0, 0.5, 0.0), Vec3::new(2.0, 1.5, -0.5)];
        let t1 = FlatTrajectory::new(&sys, b, wps.clone(), 2.0);
        let t2 = FlatTrajectory::new(&sys, b, wps, 4.0);
        for frac in [0.1, 0.45, 0.9] {
            let p1 = t1.evaluate(2.0 * frac).unwrap();
            let p2 = t2.evaluate(4.0 * frac).unwrap();
            assert_relative_eq!(p2.p, p1.p, epsilon = 1e-12);
            assert_relative_eq!(p2.v, p1.v * 0.5, epsilon = 1e-12);
            assert_relative_eq!(p2.a, p1.a * 0.25, epsilon = 1e-12);
        }
    }
}

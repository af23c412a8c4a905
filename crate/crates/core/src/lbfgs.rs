//! Limited-memory BFGS with a weak-Wolfe bracketing line search.

use std::collections::VecDeque;
use std::ops::ControlFlow;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iterations: usize,
    pub grad_tol: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
    /// Pairs with `sᵀy ≤ curvature_eps · ‖s‖‖y‖` are not stored.
    pub curvature_eps: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 8,
            max_iterations: 5000,
            grad_tol: 1e-3,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 60,
            curvature_eps: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    GradientTolerance,
    MaxIterations,
    LineSearchFailure,
    /// The monitor asked to stop.
    Stopped,
}

/// Iterate, curvature history and counters.
#[derive(Debug, Clone)]
pub struct LbfgsState {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iteration: usize,
    pub evaluations: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    memory: usize,
}

impl LbfgsState {
    fn new(x: Vec<f64>, f: f64, grad: Vec<f64>, memory: usize) -> Self {
        Self { x, f, grad, iteration: 0, evaluations: 1, pairs: VecDeque::with_capacity(memory), memory }
    }

    pub fn grad_norm(&self) -> f64 {
        norm(&self.grad)
    }

    pub fn history_len(&self) -> usize {
        self.pairs.len()
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>, eps: f64) -> bool {
        let sy = dot(&s, &y);
        if !(sy > eps * norm(&s) * norm(&y)) {
            return false;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    /// Two-loop recursion: `−H ∇f`, with `H₀ = γ M⁻¹` where `precond`
    /// applies `M⁻¹` in place.
    fn direction<P: Fn(&mut [f64])>(&self, precond: &P) -> Vec<f64> {
        let mut q = self.grad.clone();
        let mut alpha = vec![0.0; self.pairs.len()];
        for (k, (s, y, rho)) in self.pairs.iter().enumerate().rev() {
            alpha[k] = rho * dot(s, &q);
            axpy(-alpha[k], y, &mut q);
        }
        precond(&mut q);
        if let Some((s, y, _)) = self.pairs.back() {
            let mut my = y.clone();
            precond(&mut my);
            let gamma = dot(s, y) / dot(y, &my);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for (k, (s, y, rho)) in self.pairs.iter().enumerate() {
            let beta = rho * dot(y, &q);
            axpy(alpha[k] - beta, s, &mut q);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub state: LbfgsState,
    pub status: Status,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Lewis–Overton bisection/expansion for a step satisfying the weak Wolfe
/// conditions. Evaluation errors, non-finite values and steps without strict
/// decrease count as failed sufficient decrease. Returns `(t, x, f, g)` on
/// success.
fn weak_wolfe<F>(
    f: &mut F,
    state: &mut LbfgsState,
    d: &[f64],
    t0: f64,
    cfg: &LbfgsConfig,
) -> Option<(f64, Vec<f64>, f64, Vec<f64>)>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let slope0 = dot(&state.grad, d);
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let mut t = t0;
    let mut x = vec![0.0; d.len()];
    let mut g = vec![0.0; d.len()];
    let mut best: Option<(f64, Vec<f64>, f64, Vec<f64>)> = None;
    for _ in 0..cfg.max_line_search {
        for i in 0..x.len() {
            x[i] = state.x[i] + t * d[i];
        }
        state.evaluations += 1;
        match f(&x, &mut g) {
            Ok(fx) if fx.is_finite() && g.iter().all(|v| v.is_finite()) => {
                if fx > state.f + cfg.c1 * t * slope0 || fx >= state.f {
                    hi = t;
                } else {
                    if dot(&g, d) >= cfg.c2 * slope0 {
                        return Some((t, x, fx, g));
                    }
                    if best.as_ref().map_or(true, |b| fx < b.2) {
                        best = Some((t, x.clone(), fx, g.clone()));
                    }
                    lo = t;
                }
            }
            _ => hi = t,
        }
        t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo.max(t) };
        if hi.is_finite() && (hi - lo) <= 1e-16 * hi.max(1.0) {
            break;
        }
    }
    // sufficient decrease alone still makes progress
    best
}

/// Minimizes `f` from `x0`. `f` writes the gradient into its second
/// argument and returns the value. `monitor` runs after every accepted
/// step and may stop the iteration early.
pub fn minimize<F, M>(f: F, x0: Vec<f64>, cfg: &LbfgsConfig, monitor: M) -> Result<LbfgsResult>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
    M: FnMut(&LbfgsState) -> ControlFlow<()>,
{
    minimize_preconditioned(f, x0, cfg, |_: &mut [f64]| {}, monitor)
}

/// [`minimize`] with a symmetric positive definite preconditioner: `precond`
/// overwrites its argument `v` with `M⁻¹ v`, and the initial inverse Hessian
/// of every two-loop recursion becomes `γ M⁻¹`.
pub fn minimize_preconditioned<F, P, M>(
    mut f: F,
    x0: Vec<f64>,
    cfg: &LbfgsConfig,
    precond: P,
    mut monitor: M,
) -> Result<LbfgsResult>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
    P: Fn(&mut [f64]),
    M: FnMut(&LbfgsState) -> ControlFlow<()>,
{
    let mut g0 = vec![0.0; x0.len()];
    let f0 = f(&x0, &mut g0)?;
    if !f0.is_finite() || !g0.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteObjective);
    }
    let mut state = LbfgsState::new(x0, f0, g0, cfg.memory.max(1));
    if monitor(&state).is_break() {
        return Ok(LbfgsResult { state, status: Status::Stopped });
    }
    loop {
        if state.grad_norm() <= cfg.grad_tol {
            return Ok(LbfgsResult { state, status: Status::GradientTolerance });
        }
        if state.iteration >= cfg.max_iterations {
            return Ok(LbfgsResult { state, status: Status::MaxIterations });
        }
        let mut d = state.direction(&precond);
        if dot(&d, &state.grad) >= 0.0 {
            state.pairs.clear();
            d = state.direction(&precond);
        }
        let t0 = if state.pairs.is_empty() { 1.0 / norm(&d).max(1.0) } else { 1.0 };
        let step = weak_wolfe(&mut f, &mut state, &d, t0, cfg).or_else(|| {
            if state.pairs.is_empty() {
                return None;
            }
            state.pairs.clear();
            let sd = state.direction(&precond);
            let t0 = 1.0 / norm(&sd).max(1.0);
            weak_wolfe(&mut f, &mut state, &sd, t0, cfg)
        });
        let Some((_, x, fx, g)) = step else {
            return Ok(LbfgsResult { state, status: Status::LineSearchFailure });
        };
        let s: Vec<f64> = x.iter().zip(&state.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&state.grad).map(|(a, b)| a - b).collect();
        state.push(s, y, cfg.curvature_eps);
        state.x = x;
        state.f = fx;
        state.grad = g;
        state.iteration += 1;
        if monitor(&state).is_break() {
            return Ok(LbfgsResult { state, status: Status::Stopped });
        }
    }
}

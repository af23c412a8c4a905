//! Curvature preconditioner for the quasi-Newton iteration.
//!
//! The objective Hessian couples each waypoint mostly with its near
//! neighbours, while the log-duration couples with everything. The model
//! keeps a band of `b` waypoints around the diagonal plus the full duration
//! row, estimated by central differences of the gradient with interleaved
//! perturbations: waypoints `2b + 1` apart share one probe, so a refresh
//! costs `6 (2b + 1) + 3` gradient evaluations whatever the segment count.
//! Eigenvalues are replaced by `max(|λ|, floor · max|λ|)`, turning the
//! model into a positive definite modified-Newton metric.

use nalgebra::{DMatrix, DVector};

use crate::Result;

/// Central-difference step in normalized units.
pub const STEP: f64 = 1e-6;
/// Smallest eigenvalue relative to the largest.
const FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct Preconditioner {
    /// Inverse of the modified model; `None` is the identity.
    inverse: Option<DMatrix<f64>>,
}

impl Preconditioner {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Estimates the banded Hessian of `grad` at `x`. The first `3 m`
    /// coordinates are waypoints, interleaved by axis; a trailing
    /// coordinate, if any, is the log-duration. Falls back to the identity
    /// when the curvature estimate is zero or not finite.
    pub fn build<G>(mut grad: G, x: &[f64], waypoints: usize, bandwidth: usize) -> Result<Self>
    where
        G: FnMut(&[f64], &mut [f64]) -> Result<f64>,
    {
        let n = x.len();
        let m = waypoints;
        let nw = 3 * m;
        let (mut gp, mut gm) = (vec![0.0; n], vec![0.0; n]);
        let mut xp = x.to_vec();
        // gradient difference across ±STEP on the coordinates `cols`
        let mut probe = |cols: &[usize], gp: &mut [f64], gm: &mut [f64]| -> Result<()> {
            for (sign, g) in [(1.0, gp), (-1.0, gm)] {
                for &c in cols {
                    xp[c] = x[c] + sign * STEP;
                }
                grad(&xp, g)?;
            }
            for &c in cols {
                xp[c] = x[c];
            }
            Ok(())
        };
        let mut h = DMatrix::zeros(n, n);
        let b = bandwidth.min(m.saturating_sub(1));
        let stride = 2 * b + 1;
        for axis in 0..3 {
            for r in 0..stride.min(m) {
                let cols: Vec<usize> = (r..m).step_by(stride).map(|i| 3 * i + axis).collect();
                probe(&cols, &mut gp, &mut gm)?;
                for row in 0..nw {
                    // the probed waypoint within b of the row's waypoint
                    let wi = row / 3;
                    let d = (wi + stride - r) % stride;
                    let wj = match d <= b {
                        true if d <= wi => wi - d,
                        false if wi + stride - d < m => wi + stride - d,
                        _ => continue,
                    };
                    h[(row, 3 * wj + axis)] = (gp[row] - gm[row]) / (2.0 * STEP);
                }
            }
        }
        if n > nw {
            probe(&[nw], &mut gp, &mut gm)?;
            for row in 0..n {
                h[(row, nw)] = (gp[row] - gm[row]) / (2.0 * STEP);
            }
            for col in 0..nw {
                h[(nw, col)] = h[(col, nw)];
            }
        }
        let h = (&h + h.transpose()) * 0.5;
        let eig = h.symmetric_eigen();
        let top = eig.eigenvalues.amax();
        if !(top > 0.0) || !top.is_finite() {
            return Ok(Self::identity());
        }
        let scale = eig.eigenvalues.map(|l| 1.0 / l.abs().max(FLOOR * top));
        let inverse = &eig.eigenvectors * DMatrix::from_diagonal(&scale) * eig.eigenvectors.transpose();
        Ok(Self { inverse: Some(inverse) })
    }

    /// `v ← M⁻¹ v`.
    pub fn apply(&self, v: &mut [f64]) {
        if let Some(inv) = &self.inverse {
            let r = inv * DVector::from_column_slice(v);
            v.copy_from_slice(r.as_slice());
        }
    }
}

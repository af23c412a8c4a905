//! Banded LU factorization with partial pivoting.
//!
//! Rows are stored with room for the `kl` extra super-diagonals that row
//! interchanges can introduce, following the LAPACK `gbtrf`/`gbtrs` layout:
//! the factor is a product of interleaved row swaps and unit lower
//! elimination steps followed by an upper-triangular factor with bandwidth
//! `kl + ku`. Multiple right-hand sides of any vector-like type are
//! supported so spline coefficients can be solved as `Vec3` rows directly.

use std::ops::{Div, Mul, SubAssign};

use crate::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.n && j < self.n, "index ({i}, {j}) out of range");
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band ({}, {})", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    /// Computes `A x`.
    pub fn mul<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
    {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).fold(T::default(), |acc, j| acc + x[j] * self.get(i, j))
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Factorizes `A = P L U` in banded storage.
    pub fn factorize(&self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut a = self.clone();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.data[a.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = a.data[a.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::NumericalSingular(k));
            }
            pivots[k] = p;
            let right = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=right {
                    let (ik, ip) = (a.idx(k, j), a.idx(p, j));
                    a.data.swap(ik, ip);
                }
            }
            let diag = a.data[a.idx(k, k)];
            for i in k + 1..=last {
                let ik = a.idx(i, k);
                let l = a.data[ik] / diag;
                a.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=right {
                        let kj = a.data[a.idx(k, j)];
                        let ij = a.idx(i, j);
                        a.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(BandedLu { factors: a, pivots })
    }
}

/// LU factors of a [`BandedMatrix`]; immutable and shareable once built.
#[derive(Debug, Clone)]
pub struct BandedLu {
    factors: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.factors.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.factors.data[self.factors.idx(i, j)]
    }

    /// Solves `A x = b`, overwriting `b` with `x`.
    pub fn solve_in_place<T>(&self, b: &mut [T])
    where
        T: Copy + Mul<f64, Output = T> + Div<f64, Output = T> + SubAssign,
    {
        let n = self.dim();
        let kl = self.factors.kl;
        let upper = kl + self.factors.ku;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= bk * self.at(i, k);
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + upper).min(n - 1) {
                acc -= b[j] * self.at(i, j);
            }
            b[i] = acc / self.at(i, i);
        }
    }

    /// Solves `Aᵀ x = b`, overwriting `b` with `x`.
    pub fn solve_transpose_in_place<T>(&self, b: &mut [T])
    where
        T: Copy + Mul<f64, Output = T> + Div<f64, Output = T> + SubAssign,
    {
        let n = self.dim();
        let kl = self.factors.kl;
        let upper = kl + self.factors.ku;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let mut acc = b[i];
            for j in i.saturating_sub(upper)..i {
                acc -= b[j] * self.at(j, i);
            }
            b[i] = acc / self.at(i, i);
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                acc -= b[i] * self.at(i, k);
            }
            b[k] = acc;
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }
}

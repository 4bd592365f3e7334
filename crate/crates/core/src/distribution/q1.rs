//! The `(2m+2n+4)`-square matrix that glues the pieces of the distribution
//! function together at the two barriers.
//!
//! Each column is one matching condition: value, first derivative, the
//! `ϑ_k`-weighted integral over the left half-line and the `η_k`-weighted
//! integral over the right half-line, first at `b1` then at `b2`. Each row is
//! one unknown coefficient, grouped as (shift α₁ upward roots, unshifted
//! upward roots, unshifted downward roots, shift α₂ downward roots).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::Factorized;
use crate::model::{HejdModel, RootSet};

/// Matching conditions of `e^{r(x−b)}` at `x = b`:
/// `[1, r, ϑ_k/(ϑ_k+r) …, η_k/(η_k−r) …]`.
pub(crate) fn up_pattern(model: &HejdModel, r: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(model.m() + model.n() + 2);
    out.push(Complex64::new(1.0, 0.0));
    out.push(r);
    out.extend(model.down_rates().iter().map(|&t| t / (t + r)));
    out.extend(model.up_rates().iter().map(|&e| e / (e - r)));
    out
}

/// Matching conditions of `e^{g(b−x)}` at `x = b`:
/// `[1, −g, ϑ_k/(ϑ_k−g) …, η_k/(η_k+g) …]`.
pub(crate) fn down_pattern(model: &HejdModel, g: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(model.m() + model.n() + 2);
    out.push(Complex64::new(1.0, 0.0));
    out.push(-g);
    out.extend(model.down_rates().iter().map(|&t| t / (t - g)));
    out.extend(model.up_rates().iter().map(|&e| e / (e + g)));
    out
}

/// `dst += k · src`.
pub(crate) fn axpy(dst: &mut [Complex64], k: Complex64, src: &[Complex64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += k * s;
    }
}

/// The gluing matrix together with a factorization of its transpose.
#[derive(Debug, Clone)]
pub struct Q1Matrix {
    matrix: DMatrix<Complex64>,
    transposed: Factorized,
}

/// Assembles the gluing matrix for barriers `b1 ≤ b2`.
///
/// `unshifted`, `lower` and `upper` are the roots for drift shifts 0, α₁
/// and α₂ at the same `q`.
pub fn build_q1(
    model: &HejdModel,
    unshifted: &RootSet,
    lower: &RootSet,
    upper: &RootSet,
    b1: f64,
    b2: f64,
) -> Result<Q1Matrix> {
    let (m, n) = (model.m(), model.n());
    let half = m + n + 2;
    let size = 2 * half;
    let log_l = b1 - b2;
    let mut matrix = DMatrix::<Complex64>::zeros(size, size);
    let mut set_row = |row: usize, left: &[Complex64], right: &[Complex64]| {
        for k in 0..half {
            matrix[(row, k)] = left[k];
            matrix[(row, half + k)] = right[k];
        }
    };
    let zero = vec![Complex64::new(0.0, 0.0); half];

    let mut row = 0;
    for &b in lower.betas() {
        set_row(row, &up_pattern(model, b), &zero);
        row += 1;
    }
    for &b in unshifted.betas() {
        let p = up_pattern(model, b);
        let lb = (b * log_l).exp();
        let left: Vec<Complex64> = p.iter().map(|v| -lb * v).collect();
        set_row(row, &left, &p);
        row += 1;
    }
    for &g in unshifted.gammas() {
        let p = down_pattern(model, g);
        let lg = (g * log_l).exp();
        let left: Vec<Complex64> = p.iter().map(|v| -v).collect();
        let right: Vec<Complex64> = p.iter().map(|v| lg * v).collect();
        set_row(row, &left, &right);
        row += 1;
    }
    for &g in upper.gammas() {
        let right: Vec<Complex64> = down_pattern(model, g).iter().map(|v| -v).collect();
        set_row(row, &zero, &right);
        row += 1;
    }

    let transposed = Factorized::new(matrix.transpose(), "Q1")?;
    Ok(Q1Matrix { matrix, transposed })
}

impl Q1Matrix {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// 1-norm condition estimate of the factorized system.
    pub fn condition(&self) -> f64 {
        self.transposed.condition()
    }

    /// Row vector `c` with `c · Q1 = h`.
    pub fn solve_row(&self, h: &[Complex64]) -> Vec<Complex64> {
        self.transposed.solve(h).iter().copied().collect()
    }
}

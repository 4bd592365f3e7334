//! Small dense complex solves with a condition estimate.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest 1-norm condition number accepted before a matrix is declared singular.
pub const MAX_CONDITION: f64 = 1e12;

/// LU factorization (partial pivoting) of a square complex matrix.
#[derive(Debug, Clone)]
pub struct Factorized {
    lu: LU<Complex64, Dyn, Dyn>,
    condition: f64,
}

impl Factorized {
    pub fn new(mat: DMatrix<Complex64>, what: &'static str) -> Result<Self> {
        let norm = one_norm(&mat);
        let lu = mat.lu();
        let inverse = lu.try_inverse().ok_or(Error::SingularMatrix {
            what,
            condition: f64::INFINITY,
        })?;
        let condition = norm * one_norm(&inverse);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularMatrix { what, condition });
        }
        Ok(Self { lu, condition })
    }

    /// `‖A‖₁ ‖A⁻¹‖₁`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, rhs: &[Complex64]) -> DVector<Complex64> {
        let b = DVector::from_column_slice(rhs);
        self.lu
            .solve(&b)
            .expect("factorization was checked to be invertible")
    }
}

fn one_norm(mat: &DMatrix<Complex64>) -> f64 {
    mat.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

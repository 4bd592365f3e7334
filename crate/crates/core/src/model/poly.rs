//! Dense complex polynomials and simultaneous root finding (Aberth–Ehrlich).

use num_complex::Complex64;

/// Polynomial with complex coefficients stored in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// Coefficients in ascending powers.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        let coeffs = (0..len)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(zero) + other.coeffs.get(k).copied().unwrap_or(zero)
            })
            .collect();
        Self::new(coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// All complex zeros by Aberth–Ehrlich iteration.
    ///
    /// Returns `None` if the iteration fails to settle within the budget.
    pub fn roots(&self) -> Option<Vec<Complex64>> {
        let d = self.degree();
        if d == 0 {
            return Some(Vec::new());
        }
        let lead = self.coeffs[d];
        let monic: Vec<Complex64> = self.coeffs.iter().map(|c| c / lead).collect();
        let monic = Self { coeffs: monic };

        // Start on a circle whose radius is the geometric mean of the root
        // moduli, rotated off the real axis so conjugate pairs separate.
        let radius = monic.coeffs[0].norm().powf(1.0 / d as f64).max(1e-3);
        let mut z: Vec<Complex64> = (0..d)
            .map(|k| {
                let angle = std::f64::consts::TAU * k as f64 / d as f64 + 0.4;
                Complex64::from_polar(radius, angle)
            })
            .collect();

        for _ in 0..1000 {
            let mut largest = 0.0f64;
            for k in 0..d {
                let (p, dp) = monic.eval_with_derivative(z[k]);
                if p == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ratio = p / dp;
                let repulsion: Complex64 = (0..d)
                    .filter(|&j| j != k)
                    .map(|j| 1.0 / (z[k] - z[j]))
                    .sum();
                let step = ratio / (1.0 - ratio * repulsion);
                if step.is_finite() {
                    z[k] -= step;
                    largest = largest.max(step.norm() / (1.0 + z[k].norm()));
                }
            }
            if largest < 1e-15 {
                return Some(z);
            }
        }
        // Accept a slow finish if every residual is already tiny relative to the scale.
        let scale: f64 = monic.coeffs.iter().map(|c| c.norm()).sum();
        z.iter()
            .all(|&r| monic.eval(r).norm() <= 1e-10 * scale * (1.0 + r.norm()).powi(d as i32))
            .then_some(z)
    }
}

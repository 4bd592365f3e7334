//! Hyper-exponential jump diffusion (HEJD) and the two-layer fee structure.
//!
//! The log fund process is
//!
//! ```text
//! X_t = X_0 + μ t + σ W_t + Σ_{k ≤ N_t} Z_k
//! ```
//!
//! where `N` is Poisson with intensity `λ` and the jump sizes have density
//! `Σ p_i η_i e^{-η_i z} 1{z>0} + Σ q_j ϑ_j e^{ϑ_j z} 1{z<0}`.
//! The account process refracts this drift: it loses `α₁` per unit time while
//! below `b₁` and `α₂` while at or above `b₂`.

mod poly;
mod roots;

pub use poly::Polynomial;
pub use roots::{solve_roots, RootSet, ROOT_RESIDUAL_TOL};

use num_complex::Complex64;

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};

/// Relative distance under which an argument is treated as sitting on a pole.
const POLE_TOL: f64 = 1e-14;

/// Risk-neutral parameters of a hyper-exponential jump diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct HejdModel {
    sigma: f64,
    mu: f64,
    lambda: f64,
    up_weights: Vec<f64>,
    up_rates: Vec<f64>,
    down_weights: Vec<f64>,
    down_rates: Vec<f64>,
}

impl HejdModel {
    /// Builds a model, validating every parameter constraint.
    ///
    /// Weights must be positive and sum (over both sides) to one, rates must
    /// be strictly increasing on each side, and the smallest upward rate must
    /// exceed one so that `E[e^{X_1}]` is finite.
    pub fn new(
        sigma: f64,
        mu: f64,
        lambda: f64,
        up_weights: Vec<f64>,
        up_rates: Vec<f64>,
        down_weights: Vec<f64>,
        down_rates: Vec<f64>,
    ) -> Result<Self> {
        require_positive("sigma", sigma)?;
        if !mu.is_finite() {
            return Err(invalid("mu", format!("must be finite, got {mu}")));
        }
        require_positive("lambda", lambda)?;
        validate_side("up", &up_weights, &up_rates)?;
        validate_side("down", &down_weights, &down_rates)?;

        let total: f64 = up_weights.iter().chain(&down_weights).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(
                "weights",
                format!("up and down weights must sum to 1, got {total}"),
            ));
        }
        if up_rates[0] <= 1.0 {
            return Err(invalid(
                "up_rates",
                format!(
                    "smallest upward rate must exceed 1 for a finite exponential moment, got {}",
                    up_rates[0]
                ),
            ));
        }

        Ok(Self {
            sigma,
            mu,
            lambda,
            up_weights,
            up_rates,
            down_weights,
            down_rates,
        })
    }

    /// Double-exponential special case (one rate per side).
    pub fn double_exponential(
        sigma: f64,
        mu: f64,
        lambda: f64,
        up_weight: f64,
        up_rate: f64,
        down_rate: f64,
    ) -> Result<Self> {
        Self::new(
            sigma,
            mu,
            lambda,
            vec![up_weight],
            vec![up_rate],
            vec![1.0 - up_weight],
            vec![down_rate],
        )
    }

    /// The reference parameter set used throughout the fee tables:
    /// σ = 0.2, λ = 1, p = q = 0.5, η = ϑ = 15, drift calibrated to r = 0.05.
    pub fn baseline() -> Self {
        Self::double_exponential(0.2, 0.0, 1.0, 0.5, 15.0, 15.0)
            .and_then(|m| m.calibrate_drift(BASELINE_RATE))
            .expect("baseline parameters are valid")
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn up_weights(&self) -> &[f64] {
        &self.up_weights
    }

    pub fn up_rates(&self) -> &[f64] {
        &self.up_rates
    }

    pub fn down_weights(&self) -> &[f64] {
        &self.down_weights
    }

    pub fn down_rates(&self) -> &[f64] {
        &self.down_rates
    }

    /// Number of upward exponential components (`m`).
    pub fn m(&self) -> usize {
        self.up_rates.len()
    }

    /// Number of downward exponential components (`n`).
    pub fn n(&self) -> usize {
        self.down_rates.len()
    }

    /// Returns a copy with a different drift.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        let mut out = self.clone();
        if !mu.is_finite() {
            return Err(invalid("mu", format!("must be finite, got {mu}")));
        }
        out.mu = mu;
        Ok(out)
    }

    /// Returns a copy with a different volatility, drift left untouched.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        require_positive("sigma", sigma)?;
        let mut out = self.clone();
        out.sigma = sigma;
        Ok(out)
    }

    /// Returns a copy with different upward rates.
    pub fn with_up_rates(&self, rates: Vec<f64>) -> Result<Self> {
        Self::new(
            self.sigma,
            self.mu,
            self.lambda,
            self.up_weights.clone(),
            rates,
            self.down_weights.clone(),
            self.down_rates.clone(),
        )
    }

    /// Returns a copy with different downward rates.
    pub fn with_down_rates(&self, rates: Vec<f64>) -> Result<Self> {
        Self::new(
            self.sigma,
            self.mu,
            self.lambda,
            self.up_weights.clone(),
            self.up_rates.clone(),
            self.down_weights.clone(),
            rates,
        )
    }

    /// Sets the drift so that `ψ(1) = r`, making `e^{-rt + X_t}` a martingale.
    pub fn calibrate_drift(&self, r: f64) -> Result<Self> {
        require_positive("r", r)?;
        if self.up_rates[0] <= 1.0 {
            return Err(invalid(
                "up_rates",
                "martingale calibration needs the smallest upward rate above 1",
            ));
        }
        let jump_mgf: f64 = self
            .up_weights
            .iter()
            .zip(&self.up_rates)
            .map(|(p, eta)| p * eta / (eta - 1.0))
            .chain(
                self.down_weights
                    .iter()
                    .zip(&self.down_rates)
                    .map(|(q, theta)| q * theta / (theta + 1.0)),
            )
            .sum();
        let mu = r - 0.5 * self.sigma * self.sigma - self.lambda * (jump_mgf - 1.0);
        self.with_mu(mu)
    }

    /// `ψ(z) - shift·z`, where `ψ(z) = ln E[e^{z X_1}]` continued to the
    /// complex plane.
    pub fn levy_exponent(&self, shift: f64, z: Complex64) -> Result<Complex64> {
        for &eta in &self.up_rates {
            if (z - eta).norm() <= POLE_TOL * eta {
                return Err(Error::Pole { z, pole: eta });
            }
        }
        for &theta in &self.down_rates {
            if (z + theta).norm() <= POLE_TOL * theta {
                return Err(Error::Pole { z, pole: -theta });
            }
        }
        Ok(self.exponent_unchecked(shift, z))
    }

    /// `ψ(z) - shift·z` without the pole check.
    pub(crate) fn exponent_unchecked(&self, shift: f64, z: Complex64) -> Complex64 {
        let mut jumps = Complex64::new(-1.0, 0.0);
        for (p, eta) in self.up_weights.iter().zip(&self.up_rates) {
            jumps += p * eta / (eta - z);
        }
        for (q, theta) in self.down_weights.iter().zip(&self.down_rates) {
            jumps += q * theta / (theta + z);
        }
        0.5 * self.sigma * self.sigma * z * z + (self.mu - shift) * z + self.lambda * jumps
    }

    /// Derivative of `ψ(z) - shift·z` in `z`.
    pub(crate) fn exponent_derivative(&self, shift: f64, z: Complex64) -> Complex64 {
        let mut jumps = Complex64::new(0.0, 0.0);
        for (p, eta) in self.up_weights.iter().zip(&self.up_rates) {
            let d = eta - z;
            jumps += p * eta / (d * d);
        }
        for (q, theta) in self.down_weights.iter().zip(&self.down_rates) {
            let d = theta + z;
            jumps -= q * theta / (d * d);
        }
        self.sigma * self.sigma * z + (self.mu - shift) + self.lambda * jumps
    }

    /// The degree-`(m+n+2)` polynomial whose zeros are the zeros of
    /// `ψ(z) - shift·z - q`: the exponent with all jump denominators cleared.
    pub fn cleared_polynomial(&self, shift: f64, q: Complex64) -> Polynomial {
        let one = Complex64::new(1.0, 0.0);
        let up_factors: Vec<Polynomial> = self
            .up_rates
            .iter()
            .map(|&eta| Polynomial::new(vec![Complex64::new(eta, 0.0), -one]))
            .collect();
        let down_factors: Vec<Polynomial> = self
            .down_rates
            .iter()
            .map(|&theta| Polynomial::new(vec![Complex64::new(theta, 0.0), one]))
            .collect();

        let product_except = |skip_up: Option<usize>, skip_down: Option<usize>| {
            let mut acc = Polynomial::constant(one);
            for (i, f) in up_factors.iter().enumerate() {
                if Some(i) != skip_up {
                    acc = acc.mul(f);
                }
            }
            for (j, f) in down_factors.iter().enumerate() {
                if Some(j) != skip_down {
                    acc = acc.mul(f);
                }
            }
            acc
        };

        let quadratic = Polynomial::new(vec![
            -(self.lambda + q),
            Complex64::new(self.mu - shift, 0.0),
            Complex64::new(0.5 * self.sigma * self.sigma, 0.0),
        ]);
        let mut out = quadratic.mul(&product_except(None, None));
        for (i, (p, eta)) in self.up_weights.iter().zip(&self.up_rates).enumerate() {
            out = out.add(&product_except(Some(i), None).scale(Complex64::new(self.lambda * p * eta, 0.0)));
        }
        for (j, (w, theta)) in self.down_weights.iter().zip(&self.down_rates).enumerate() {
            out = out.add(
                &product_except(None, Some(j)).scale(Complex64::new(self.lambda * w * theta, 0.0)),
            );
        }
        out
    }
}

/// Risk-free rate paired with [`HejdModel::baseline`].
pub const BASELINE_RATE: f64 = 0.05;

fn validate_side(side: &'static str, weights: &[f64], rates: &[f64]) -> Result<()> {
    let (wname, rname) = match side {
        "up" => ("up_weights", "up_rates"),
        _ => ("down_weights", "down_rates"),
    };
    if weights.is_empty() {
        return Err(invalid(wname, "at least one exponential component is required"));
    }
    if weights.len() != rates.len() {
        return Err(invalid(
            rname,
            format!("{} weights but {} rates", weights.len(), rates.len()),
        ));
    }
    for &w in weights {
        require_positive(wname, w)?;
    }
    for &r in rates {
        require_positive(rname, r)?;
    }
    if rates.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(rname, "rates must be strictly increasing"));
    }
    Ok(())
}

/// Fee rates and barrier levels of the two-layer expense strategy.
///
/// Fees are charged at rate `alpha1` while the account is below `level1`
/// and at rate `alpha2` while it is at or above `level2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeStructure {
    alpha1: f64,
    alpha2: f64,
    initial: f64,
    level1: f64,
    level2: f64,
}

impl FeeStructure {
    pub fn new(alpha1: f64, alpha2: f64, initial: f64, level1: f64, level2: f64) -> Result<Self> {
        require_non_negative("alpha1", alpha1)?;
        require_non_negative("alpha2", alpha2)?;
        require_positive("F0", initial)?;
        require_positive("B1", level1)?;
        require_positive("B2", level2)?;
        if level1 > level2 {
            return Err(invalid(
                "B2",
                format!("lower level {level1} exceeds upper level {level2}"),
            ));
        }
        Ok(Self {
            alpha1,
            alpha2,
            initial,
            level1,
            level2,
        })
    }

    /// Fee structure expressed directly in log-barriers relative to a unit premium.
    pub fn from_log_barriers(alpha1: f64, alpha2: f64, b1: f64, b2: f64) -> Result<Self> {
        if !(b1.is_finite() && b2.is_finite()) {
            return Err(invalid("b1", "log barriers must be finite"));
        }
        Self::new(alpha1, alpha2, 1.0, b1.exp(), b2.exp())
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    /// Initial premium `F0`.
    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn level1(&self) -> f64 {
        self.level1
    }

    pub fn level2(&self) -> f64 {
        self.level2
    }

    /// `b1 = ln(B1 / F0)`.
    pub fn b1(&self) -> f64 {
        (self.level1 / self.initial).ln()
    }

    /// `b2 = ln(B2 / F0)`.
    pub fn b2(&self) -> f64 {
        (self.level2 / self.initial).ln()
    }

    /// Whether both barriers coincide in log space.
    pub fn is_merged(&self) -> bool {
        self.b1() == self.b2()
    }

    /// Drift deduction applied at log-account level `u`.
    pub fn deduction(&self, u: f64) -> f64 {
        if u < self.b1() {
            self.alpha1
        } else if u >= self.b2() {
            self.alpha2
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Term-by-term evaluation of the exponent, written independently.
    fn exponent_by_terms(m: &HejdModel, z: f64) -> f64 {
        let diffusion = m.sigma() * m.sigma() * z * z / 2.0;
        let drift = m.mu() * z;
        let mut up = 0.0;
        for i in 0..m.m() {
            up += m.up_weights()[i] * m.up_rates()[i] / (m.up_rates()[i] - z);
        }
        let mut down = 0.0;
        for j in 0..m.n() {
            down += m.down_weights()[j] * m.down_rates()[j] / (m.down_rates()[j] + z);
        }
        diffusion + drift + m.lambda() * (up + down - 1.0)
    }

    #[test]
    fn exponent_vanishes_at_origin() {
        let m = HejdModel::new(
            0.3,
            -0.1,
            2.0,
            vec![0.2, 0.1],
            vec![4.0, 9.0],
            vec![0.3, 0.4],
            vec![2.0, 7.0],
        )
        .unwrap();
        assert!(m.levy_exponent(0.0, c(0.0)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn calibrated_baseline_is_martingale() {
        let m = HejdModel::baseline();
        let v = m.levy_exponent(0.0, c(1.0)).unwrap();
        assert!((v.re - 0.05).abs() < 1e-12);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn exponent_matches_term_by_term() {
        let m = HejdModel::baseline();
        let v = m.levy_exponent(0.0, c(0.5)).unwrap();
        assert!((v.re - exponent_by_terms(&m, 0.5)).abs() < 1e-14);
    }

    #[test]
    fn shifted_exponent_subtracts_linear_term() {
        let m = HejdModel::baseline();
        let z = Complex64::new(0.7, -1.3);
        let a = m.levy_exponent(0.0, z).unwrap();
        let b = m.levy_exponent(0.02, z).unwrap();
        assert!((a - b - 0.02 * z).norm() < 1e-14);
    }

    #[test]
    fn calibration_agrees_with_bisection_on_drift() {
        let base = HejdModel::double_exponential(0.3, 0.0, 1.0, 0.5, 15.0, 15.0).unwrap();
        let calibrated = base.calibrate_drift(0.05).unwrap();
        // ψ(1) is affine in μ, so bisect μ ↦ ψ_μ(1) − r independently.
        let (mut lo, mut hi) = (-5.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = exponent_by_terms(&base.with_mu(mid).unwrap(), 1.0) - 0.05;
            if v < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((calibrated.mu() - 0.5 * (lo + hi)).abs() < 1e-12);
        let v = calibrated.levy_exponent(0.0, c(1.0)).unwrap();
        assert!((v.re - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(HejdModel::double_exponential(0.2, 0.0, 0.0, 0.5, 15.0, 15.0).is_err());
        assert!(HejdModel::double_exponential(0.0, 0.0, 1.0, 0.5, 15.0, 15.0).is_err());
        assert!(HejdModel::double_exponential(0.2, 0.0, 1.0, 0.5, 0.9, 15.0).is_err());
        assert!(HejdModel::new(0.2, 0.0, 1.0, vec![0.3], vec![5.0], vec![0.3], vec![5.0]).is_err());
        assert!(HejdModel::new(
            0.2,
            0.0,
            1.0,
            vec![0.3, 0.2],
            vec![5.0, 4.0],
            vec![0.5],
            vec![5.0]
        )
        .is_err());
    }

    #[test]
    fn pole_is_reported() {
        let m = HejdModel::baseline();
        assert!(matches!(
            m.levy_exponent(0.0, c(15.0)),
            Err(Error::Pole { .. })
        ));
        assert!(matches!(
            m.levy_exponent(0.0, c(-15.0)),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn cleared_polynomial_matches_exponent() {
        let m = HejdModel::new(
            0.25,
            0.01,
            1.5,
            vec![0.3, 0.2],
            vec![3.0, 11.0],
            vec![0.5],
            vec![6.0],
        )
        .unwrap();
        let q = Complex64::new(0.3, 2.0);
        let poly = m.cleared_polynomial(0.01, q);
        assert_eq!(poly.degree(), m.m() + m.n() + 2);
        let z = Complex64::new(0.4, 0.9);
        let denom = (3.0 - z) * (11.0 - z) * (6.0 + z);
        let expected = (m.levy_exponent(0.01, z).unwrap() - q) * denom;
        assert!((poly.eval(z) - expected).norm() < 1e-10 * expected.norm().max(1.0));
    }

    #[test]
    fn fee_structure_derives_log_barriers() {
        let f = FeeStructure::new(0.018, 0.009, 100.0, 100.0, 120.0).unwrap();
        assert_eq!(f.b1(), 0.0);
        assert!((f.b2() - 1.2f64.ln()).abs() < 1e-15);
        assert!(FeeStructure::new(0.01, 0.01, 100.0, 130.0, 120.0).is_err());
        assert!(FeeStructure::new(-0.01, 0.01, 100.0, 100.0, 120.0).is_err());
        assert_eq!(f.deduction(-0.1), 0.018);
        assert_eq!(f.deduction(0.1), 0.0);
        assert_eq!(f.deduction(f.b2()), 0.009);
    }
}

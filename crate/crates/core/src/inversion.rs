//! Numerical Laplace inversion by the Euler (Abate–Whitt) algorithm.
//!
//! ```text
//! f(T) ≈ e^{A/2}/(2T) Re f̂(A/2T) + e^{A/2}/T Σ_{k≥1} (−1)^k Re f̂((A + 2kπi)/2T)
//! ```
//!
//! The alternating tail is accelerated by binomial averaging of the last
//! partial sums. The discretization error is at most `B e^{-A}` for `|f| ≤ B`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// Parameters of the Euler algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    /// Discretization exponent `A`.
    pub a_tilde: f64,
    /// Index of the last series term (terms `0..=series_terms` are summed).
    pub series_terms: usize,
    /// Number of trailing partial sums combined by binomial averaging.
    pub euler_average_terms: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            a_tilde: 20.0,
            series_terms: 64,
            euler_average_terms: 12,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_tilde.is_finite() && self.a_tilde > 0.0) {
            return Err(invalid("a_tilde", format!("must be positive, got {}", self.a_tilde)));
        }
        if self.euler_average_terms == 0 || self.series_terms <= self.euler_average_terms {
            return Err(invalid(
                "series_terms",
                format!(
                    "must exceed euler_average_terms ({} vs {})",
                    self.series_terms, self.euler_average_terms
                ),
            ));
        }
        Ok(())
    }

    /// The transform arguments `(A + 2kπi)/2T`, `k = 0..=series_terms`.
    pub fn nodes(&self, t: f64) -> Vec<Complex64> {
        (0..=self.series_terms)
            .map(|k| Complex64::new(self.a_tilde, 2.0 * std::f64::consts::PI * k as f64) / (2.0 * t))
            .collect()
    }
}

/// Inverts a scalar transform at time `t`.
pub fn euler_invert<F>(transform: F, t: f64, cfg: &InversionConfig) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let out = euler_invert_many(|s| transform(s).map(|v| vec![v]), 1, t, cfg)?;
    Ok(out[0])
}

/// Inverts `width` transforms that share their node evaluations.
///
/// Nodes are evaluated in parallel; the summation order is fixed.
pub fn euler_invert_many<F>(transform: F, width: usize, t: f64, cfg: &InversionConfig) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>> + Sync,
{
    cfg.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid("T", format!("must be positive, got {t}")));
    }
    let nodes = cfg.nodes(t);
    let values: Vec<Vec<Complex64>> = nodes
        .par_iter()
        .map(|&s| {
            let v = transform(s)?;
            if v.len() != width || v.iter().any(|z| !z.is_finite()) {
                return Err(Error::NonFinite { s });
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;

    let scale = (cfg.a_tilde / 2.0).exp() / t;
    let n = cfg.series_terms;
    let m = cfg.euler_average_terms;
    let weights = binomial_weights(m);
    let mut out = Vec::with_capacity(width);
    for w in 0..width {
        let mut partial = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for (k, v) in values.iter().enumerate() {
            let term = match k {
                0 => 0.5 * v[w].re,
                _ if k % 2 == 0 => v[w].re,
                _ => -v[w].re,
            };
            acc += scale * term;
            partial.push(acc);
        }
        let averaged: f64 = weights
            .iter()
            .zip(&partial[n - m..])
            .map(|(wt, s)| wt * s)
            .sum();
        out.push(averaged);
    }
    Ok(out)
}

/// `C(m, j) / 2^m` for `j = 0..=m`.
fn binomial_weights(m: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..m {
        let mut next = vec![1.0; row.len() + 1];
        for j in 1..row.len() {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    let total = 2f64.powi(m as i32);
    row.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn invert(f: impl Fn(Complex64) -> Complex64 + Sync, t: f64) -> f64 {
        euler_invert(|s| Ok(f(s)), t, &InversionConfig::default()).unwrap()
    }

    #[test]
    fn ramp() {
        for t in [0.5, 5.0, 20.0] {
            assert!((invert(|s| 1.0 / (s * s), t) - t).abs() < 1e-6, "T={t}");
        }
    }

    #[test]
    fn exponential_decay() {
        assert!((invert(|s| 1.0 / (s + 1.0), 2.0) - (-2.0f64).exp()).abs() < 1e-8);
        for t in [0.5, 5.0, 20.0] {
            let a = 0.3;
            assert!((invert(|s| 1.0 / (s + a), t) - (-a * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn indicator_of_unit_interval() {
        // ∫_0^1 e^{-sT} dT = (1 − e^{-s})/s.
        let v = invert(|s| (1.0 - (-s).exp()) / s, 0.5);
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn oscillating_pair() {
        // sin(ωT) ↔ ω/(s² + ω²).
        let w = 1.3;
        let v = invert(|s| w / (s * s + w * w), 2.0);
        assert!((v - (w * 2.0f64).sin()).abs() < 1e-7);
    }

    #[test]
    fn binomial_weights_sum_to_one() {
        let w = binomial_weights(12);
        assert_eq!(w.len(), 13);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((w[6] - 924.0 / 4096.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = InversionConfig {
            series_terms: 5,
            euler_average_terms: 12,
            ..Default::default()
        };
        assert!(euler_invert(|s| Ok(1.0 / s), 1.0, &cfg).is_err());
        assert!(euler_invert(|s| Ok(1.0 / s), -1.0, &InversionConfig::default()).is_err());
    }

    #[test]
    fn non_finite_is_reported() {
        let r = euler_invert(|_| Ok(Complex64::new(f64::NAN, 0.0)), 1.0, &InversionConfig::default());
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    proptest! {
        #[test]
        fn linear(a in -3.0f64..3.0, b in -3.0f64..3.0, rate in 0.01f64..2.0, t in 0.2f64..15.0) {
            let cfg = InversionConfig::default();
            let f = |s: Complex64| 1.0 / (s + rate);
            let g = |s: Complex64| 1.0 / (s + 1.0) / (s + 2.0);
            let lhs = euler_invert(|s| Ok(a * f(s) + b * g(s)), t, &cfg).unwrap();
            let rhs = a * euler_invert(|s| Ok(f(s)), t, &cfg).unwrap()
                + b * euler_invert(|s| Ok(g(s)), t, &cfg).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}

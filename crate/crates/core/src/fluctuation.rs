//! Wiener–Hopf building blocks for the (shifted) jump diffusion.
//!
//! The running supremum `S` and infimum `I` of `Y_t = X_t − shift·t` up to an
//! independent exponential time `e(q)` are mixtures of exponentials:
//!
//! ```text
//! P(S ∈ dy) = Σ C_i e^{-β_i y} dy,   P(−I ∈ dy) = Σ D_j e^{-γ_j y} dy.
//! ```
//!
//! This module computes `C`, `D`, the identities they satisfy, and the
//! one- and two-sided exit expectations that the distribution formulas are
//! assembled from.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::linalg::Factorized;
use crate::model::{solve_roots, HejdModel, RootSet};

/// Mixture coefficients of the running supremum (`C`) and infimum (`D`).
#[derive(Debug, Clone)]
pub struct ExtremaCoefficients {
    roots: RootSet,
    up_rates: Vec<f64>,
    down_rates: Vec<f64>,
    c_hat: Vec<Complex64>,
    d_hat: Vec<Complex64>,
}

/// Computes `C_i` and `D_j` from the roots of the shifted exponent.
///
/// `C_i / β_i = Π_k (η_k − β_i)/η_k · Π_{k≠i} β_k/(β_k − β_i)` and
/// symmetrically for `D_j` with `ϑ` and `γ`.
pub fn extrema_coefficients(roots: &RootSet, model: &HejdModel) -> ExtremaCoefficients {
    let c_hat = mixture_weights(roots.betas(), model.up_rates());
    let d_hat = mixture_weights(roots.gammas(), model.down_rates());
    ExtremaCoefficients {
        roots: roots.clone(),
        up_rates: model.up_rates().to_vec(),
        down_rates: model.down_rates().to_vec(),
        c_hat,
        d_hat,
    }
}

fn mixture_weights(roots: &[Complex64], rates: &[f64]) -> Vec<Complex64> {
    roots
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut w = r;
            for &rate in rates {
                w *= (rate - r) / rate;
            }
            for (k, &other) in roots.iter().enumerate() {
                if k != i {
                    w *= other / (other - r);
                }
            }
            w
        })
        .collect()
}

impl ExtremaCoefficients {
    pub fn roots(&self) -> &RootSet {
        &self.roots
    }

    /// Supremum coefficients `C_1, …, C_{m+1}`.
    pub fn c_hat(&self) -> &[Complex64] {
        &self.c_hat
    }

    /// Infimum coefficients `D_1, …, D_{n+1}`.
    pub fn d_hat(&self) -> &[Complex64] {
        &self.d_hat
    }

    /// `E[e^{-s S}] = Σ C_i/(s + β_i)`.
    pub fn supremum_transform(&self, s: Complex64) -> Complex64 {
        self.c_hat
            .iter()
            .zip(self.roots.betas())
            .map(|(c, b)| c / (s + b))
            .sum()
    }

    /// `E[e^{s I}] = Σ D_j/(s + γ_j)`.
    pub fn infimum_transform(&self, s: Complex64) -> Complex64 {
        self.d_hat
            .iter()
            .zip(self.roots.gammas())
            .map(|(d, g)| d / (s + g))
            .sum()
    }

    /// Product form `Π_k (s+η_k)/η_k · Π_k β_k/(s+β_k)` of the supremum transform.
    pub fn supremum_transform_product(&self, s: Complex64) -> Complex64 {
        product_form(s, &self.up_rates, self.roots.betas())
    }

    /// Product form of the infimum transform.
    pub fn infimum_transform_product(&self, s: Complex64) -> Complex64 {
        product_form(s, &self.down_rates, self.roots.gammas())
    }

    /// `P(S > y) = Σ (C_i/β_i) e^{-β_i y}` for `y ≥ 0`.
    pub fn supremum_tail(&self, y: f64) -> Complex64 {
        self.c_hat
            .iter()
            .zip(self.roots.betas())
            .map(|(c, b)| c / b * (-b * y).exp())
            .sum()
    }

    /// `P(−I > y) = Σ (D_j/γ_j) e^{-γ_j y}` for `y ≥ 0`.
    pub fn infimum_tail(&self, y: f64) -> Complex64 {
        self.d_hat
            .iter()
            .zip(self.roots.gammas())
            .map(|(d, g)| d / g * (-g * y).exp())
            .sum()
    }

    /// Coefficients of the law of `Y_{e(q)}` started at `x`:
    /// `P_x(Y > y) = Σ A_i e^{β_i(x−y)}` for `x ≤ y` and
    /// `1 + Σ B_j e^{γ_j(y−x)}` for `x ≥ y`.
    pub fn threshold_coefficients(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let a = self
            .c_hat
            .iter()
            .zip(self.roots.betas())
            .map(|(c, &b)| c / b * self.infimum_transform(b))
            .collect();
        let b = self
            .d_hat
            .iter()
            .zip(self.roots.gammas())
            .map(|(d, &g)| -d / g * self.supremum_transform(g))
            .collect();
        (a, b)
    }

    /// Largest relative violation of the Wiener–Hopf factorization
    /// `E[e^{z S}] E[e^{z I}] = q / (q − ψ(z) + shift·z)` on a few test points.
    ///
    /// Unlike the coefficient identities, this fails when a root is wrong.
    pub fn factorization_residual(&self, model: &HejdModel) -> f64 {
        let q = self.roots.q();
        let shift = self.roots.shift();
        [
            Complex64::new(0.0, 0.5),
            Complex64::new(-0.3, 1.0),
            Complex64::new(0.2, -2.0),
            Complex64::new(0.0, 4.0),
        ]
        .iter()
        .map(|&z| match model.levy_exponent(shift, z) {
            Ok(psi) => {
                let product = self.supremum_transform(-z) * self.infimum_transform(z);
                ((product * (q - psi) - q) / q).norm()
            }
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
    }

    /// Largest violation of `Σ C_i/β_i = 1`, `Σ D_j/γ_j = 1`,
    /// `Σ C_i/(β_i − η_k) = 0` and `Σ D_j/(γ_j − ϑ_k) = 0`.
    pub fn identity_residual(&self) -> f64 {
        let betas = self.roots.betas();
        let gammas = self.roots.gammas();
        let mut worst = 0.0f64;
        let total_c: Complex64 = self.c_hat.iter().zip(betas).map(|(c, b)| c / b).sum();
        let total_d: Complex64 = self.d_hat.iter().zip(gammas).map(|(d, g)| d / g).sum();
        worst = worst.max((total_c - 1.0).norm()).max((total_d - 1.0).norm());
        for &eta in &self.up_rates {
            let s: Complex64 = self.c_hat.iter().zip(betas).map(|(c, b)| c / (b - eta)).sum();
            worst = worst.max(s.norm());
        }
        for &theta in &self.down_rates {
            let s: Complex64 = self.d_hat.iter().zip(gammas).map(|(d, g)| d / (g - theta)).sum();
            worst = worst.max(s.norm());
        }
        worst
    }
}

fn product_form(s: Complex64, rates: &[f64], roots: &[Complex64]) -> Complex64 {
    let mut v = Complex64::new(1.0, 0.0);
    for &rate in rates {
        v *= (s + rate) / rate;
    }
    for &r in roots {
        v *= r / (s + r);
    }
    v
}

/// `Σ_i Π_k (a_i − z_k) / Π_{k≠i} (a_i − a_k)`, which vanishes whenever the
/// nodes `a` are distinct and there are fewer than `len(a) − 1` zeros `z`
/// (it is the top divided difference of a low-degree polynomial).
pub fn partial_fraction_sum(nodes: &[f64], zeros: &[f64]) -> f64 {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let num: f64 = zeros.iter().map(|z| a - z).product();
            let den: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, b)| a - b)
                .product();
            num / den
        })
        .sum()
}

fn contract(row: &[f64], mat: DMatrix<Complex64>, column: Vec<Complex64>, what: &'static str) -> Result<Complex64> {
    let solved = Factorized::new(mat, what)?.solve(&column);
    Ok(row.iter().zip(solved.iter()).map(|(g, v)| g * v).sum())
}

/// `E_x[e^{-q τ_c^-} g(Y_{τ_c^-})]` for `x > c`, where `Y_t = X_t − shift·t`.
///
/// `g_values = (g(c), g_{ϑ_1}(c), …, g_{ϑ_n}(c))` with
/// `g_{ϑ}(c) = ∫_{-∞}^0 g(c+y) ϑ e^{ϑ y} dy`; `g ≡ 1` gives all ones.
pub fn downward_exit_expectation(
    model: &HejdModel,
    shift: f64,
    q: Complex64,
    c: f64,
    x: f64,
    g_values: &[f64],
) -> Result<Complex64> {
    if g_values.len() != model.n() + 1 {
        return Err(invalid("g_values", format!("expected {} values", model.n() + 1)));
    }
    if !(x > c) {
        return Err(invalid("x", format!("must lie above the barrier {c}, got {x}")));
    }
    let roots = solve_roots(model, shift, q)?;
    let n1 = model.n() + 1;
    let mat = DMatrix::from_fn(n1, n1, |j, k| match k {
        0 => Complex64::new(1.0, 0.0),
        _ => {
            let theta = model.down_rates()[k - 1];
            theta / (theta - roots.gammas()[j])
        }
    });
    let column = roots.gammas().iter().map(|g| (-g * (x - c)).exp()).collect();
    contract(g_values, mat, column, "downward exit")
}

/// `E_x[e^{-q τ_C^+} g(Y_{τ_C^+})]` for `x < C`.
///
/// `g_values = (g(C), g_{η_1}(C), …, g_{η_m}(C))` with
/// `g_{η}(C) = ∫_0^∞ η e^{-η y} g(C+y) dy`.
pub fn upward_exit_expectation(
    model: &HejdModel,
    shift: f64,
    q: Complex64,
    upper: f64,
    x: f64,
    g_values: &[f64],
) -> Result<Complex64> {
    if g_values.len() != model.m() + 1 {
        return Err(invalid("g_values", format!("expected {} values", model.m() + 1)));
    }
    if !(x < upper) {
        return Err(invalid("x", format!("must lie below the barrier {upper}, got {x}")));
    }
    let roots = solve_roots(model, shift, q)?;
    let m1 = model.m() + 1;
    let mat = DMatrix::from_fn(m1, m1, |i, k| match k {
        0 => Complex64::new(1.0, 0.0),
        _ => {
            let eta = model.up_rates()[k - 1];
            eta / (eta - roots.betas()[i])
        }
    });
    let column = roots.betas().iter().map(|b| (b * (x - upper)).exp()).collect();
    contract(g_values, mat, column, "upward exit")
}

/// `E_x[e^{-q τ} g(X_τ)]` with `τ` the first exit of the unshifted process
/// from `(c, C)`.
///
/// `g_upper = (g(C), g_{η_1}(C), …)` and `g_lower = (g(c), g_{ϑ_1}(c), …)`.
pub fn two_sided_exit_expectation(
    model: &HejdModel,
    q: Complex64,
    lower: f64,
    upper: f64,
    x: f64,
    g_upper: &[f64],
    g_lower: &[f64],
) -> Result<Complex64> {
    let (m, n) = (model.m(), model.n());
    if g_upper.len() != m + 1 || g_lower.len() != n + 1 {
        return Err(invalid(
            "g_values",
            format!("expected {} upper and {} lower values", m + 1, n + 1),
        ));
    }
    if !(lower < x && x < upper) {
        return Err(invalid("x", format!("must lie in ({lower}, {upper}), got {x}")));
    }
    let roots = solve_roots(model, 0.0, q)?;
    let gap = lower - upper;
    let size = m + n + 2;
    let mut mat = DMatrix::<Complex64>::zeros(size, size);
    for (i, &b) in roots.betas().iter().enumerate() {
        let xb = (b * gap).exp();
        mat[(i, 0)] = Complex64::new(1.0, 0.0);
        for (k, &eta) in model.up_rates().iter().enumerate() {
            mat[(i, 1 + k)] = eta / (eta - b);
        }
        mat[(i, m + 1)] = xb;
        for (k, &theta) in model.down_rates().iter().enumerate() {
            mat[(i, m + 2 + k)] = theta * xb / (theta + b);
        }
    }
    for (j, &g) in roots.gammas().iter().enumerate() {
        let row = m + 1 + j;
        let xg = (g * gap).exp();
        mat[(row, 0)] = xg;
        for (k, &eta) in model.up_rates().iter().enumerate() {
            mat[(row, 1 + k)] = eta * xg / (eta + g);
        }
        mat[(row, m + 1)] = Complex64::new(1.0, 0.0);
        for (k, &theta) in model.down_rates().iter().enumerate() {
            mat[(row, m + 2 + k)] = theta / (theta - g);
        }
    }
    let column = roots
        .betas()
        .iter()
        .map(|b| (b * (x - upper)).exp())
        .chain(roots.gammas().iter().map(|g| (-g * (x - lower)).exp()))
        .collect();
    let row: Vec<f64> = g_upper.iter().chain(g_lower).copied().collect();
    contract(&row, mat, column, "two-sided exit")
}

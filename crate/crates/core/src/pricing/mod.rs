//! Fair fees for a return-of-premium maturity guarantee (`K = B1 = F0`,
//! `B2 > F0`) under the two-layer fee strategy.
//!
//! The contract is fair when `F0 = E[e^{-rT} F_T] + E[e^{-rT}(F0 − F_T)_+]`.
//! Both expectations are obtained by inverting their Laplace transforms in
//! the maturity; with `q = s + r` these are `E[F_{e(q)}]/q` and
//! `E[(F0 − F_{e(q)})_+]/q`, which integrate the distribution of the
//! refracted account against `e^y`.

mod brent;

pub use brent::{brent, BrentRoot};

use std::sync::Mutex;

use num_complex::Complex64;

use crate::distribution::{down_pattern, up_pattern, DistributionContext};
use crate::error::{invalid, require_positive, Error, Result};
use crate::inversion::{euler_invert_many, InversionConfig};
use crate::model::{FeeStructure, HejdModel};

/// Upper end of the fee bracket searched by [`solve_fair_fee`].
pub const ALPHA_MAX: f64 = 2.0;
/// Absolute tolerance on the solved fee rate.
pub const FEE_TOL: f64 = 1e-7;

/// Distance below which a transform denominator is treated as a pole.
const POLE_TOL: f64 = 1e-10;
/// Distance at which an inversion node is nudged away from a pole.
const NODE_GUARD: f64 = 1e-8;
const NODE_NUDGE: f64 = 1e-7;

/// Contract terms. The guarantee and the lower fee level both equal `F0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractSpec {
    f0: f64,
    b2_level: f64,
    maturity: f64,
    rate: f64,
    fee_ratio: f64,
}

impl ContractSpec {
    pub fn new(f0: f64, b2_level: f64, maturity: f64, rate: f64, fee_ratio: f64) -> Result<Self> {
        require_positive("F0", f0)?;
        require_positive("T", maturity)?;
        require_positive("r", rate)?;
        require_positive("fee_ratio", fee_ratio)?;
        if !(b2_level.is_finite() && b2_level > f0) {
            return Err(invalid("B2", format!("must exceed F0 = {f0}, got {b2_level}")));
        }
        Ok(Self {
            f0,
            b2_level,
            maturity,
            rate,
            fee_ratio,
        })
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// Guarantee level `K` (equal to `F0`).
    pub fn strike(&self) -> f64 {
        self.f0
    }

    pub fn b2_level(&self) -> f64 {
        self.b2_level
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `α₂ / α₁`.
    pub fn fee_ratio(&self) -> f64 {
        self.fee_ratio
    }

    /// Fee structure with lower rate `alpha1` and upper rate `fee_ratio·alpha1`.
    pub fn fees(&self, alpha1: f64) -> Result<FeeStructure> {
        FeeStructure::new(alpha1, self.fee_ratio * alpha1, self.f0, self.f0, self.b2_level)
    }
}

/// Solver and numerical diagnostics attached to a quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// Brent iterations used for the fee search.
    pub iterations: usize,
    /// `fund + guarantee − F0` at the solved fee.
    pub gap_residual: f64,
    /// Largest gluing-matrix condition estimate over the inversion nodes.
    pub q1_condition_max: f64,
}

/// Fair fees and the quantities reported alongside them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceQuote {
    pub alpha1_star: f64,
    pub alpha2_star: f64,
    /// `E[e^{-rT}(K − F_T)_+]`.
    pub guarantee_value: f64,
    /// `E[e^{-rT} F_T]`.
    pub fund_value: f64,
    /// Expected discounted fees collected, `F0 − fund_value`.
    pub total_fees: f64,
    /// Expected time spent below `B1` up to maturity.
    pub ttime1: f64,
    /// Expected time spent at or above `B2` up to maturity.
    pub ttime2: f64,
    pub diagnostics: Diagnostics,
}

/// `(fund transform, put transform)` divided by `F0`, evaluated from a
/// context built at `q = s + r` with `b1 = 0`.
fn unit_transforms(ctx: &DistributionContext) -> Result<(Complex64, Complex64)> {
    let b2 = ctx.b2();
    if ctx.b1() != 0.0 || !(b2 > 0.0) {
        return Err(invalid("B1", "pricing transforms need B1 = F0 < B2"));
    }
    let pole = pole_distance(ctx);
    if pole < POLE_TOL {
        return Err(Error::Singularity {
            what: "β − 1 or 1 + γ̃",
            magnitude: pole,
        });
    }
    let model = ctx.model();
    let q1 = ctx.q1().expect("b1 < b2 gives a gluing matrix");
    let half = model.m() + model.n() + 2;
    let (beta, gamma) = (ctx.unshifted_roots().betas(), ctx.unshifted_roots().gammas());
    let gamma_t = ctx.lower_roots().gammas();
    let beta_h = ctx.upper_roots().betas();
    let eb2 = b2.exp();

    // ∫_{-∞}^0 e^y h̃(y) dy (up to sign), shared by both transforms.
    let mut below = vec![Complex64::new(0.0, 0.0); 2 * half];
    let mut lower_tail = Complex64::new(0.0, 0.0);
    for (g_coef, &g) in ctx.g_tilde().iter().zip(gamma_t) {
        let w = g_coef / (1.0 + g);
        lower_tail += w;
        crate::distribution::axpy(&mut below[..half], -w, &down_pattern(model, g));
    }

    // ∫_0^{b2} e^y ĥ(y) dy + ∫_{b2}^∞ e^y h(y) dy.
    let mut above = vec![Complex64::new(0.0, 0.0); 2 * half];
    for (u, &b) in ctx.u_hat().iter().zip(beta) {
        let w = u * (1.0 - ((1.0 - b) * b2).exp()) / (b - 1.0);
        crate::distribution::axpy(&mut above[..half], w, &up_pattern(model, b));
    }
    for (v, &g) in ctx.v_hat().iter().zip(gamma) {
        let w = v * ((-g * b2).exp() - eb2) / (g + 1.0);
        crate::distribution::axpy(&mut above[half..], w, &down_pattern(model, g));
    }
    for (h, &b) in ctx.h_coefficients().iter().zip(beta_h) {
        let w = h * eb2 / (b - 1.0);
        crate::distribution::axpy(&mut above[half..], w, &up_pattern(model, b));
    }

    let m1 = model.m() + 1;
    let lead = |row: &[Complex64]| -> Complex64 { q1.solve_row(row)[..m1].iter().sum() };
    let v: Vec<Complex64> = above.iter().zip(&below).map(|(a, b)| a - b).collect();
    let q = ctx.q();
    let fund = (1.0 + lead(&v) - lower_tail) / q;
    let put = (lower_tail + lead(&below)) / q;
    Ok((fund, put))
}

/// Smallest of `|β_i − 1|`, `|β̂_i − 1|`, `|1 + γ̃_j|`.
fn pole_distance(ctx: &DistributionContext) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    ctx.unshifted_roots()
        .betas()
        .iter()
        .chain(ctx.upper_roots().betas())
        .map(|b| (b - one).norm())
        .chain(ctx.lower_roots().gammas().iter().map(|g| (g + one).norm()))
        .fold(f64::INFINITY, f64::min)
}

/// `∫_0^∞ e^{-sT} E[e^{-rT} F_T] dT`.
pub fn fund_value_transform(model: &HejdModel, fees: &FeeStructure, rate: f64, s: Complex64) -> Result<Complex64> {
    let ctx = DistributionContext::new(model, fees, s + rate)?;
    Ok(fees.initial() * unit_transforms(&ctx)?.0)
}

/// `∫_0^∞ e^{-sT} E[e^{-rT} (F0 − F_T)_+] dT`.
pub fn put_value_transform(model: &HejdModel, fees: &FeeStructure, rate: f64, s: Complex64) -> Result<Complex64> {
    let ctx = DistributionContext::new(model, fees, s + rate)?;
    Ok(fees.initial() * unit_transforms(&ctx)?.1)
}

/// Fund and put transforms at an inversion node, nudging the node once if
/// it sits next to a pole of the transforms.
fn node_transforms(model: &HejdModel, fees: &FeeStructure, rate: f64, s: Complex64) -> Result<(Complex64, Complex64, f64)> {
    let mut ctx = DistributionContext::new(model, fees, s + rate)?;
    if pole_distance(&ctx) < NODE_GUARD {
        ctx = DistributionContext::new(model, fees, s + NODE_NUDGE + rate)?;
    }
    let (fund, put) = unit_transforms(&ctx)?;
    Ok((fees.initial() * fund, fees.initial() * put, ctx.q1_condition()))
}

/// Discounted fund value, guarantee value and the worst gluing condition.
pub fn contract_values(
    model: &HejdModel,
    fees: &FeeStructure,
    rate: f64,
    maturity: f64,
    cfg: &InversionConfig,
) -> Result<(f64, f64, f64)> {
    let worst = Mutex::new(0.0f64);
    let out = euler_invert_many(
        |s| {
            let (fund, put, cond) = node_transforms(model, fees, rate, s)?;
            let mut w = worst.lock().expect("condition tracker poisoned");
            *w = w.max(cond);
            Ok(vec![fund, put])
        },
        2,
        maturity,
        cfg,
    )?;
    let cond = worst.into_inner().expect("condition tracker poisoned");
    Ok((out[0], out[1], cond))
}

/// `E[e^{-rT}F_T] + E[e^{-rT}(K − F_T)_+] − F0` at lower fee rate `alpha1`.
///
/// The drift of `model_base` is recalibrated to the contract's rate.
pub fn contract_gap(model_base: &HejdModel, spec: &ContractSpec, alpha1: f64, cfg: &InversionConfig) -> Result<f64> {
    let model = model_base.calibrate_drift(spec.rate())?;
    gap_calibrated(&model, spec, alpha1, cfg)
}

fn gap_calibrated(model: &HejdModel, spec: &ContractSpec, alpha1: f64, cfg: &InversionConfig) -> Result<f64> {
    let fees = spec.fees(alpha1)?;
    let out = euler_invert_many(
        |s| {
            let (fund, put, _) = node_transforms(model, &fees, spec.rate(), s)?;
            Ok(vec![fund + put])
        },
        1,
        spec.maturity(),
        cfg,
    )?;
    Ok(out[0] - spec.f0())
}

/// Expected occupation times `(below b1, at or above b2)` over `[0, T]`,
/// started from `U_0 = 0`.
pub fn occupation_expectations(
    model: &HejdModel,
    fees: &FeeStructure,
    maturity: f64,
    cfg: &InversionConfig,
) -> Result<(f64, f64)> {
    let (b1, b2) = (fees.b1(), fees.b2());
    let out = euler_invert_many(
        |s| {
            let ctx = DistributionContext::new(model, fees, s)?;
            let (_, below) = ctx.occupation_time_transforms(0.0, b1)?;
            let (above, _) = ctx.occupation_time_transforms(0.0, b2)?;
            Ok(vec![below, above])
        },
        2,
        maturity,
        cfg,
    )?;
    Ok((out[0], out[1]))
}

/// Solves for the fair lower fee rate on `[0, ALPHA_MAX]` and reports the
/// associated values. The drift of `model_base` is recalibrated to the
/// contract's rate.
/// `F0 − E[e^{−rT}F_T]` for a given fee rate `α₁` (and `α₂ = ratio·α₁`).
///
/// Published tables quote fees at the fee rate as printed, so this is also
/// what reproduces them from a rounded `α₁*`.
pub fn total_fees_at(model_base: &HejdModel, spec: &ContractSpec, alpha1: f64, cfg: &InversionConfig) -> Result<f64> {
    let model = model_base.calibrate_drift(spec.rate())?;
    let fees = spec.fees(alpha1)?;
    let (fund, _, _) = contract_values(&model, &fees, spec.rate(), spec.maturity(), cfg)?;
    Ok(spec.f0() - fund)
}

pub fn solve_fair_fee(model_base: &HejdModel, spec: &ContractSpec, cfg: &InversionConfig) -> Result<PriceQuote> {
    let model = model_base.calibrate_drift(spec.rate())?;
    let root = brent(|a| gap_calibrated(&model, spec, a, cfg), 0.0, ALPHA_MAX, FEE_TOL, 100)?;
    let alpha1 = root.x;
    let fees = spec.fees(alpha1)?;
    let (fund_value, guarantee_value, q1_condition_max) =
        contract_values(&model, &fees, spec.rate(), spec.maturity(), cfg)?;
    let (ttime1, ttime2) = occupation_expectations(&model, &fees, spec.maturity(), cfg)?;
    Ok(PriceQuote {
        alpha1_star: alpha1,
        alpha2_star: fees.alpha2(),
        guarantee_value,
        fund_value,
        total_fees: spec.f0() - fund_value,
        ttime1,
        ttime2,
        diagnostics: Diagnostics {
            iterations: root.iterations,
            gap_residual: fund_value + guarantee_value - spec.f0(),
            q1_condition_max,
        },
    })
}

//! Law of the refracted account process `U` at an independent exponential
//! time `e(q)`.
//!
//! `U` follows `X` with drift reduced by `α₁` below `b1` and by `α₂` at or
//! above `b2`. For every threshold `y`, `x ↦ P_x(U_{e(q)} > y)` is a sum of
//! exponentials on each of the intervals cut out by `b1`, `b2` and `y`. The
//! coefficients attached to the level `y` are closed form; the rest solve a
//! linear system that glues the pieces together at the barriers.

mod closed_form;
mod q1;

pub use q1::{build_q1, Q1Matrix};

pub(crate) use q1::{axpy, down_pattern, up_pattern};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::model::{solve_roots, FeeStructure, HejdModel, RootSet};

/// Which representation a [`CoefficientSolution`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `P_x(U > y)` with `y ≥ b2 > b1`; unknowns `E, F, G, M`, closed `H, N`.
    AboveHigh,
    /// `P_x(U < y)` with `y < b1 < b2`; unknowns `F̃, M̃, H̃, Ñ`, closed `G̃, Ẽ`.
    BelowLow,
    /// `P_x(U > y)` with `b1 ≤ y ≤ b2`, `b1 < b2`; unknowns `Ê, Ĥ, Ĝ, N̂`, closed `Û, V̂`.
    Middle,
    /// `P_x(U > y)` with `y ≥ b1 = b2`; closed `H, N, M¹, E¹`.
    MergedAbove,
    /// `P_x(U < y)` with `y < b1 = b2`; closed `Ẽ, G̃, Ñ¹, F̃¹`.
    MergedBelow,
}

impl Regime {
    /// Whether [`CoefficientSolution::value`] is `P(U > y)` (else `P(U < y)`).
    pub fn is_survival(self) -> bool {
        matches!(self, Regime::AboveHigh | Regime::Middle | Regime::MergedAbove)
    }
}

/// Roots, gluing matrix and closed-form coefficients for one `(model, fees, q)`.
///
/// Everything that does not depend on the threshold `y` is computed once
/// here and reused across thresholds and starting points.
#[derive(Debug, Clone)]
pub struct DistributionContext {
    model: HejdModel,
    fees: FeeStructure,
    q: Complex64,
    unshifted: RootSet,
    lower: RootSet,
    upper: RootSet,
    q1: Option<Q1Matrix>,
    h: Vec<Complex64>,
    n: Vec<Complex64>,
    g_tilde: Vec<Complex64>,
    e_tilde: Vec<Complex64>,
    u_hat: Vec<Complex64>,
    v_hat: Vec<Complex64>,
}

impl DistributionContext {
    pub fn new(model: &HejdModel, fees: &FeeStructure, q: Complex64) -> Result<Self> {
        let unshifted = solve_roots(model, 0.0, q)?;
        let lower = solve_roots(model, fees.alpha1(), q)?;
        let upper = solve_roots(model, fees.alpha2(), q)?;
        Self::from_roots(model, fees, q, unshifted, lower, upper)
    }

    /// Builds a context from precomputed roots (shifts 0, α₁, α₂).
    pub fn from_roots(
        model: &HejdModel,
        fees: &FeeStructure,
        q: Complex64,
        unshifted: RootSet,
        lower: RootSet,
        upper: RootSet,
    ) -> Result<Self> {
        let (b1, b2) = (fees.b1(), fees.b2());
        let q1 = if b1 < b2 {
            Some(build_q1(model, &unshifted, &lower, &upper, b1, b2)?)
        } else {
            None
        };
        let h = closed_form::up_coefficients(model, &upper);
        let n = negate(closed_form::down_coefficients(model, &upper));
        let g_tilde = closed_form::down_coefficients(model, &lower);
        let e_tilde = negate(closed_form::up_coefficients(model, &lower));
        let u_hat = closed_form::up_coefficients(model, &unshifted);
        let v_hat = negate(closed_form::down_coefficients(model, &unshifted));
        Ok(Self {
            model: model.clone(),
            fees: *fees,
            q,
            unshifted,
            lower,
            upper,
            q1,
            h,
            n,
            g_tilde,
            e_tilde,
            u_hat,
            v_hat,
        })
    }

    pub fn model(&self) -> &HejdModel {
        &self.model
    }

    pub fn fees(&self) -> &FeeStructure {
        &self.fees
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn b1(&self) -> f64 {
        self.fees.b1()
    }

    pub fn b2(&self) -> f64 {
        self.fees.b2()
    }

    /// Roots `β, γ` of `ψ(z) = q`.
    pub fn unshifted_roots(&self) -> &RootSet {
        &self.unshifted
    }

    /// Roots `β̃, γ̃` of `ψ(z) − α₁z = q`.
    pub fn lower_roots(&self) -> &RootSet {
        &self.lower
    }

    /// Roots `β̂, γ̂` of `ψ(z) − α₂z = q`.
    pub fn upper_roots(&self) -> &RootSet {
        &self.upper
    }

    /// The gluing matrix; `None` when the barriers coincide.
    pub fn q1(&self) -> Option<&Q1Matrix> {
        self.q1.as_ref()
    }

    /// Condition estimate of the gluing system (1 when the barriers coincide).
    pub fn q1_condition(&self) -> f64 {
        self.q1.as_ref().map_or(1.0, Q1Matrix::condition)
    }

    /// `H` (α₂ regime, start below the threshold).
    pub fn h_coefficients(&self) -> &[Complex64] {
        &self.h
    }

    /// `N` (α₂ regime, start above the threshold).
    pub fn n_coefficients(&self) -> &[Complex64] {
        &self.n
    }

    /// `G̃` (α₁ regime, start above the threshold, law below it).
    pub fn g_tilde(&self) -> &[Complex64] {
        &self.g_tilde
    }

    /// `Ẽ` (α₁ regime, start below the threshold, law below it).
    pub fn e_tilde(&self) -> &[Complex64] {
        &self.e_tilde
    }

    /// `Û` (no fee, start below the threshold).
    pub fn u_hat(&self) -> &[Complex64] {
        &self.u_hat
    }

    /// `V̂` (no fee, start above the threshold).
    pub fn v_hat(&self) -> &[Complex64] {
        &self.v_hat
    }

    fn half(&self) -> usize {
        self.model.m() + self.model.n() + 2
    }

    fn require_q1(&self, what: &'static str) -> Result<&Q1Matrix> {
        self.q1
            .as_ref()
            .ok_or_else(|| invalid("b2", format!("{what} needs b1 < b2")))
    }

    /// Right-hand side `h` for a threshold `y ≥ b2`.
    /// Largest violation of the linear relations the unshifted middle
    /// coefficients `Û`, `V̂` satisfy (values, slopes and jump transforms).
    pub fn middle_identity_residual(&self) -> f64 {
        let (u, v) = (self.u_hat(), self.v_hat());
        let (b, g) = (self.unshifted_roots().betas(), self.unshifted_roots().gammas());
        let mut worst = (u.iter().sum::<Complex64>() - v.iter().sum::<Complex64>() - 1.0).norm();
        let d: Complex64 = u.iter().zip(b).map(|(x, r)| x * r).sum::<Complex64>()
            + v.iter().zip(g).map(|(x, r)| x * r).sum::<Complex64>();
        worst = worst.max(d.norm());
        for &t in self.model.down_rates() {
            let s: Complex64 = u.iter().zip(b).map(|(x, r)| x * t / (t + r)).sum::<Complex64>()
                - v.iter().zip(g).map(|(x, r)| x * t / (t - r)).sum::<Complex64>()
                - 1.0;
            worst = worst.max(s.norm());
        }
        for &e in self.model.up_rates() {
            let s: Complex64 = u.iter().zip(b).map(|(x, r)| x * e / (e - r)).sum::<Complex64>()
                - v.iter().zip(g).map(|(x, r)| x * e / (e + r)).sum::<Complex64>()
                - 1.0;
            worst = worst.max(s.norm());
        }
        worst
    }

    pub fn h_above_high(&self, y: f64) -> Vec<Complex64> {
        let half = self.half();
        let mut h = vec![Complex64::new(0.0, 0.0); 2 * half];
        let b2 = self.b2();
        for (coef, &b) in self.h.iter().zip(self.upper.betas()) {
            axpy(&mut h[half..], coef * (b * (b2 - y)).exp(), &up_pattern(&self.model, b));
        }
        h
    }

    /// Right-hand side `h̃` for a threshold `y < b1`.
    pub fn h_below_low(&self, y: f64) -> Vec<Complex64> {
        let half = self.half();
        let mut h = vec![Complex64::new(0.0, 0.0); 2 * half];
        let b1 = self.b1();
        for (coef, &g) in self.g_tilde.iter().zip(self.lower.gammas()) {
            axpy(&mut h[..half], -coef * (g * (y - b1)).exp(), &down_pattern(&self.model, g));
        }
        h
    }

    /// Right-hand side `ĥ` for a threshold `b1 ≤ y ≤ b2`.
    pub fn h_middle(&self, y: f64) -> Vec<Complex64> {
        let half = self.half();
        let mut h = vec![Complex64::new(0.0, 0.0); 2 * half];
        let (b1, b2) = (self.b1(), self.b2());
        for (coef, &b) in self.u_hat.iter().zip(self.unshifted.betas()) {
            axpy(&mut h[..half], coef * (b * (b1 - y)).exp(), &up_pattern(&self.model, b));
        }
        for (coef, &g) in self.v_hat.iter().zip(self.unshifted.gammas()) {
            axpy(&mut h[half..], -coef * (g * (y - b2)).exp(), &down_pattern(&self.model, g));
        }
        h
    }

    fn split(&self, c: Vec<Complex64>) -> Vec<Vec<Complex64>> {
        let (m1, n1) = (self.model.m() + 1, self.model.n() + 1);
        let mut out = Vec::with_capacity(4);
        let mut rest = c;
        for len in [m1, m1, n1] {
            let tail = rest.split_off(len);
            out.push(rest);
            rest = tail;
        }
        out.push(rest);
        out
    }

    fn solution(
        &self,
        regime: Regime,
        y: f64,
        closed: Vec<(&'static str, Vec<Complex64>)>,
        solved: Vec<(&'static str, Vec<Complex64>)>,
    ) -> CoefficientSolution {
        CoefficientSolution {
            regime,
            y,
            b1: self.b1(),
            b2: self.b2(),
            closed,
            solved,
            unshifted: self.unshifted.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    /// Representation of `x ↦ P_x(U > y)` for `y ≥ b2 > b1`.
    pub fn solve_above_high(&self, y: f64) -> Result<CoefficientSolution> {
        let q1 = self.require_q1("threshold above the upper barrier")?;
        if !(y >= self.b2()) {
            return Err(invalid("y", format!("must be at least b2 = {}, got {y}", self.b2())));
        }
        let parts = self.split(q1.solve_row(&self.h_above_high(y)));
        let [e, f, g, m] = <[Vec<Complex64>; 4]>::try_from(parts).expect("four blocks");
        Ok(self.solution(
            Regime::AboveHigh,
            y,
            vec![("H", self.h.clone()), ("N", self.n.clone())],
            vec![("E", e), ("F", f), ("G", g), ("M", m)],
        ))
    }

    /// Representation of `x ↦ P_x(U < y)` for `y < b1 < b2`.
    pub fn solve_below_low(&self, y: f64) -> Result<CoefficientSolution> {
        let q1 = self.require_q1("threshold below the lower barrier")?;
        if !(y <= self.b1()) {
            return Err(invalid("y", format!("must be at most b1 = {}, got {y}", self.b1())));
        }
        let parts = self.split(q1.solve_row(&self.h_below_low(y)));
        let [f, m, h, n] = <[Vec<Complex64>; 4]>::try_from(parts).expect("four blocks");
        Ok(self.solution(
            Regime::BelowLow,
            y,
            vec![("G~", self.g_tilde.clone()), ("E~", self.e_tilde.clone())],
            vec![("F~", f), ("M~", m), ("H~", h), ("N~", n)],
        ))
    }

    /// Representation of `x ↦ P_x(U > y)` for `b1 ≤ y ≤ b2`, `b1 < b2`.
    pub fn solve_middle(&self, y: f64) -> Result<CoefficientSolution> {
        let q1 = self.require_q1("threshold between the barriers")?;
        if !(self.b1() <= y && y <= self.b2()) {
            return Err(invalid(
                "y",
                format!("must lie in [{}, {}], got {y}", self.b1(), self.b2()),
            ));
        }
        let parts = self.split(q1.solve_row(&self.h_middle(y)));
        let [e, h, g, n] = <[Vec<Complex64>; 4]>::try_from(parts).expect("four blocks");
        Ok(self.solution(
            Regime::Middle,
            y,
            vec![("U^", self.u_hat.clone()), ("V^", self.v_hat.clone())],
            vec![("E^", e), ("H^", h), ("G^", g), ("N^", n)],
        ))
    }

    /// Representation of `x ↦ P_x(U > y)` for `y ≥ b1 = b2`.
    pub fn solve_merged_above(&self, y: f64) -> Result<CoefficientSolution> {
        let b = self.require_merged()?;
        if !(y >= b) {
            return Err(invalid("y", format!("must be at least b = {b}, got {y}")));
        }
        let m1 = closed_form::merged_above_m(&self.model, &self.lower, &self.upper, b, y);
        let e1 = closed_form::merged_above_e(&self.model, &self.lower, &self.upper, b, y);
        Ok(self.solution(
            Regime::MergedAbove,
            y,
            vec![
                ("H", self.h.clone()),
                ("N", self.n.clone()),
                ("M1", m1),
                ("E1", e1),
            ],
            Vec::new(),
        ))
    }

    /// Representation of `x ↦ P_x(U < y)` for `y < b1 = b2`.
    pub fn solve_merged_below(&self, y: f64) -> Result<CoefficientSolution> {
        let b = self.require_merged()?;
        if !(y <= b) {
            return Err(invalid("y", format!("must be at most b = {b}, got {y}")));
        }
        let n1 = closed_form::merged_below_n(&self.model, &self.lower, &self.upper, b, y);
        let f1 = closed_form::merged_below_f(&self.model, &self.lower, &self.upper, b, y);
        Ok(self.solution(
            Regime::MergedBelow,
            y,
            vec![
                ("E~", self.e_tilde.clone()),
                ("G~", self.g_tilde.clone()),
                ("N~1", n1),
                ("F~1", f1),
            ],
            Vec::new(),
        ))
    }

    fn require_merged(&self) -> Result<f64> {
        if self.q1.is_some() {
            return Err(invalid("b2", "merged-barrier formulas need b1 = b2"));
        }
        Ok(self.b1())
    }

    /// `P_x(U_{e(q)} > y)` for any real `y`.
    ///
    /// Thresholds on a barrier use the adjacent representation; the law has
    /// no atoms there.
    pub fn survival(&self, x: f64, y: f64) -> Result<Complex64> {
        let (b1, b2) = (self.b1(), self.b2());
        if b1 < b2 {
            if y < b1 {
                Ok(1.0 - self.solve_below_low(y)?.value(x))
            } else if y < b2 {
                Ok(self.solve_middle(y)?.value(x))
            } else {
                Ok(self.solve_above_high(y)?.value(x))
            }
        } else if y >= b1 {
            Ok(self.solve_merged_above(y)?.value(x))
        } else {
            Ok(1.0 - self.solve_merged_below(y)?.value(x))
        }
    }

    /// Laplace transforms in `T` of `E_x[∫_0^T 1{U_t ≥ y} dt]` and
    /// `E_x[∫_0^T 1{U_t < y} dt]`: `P_x(U ≥ y)/q²` and `P_x(U < y)/q²`.
    pub fn occupation_time_transforms(&self, x: f64, y: f64) -> Result<(Complex64, Complex64)> {
        let above = self.survival(x, y)?;
        let q2 = self.q * self.q;
        Ok((above / q2, (1.0 - above) / q2))
    }
}

fn negate(v: Vec<Complex64>) -> Vec<Complex64> {
    v.into_iter().map(|z| -z).collect()
}

/// `P_x(U_{e(q)} > y)` for `y > b2 > b1`.
pub fn survival_above_high(x: f64, y: f64, ctx: &DistributionContext) -> Result<Complex64> {
    Ok(ctx.solve_above_high(y)?.value(x))
}

/// `P_x(U_{e(q)} < y)` for `y < b1 < b2`.
pub fn cdf_below_low(x: f64, y: f64, ctx: &DistributionContext) -> Result<Complex64> {
    Ok(ctx.solve_below_low(y)?.value(x))
}

/// `P_x(U_{e(q)} > y)` for `b1 < y < b2`.
pub fn survival_middle(x: f64, y: f64, ctx: &DistributionContext) -> Result<Complex64> {
    Ok(ctx.solve_middle(y)?.value(x))
}

/// `P_x(U_{e(q)} > y)` when `b1 = b2`, any `y ≠ b1`.
pub fn survival_merged(x: f64, y: f64, ctx: &DistributionContext) -> Result<Complex64> {
    if y > ctx.b1() {
        Ok(ctx.solve_merged_above(y)?.value(x))
    } else {
        Ok(1.0 - ctx.solve_merged_below(y)?.value(x))
    }
}

/// `P_x(U_{e(q)} > y)` for any `y`, routed to the right representation.
pub fn full_distribution(x: f64, y: f64, ctx: &DistributionContext) -> Result<Complex64> {
    ctx.survival(x, y)
}

/// `(P_x(U ≥ y)/q², P_x(U < y)/q²)`.
pub fn occupation_time_transforms(ctx: &DistributionContext, x: f64, y: f64) -> Result<(Complex64, Complex64)> {
    ctx.occupation_time_transforms(x, y)
}

/// Piecewise-exponential representation of one distribution function.
#[derive(Debug, Clone)]
pub struct CoefficientSolution {
    regime: Regime,
    y: f64,
    b1: f64,
    b2: f64,
    closed: Vec<(&'static str, Vec<Complex64>)>,
    solved: Vec<(&'static str, Vec<Complex64>)>,
    unshifted: RootSet,
    lower: RootSet,
    upper: RootSet,
}

fn up_sum(coefs: &[Complex64], roots: &[Complex64], d: f64) -> Complex64 {
    coefs.iter().zip(roots).map(|(c, r)| c * (r * d).exp()).sum()
}

impl CoefficientSolution {
    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Closed-form coefficient vectors, by name.
    pub fn closed_form(&self) -> &[(&'static str, Vec<Complex64>)] {
        &self.closed
    }

    /// Coefficient vectors obtained from the gluing system, by name.
    pub fn solved(&self) -> &[(&'static str, Vec<Complex64>)] {
        &self.solved
    }

    /// Looks a coefficient vector up by name.
    pub fn coefficients(&self, name: &str) -> Option<&[Complex64]> {
        self.closed
            .iter()
            .chain(&self.solved)
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v.as_slice())
    }

    fn get(&self, name: &str) -> &[Complex64] {
        self.coefficients(name).expect("coefficient present for this regime")
    }

    /// Interior boundaries between branches, ascending.
    pub fn boundaries(&self) -> Vec<f64> {
        match self.regime {
            Regime::AboveHigh => vec![self.b1, self.b2, self.y],
            Regime::BelowLow => vec![self.y, self.b1, self.b2],
            Regime::Middle => vec![self.b1, self.y, self.b2],
            Regime::MergedAbove => vec![self.b1, self.y],
            Regime::MergedBelow => vec![self.y, self.b1],
        }
    }

    /// Evaluates branch `k` (0 = leftmost) at `x`, whether or not `x` lies in
    /// the branch's interval.
    pub fn branch(&self, k: usize, x: f64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let (b1, b2, y) = (self.b1, self.b2, self.y);
        let (bt, gt) = (self.lower.betas(), self.lower.gammas());
        let (b, g) = (self.unshifted.betas(), self.unshifted.gammas());
        let (bh, gh) = (self.upper.betas(), self.upper.gammas());
        match (self.regime, k) {
            (Regime::AboveHigh, 0) => up_sum(self.get("E"), bt, x - b1),
            (Regime::AboveHigh, 1) => up_sum(self.get("F"), b, x - b2) + up_sum(self.get("G"), g, b1 - x),
            (Regime::AboveHigh, 2) => up_sum(self.get("H"), bh, x - y) + up_sum(self.get("M"), gh, b2 - x),
            (Regime::AboveHigh, _) => {
                one + up_sum(self.get("N"), gh, y - x) + up_sum(self.get("M"), gh, b2 - x)
            }

            (Regime::BelowLow, 0) => {
                one + up_sum(self.get("E~"), bt, x - y) + up_sum(self.get("F~"), bt, x - b1)
            }
            (Regime::BelowLow, 1) => up_sum(self.get("F~"), bt, x - b1) + up_sum(self.get("G~"), gt, y - x),
            (Regime::BelowLow, 2) => up_sum(self.get("H~"), g, b1 - x) + up_sum(self.get("M~"), b, x - b2),
            (Regime::BelowLow, _) => up_sum(self.get("N~"), gh, b2 - x),

            (Regime::Middle, 0) => up_sum(self.get("E^"), bt, x - b1),
            (Regime::Middle, 1) => {
                up_sum(self.get("U^"), b, x - y) + up_sum(self.get("H^"), b, x - b2) + up_sum(self.get("G^"), g, b1 - x)
            }
            (Regime::Middle, 2) => {
                one + up_sum(self.get("H^"), b, x - b2)
                    + up_sum(self.get("V^"), g, y - x)
                    + up_sum(self.get("G^"), g, b1 - x)
            }
            (Regime::Middle, _) => one + up_sum(self.get("N^"), gh, b2 - x),

            (Regime::MergedAbove, 0) => up_sum(self.get("E1"), bt, x - b1),
            (Regime::MergedAbove, 1) => up_sum(self.get("H"), bh, x - y) + up_sum(self.get("M1"), gh, b1 - x),
            (Regime::MergedAbove, _) => {
                one + up_sum(self.get("N"), gh, y - x) + up_sum(self.get("M1"), gh, b1 - x)
            }

            (Regime::MergedBelow, 0) => {
                one + up_sum(self.get("E~"), bt, x - y) + up_sum(self.get("F~1"), bt, x - b1)
            }
            (Regime::MergedBelow, 1) => up_sum(self.get("F~1"), bt, x - b1) + up_sum(self.get("G~"), gt, y - x),
            (Regime::MergedBelow, _) => up_sum(self.get("N~1"), gh, b1 - x),
        }
    }

    /// Index of the branch whose interval contains `x` (left branch on ties).
    pub fn branch_index(&self, x: f64) -> usize {
        self.boundaries().iter().filter(|&&b| b < x).count()
    }

    /// `P_x(U > y)` for survival regimes, `P_x(U < y)` otherwise.
    pub fn value(&self, x: f64) -> Complex64 {
        self.branch(self.branch_index(x), x)
    }
}

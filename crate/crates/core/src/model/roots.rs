//! Roots of `ψ(z) − shift·z = q`.
//!
//! For real `q > 0` the `m+n+2` roots are real and interlace with the jump
//! rates, so each one is bracketed and found by bisection. For complex `q`
//! (inversion nodes) the rational equation is cleared into a polynomial,
//! solved by Aberth iteration, polished by Newton and split by the sign of
//! the real part, which cannot vanish while `Re q > 0`.

use num_complex::Complex64;

use super::HejdModel;
use crate::error::{invalid, Error, Result};

/// Residual bound `|ψ(r) − shift·r − q| / (1 + |q|)` every returned root meets.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

/// Roots closer than this to a pole or to each other trigger the degenerate guard.
const COLLISION_TOL: f64 = 1e-10;

const NEWTON_MAX_ITER: usize = 50;

/// The roots of `ψ(z) − shift·z = q`, split into `β` (positive real part)
/// and `γ` (the negatives of the roots with negative real part).
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    shift: f64,
    q: Complex64,
    betas: Vec<Complex64>,
    gammas: Vec<Complex64>,
}

impl RootSet {
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// The transform argument the roots were computed at. Equals the
    /// requested `q` unless the degenerate guard nudged it.
    pub fn q(&self) -> Complex64 {
        self.q
    }

    /// `β_1, …, β_{m+1}`, sorted by real part.
    pub fn betas(&self) -> &[Complex64] {
        &self.betas
    }

    /// `γ_1, …, γ_{n+1}` (roots are `−γ_j`), sorted by real part.
    pub fn gammas(&self) -> &[Complex64] {
        &self.gammas
    }

    /// Copy with one `β` moved by `delta`. Only meant for negative controls
    /// that check the identity suite actually detects a bad root.
    #[doc(hidden)]
    pub fn with_corrupted_beta(&self, index: usize, delta: Complex64) -> Self {
        let mut out = self.clone();
        out.betas[index] += delta;
        out
    }

    /// Largest scaled residual over all roots.
    pub fn max_residual(&self, model: &HejdModel) -> f64 {
        let scale = 1.0 + self.q.norm();
        self.betas
            .iter()
            .copied()
            .chain(self.gammas.iter().map(|g| -g))
            .map(|z| (model.exponent_unchecked(self.shift, z) - self.q).norm() / scale)
            .fold(0.0, f64::max)
    }
}

/// Finds all `m+n+2` roots of `ψ(z) − shift·z = q` for `Re q > 0`.
///
/// If a root lands within `1e-10` of a jump rate or of another root, `q` is
/// nudged by `1e-9·(1+|q|)` along the real axis and the solve repeated once.
pub fn solve_roots(model: &HejdModel, shift: f64, q: Complex64) -> Result<RootSet> {
    if !(q.re.is_finite() && q.im.is_finite()) || q.re <= 0.0 {
        return Err(invalid("q", format!("need finite q with Re(q) > 0, got {q}")));
    }
    if !shift.is_finite() {
        return Err(invalid("shift", format!("must be finite, got {shift}")));
    }

    let first = attempt(model, shift, q)?;
    if collision(model, &first).is_none() {
        return Ok(first);
    }
    let nudged = q + 1e-9 * (1.0 + q.norm());
    let second = attempt(model, shift, nudged)?;
    match collision(model, &second) {
        None => Ok(second),
        Some((root, distance)) => Err(Error::RootCollision { root, distance }),
    }
}

fn attempt(model: &HejdModel, shift: f64, q: Complex64) -> Result<RootSet> {
    let set = if q.im == 0.0 {
        real_roots(model, shift, q.re)
    } else {
        complex_roots(model, shift, q)?
    };
    let residual = set.max_residual(model);
    if !(residual < ROOT_RESIDUAL_TOL) {
        return Err(Error::RootConvergence { q, residual });
    }
    Ok(set)
}

fn real_roots(model: &HejdModel, shift: f64, q: f64) -> RootSet {
    let up = |x: f64| model.exponent_unchecked(shift, Complex64::new(x, 0.0)).re - q;
    let down = |x: f64| model.exponent_unchecked(shift, Complex64::new(-x, 0.0)).re - q;
    let betas = interlaced_roots(up, model.up_rates());
    let gammas = interlaced_roots(down, model.down_rates());
    RootSet {
        shift,
        q: Complex64::new(q, 0.0),
        betas: betas.into_iter().map(|b| Complex64::new(b, 0.0)).collect(),
        gammas: gammas.into_iter().map(|g| Complex64::new(g, 0.0)).collect(),
    }
}

/// One root in each of `(0, r_1), (r_1, r_2), …, (r_k, ∞)`; `f` runs from
/// negative to positive across every interval.
fn interlaced_roots(f: impl Fn(f64) -> f64, poles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(poles.len() + 1);
    let mut lo = 0.0;
    for &pole in poles {
        out.push(bisect(&f, lo, pole));
        lo = pole;
    }
    let mut width = 1.0;
    while f(lo + width) <= 0.0 {
        width *= 2.0;
    }
    out.push(bisect(&f, lo, lo + width));
    out
}

/// Bisection assuming `f < 0` just right of `lo` and `f > 0` just left of
/// `hi`; the endpoints themselves are never evaluated.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn complex_roots(model: &HejdModel, shift: f64, q: Complex64) -> Result<RootSet> {
    let poly = model.cleared_polynomial(shift, q);
    let raw = poly.roots().ok_or(Error::RootConvergence {
        q,
        residual: f64::INFINITY,
    })?;

    let mut betas = Vec::with_capacity(model.m() + 1);
    let mut gammas = Vec::with_capacity(model.n() + 1);
    for z in raw {
        let z = newton_polish(model, shift, q, z);
        if z.re > 0.0 {
            betas.push(z);
        } else if z.re < 0.0 {
            gammas.push(-z);
        } else {
            return Err(Error::RootConvergence {
                q,
                residual: f64::INFINITY,
            });
        }
    }
    if betas.len() != model.m() + 1 || gammas.len() != model.n() + 1 {
        return Err(Error::RootCount {
            expected_up: model.m() + 1,
            expected_down: model.n() + 1,
            found_up: betas.len(),
            found_down: gammas.len(),
        });
    }
    let by_real_part = |a: &Complex64, b: &Complex64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
    betas.sort_by(by_real_part);
    gammas.sort_by(by_real_part);
    Ok(RootSet {
        shift,
        q,
        betas,
        gammas,
    })
}

/// Newton on the rational form; keeps the best iterate seen.
fn newton_polish(model: &HejdModel, shift: f64, q: Complex64, start: Complex64) -> Complex64 {
    let mut z = start;
    let mut best = z;
    let mut best_residual = (model.exponent_unchecked(shift, z) - q).norm();
    for _ in 0..NEWTON_MAX_ITER {
        let g = model.exponent_unchecked(shift, z) - q;
        let dg = model.exponent_derivative(shift, z);
        let step = g / dg;
        if !step.is_finite() {
            break;
        }
        z -= step;
        let residual = (model.exponent_unchecked(shift, z) - q).norm();
        if residual < best_residual {
            best = z;
            best_residual = residual;
        }
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    best
}

fn collision(model: &HejdModel, set: &RootSet) -> Option<(Complex64, f64)> {
    let mut worst: Option<(Complex64, f64)> = None;
    let mut consider = |root: Complex64, distance: f64| {
        if distance < COLLISION_TOL && worst.is_none_or(|(_, d)| distance < d) {
            worst = Some((root, distance));
        }
    };
    for &b in &set.betas {
        for &eta in model.up_rates() {
            consider(b, (b - eta).norm());
        }
    }
    for &g in &set.gammas {
        for &theta in model.down_rates() {
            consider(-g, (g - theta).norm());
        }
    }
    let all: Vec<Complex64> = set
        .betas
        .iter()
        .copied()
        .chain(set.gammas.iter().map(|g| -g))
        .collect();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            consider(all[i], (all[i] - all[j]).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn baseline() -> HejdModel {
        HejdModel::baseline()
    }

    /// Eigenvalues of the companion matrix of the cleared polynomial: an
    /// independent route to every root.
    fn companion_roots(model: &HejdModel, shift: f64, q: Complex64) -> Vec<Complex64> {
        let poly = model.cleared_polynomial(shift, q);
        let c = poly.coeffs();
        let d = poly.degree();
        let lead = c[d];
        let mut mat = DMatrix::<Complex64>::zeros(d, d);
        for i in 1..d {
            mat[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..d {
            mat[(i, d - 1)] = -c[i] / lead;
        }
        mat.schur().eigenvalues().expect("complex Schur form is triangular").iter().copied().collect()
    }

    #[test]
    fn baseline_real_roots_interlace() {
        let m = baseline();
        let set = solve_roots(&m, 0.0, Complex64::new(0.15, 0.0)).unwrap();
        let b: Vec<f64> = set.betas().iter().map(|z| z.re).collect();
        let g: Vec<f64> = set.gammas().iter().map(|z| z.re).collect();
        assert_eq!(b.len(), 2);
        assert_eq!(g.len(), 2);
        assert!(0.0 < b[0] && b[0] < 15.0 && 15.0 < b[1]);
        assert!(0.0 < g[0] && g[0] < 15.0 && 15.0 < g[1]);
        assert!(set.max_residual(&m) < 1e-12);
    }

    #[test]
    fn complex_roots_match_companion_eigenvalues() {
        let m = baseline();
        let q = Complex64::new(0.15, 3.0);
        let set = solve_roots(&m, 0.018, q).unwrap();
        assert!(set.max_residual(&m) < ROOT_RESIDUAL_TOL);
        let oracle = companion_roots(&m, 0.018, q);
        let ours: Vec<Complex64> = set
            .betas()
            .iter()
            .copied()
            .chain(set.gammas().iter().map(|g| -g))
            .collect();
        assert_eq!(ours.len(), 4);
        for r in &ours {
            assert!(r.re.abs() > 1e-6, "root on the imaginary axis: {r}");
            let nearest = oracle.iter().map(|o| (o - r).norm()).fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-8 * (1.0 + r.norm()), "{r} not among eigenvalues");
        }
    }

    #[test]
    fn hyper_exponential_complex_roots() {
        let m = HejdModel::new(
            0.15,
            0.02,
            3.0,
            vec![0.2, 0.15, 0.05],
            vec![3.0, 8.0, 25.0],
            vec![0.4, 0.2],
            vec![2.0, 12.0],
        )
        .unwrap();
        for q in [
            Complex64::new(0.05, 0.0),
            Complex64::new(1.0, 40.0),
            Complex64::new(2.0, -200.0),
            Complex64::new(20.0, 0.5),
        ] {
            let set = solve_roots(&m, 0.03, q).unwrap();
            assert_eq!(set.betas().len(), 4);
            assert_eq!(set.gammas().len(), 3);
            assert!(set.max_residual(&m) < ROOT_RESIDUAL_TOL);
        }
    }

    #[test]
    fn rejects_non_positive_real_part() {
        let m = baseline();
        assert!(solve_roots(&m, 0.0, Complex64::new(0.0, 1.0)).is_err());
        assert!(solve_roots(&m, 0.0, Complex64::new(-0.1, 0.0)).is_err());
    }

    #[test]
    fn real_and_complex_paths_agree_near_real_axis() {
        let m = baseline();
        let real = solve_roots(&m, 0.009, Complex64::new(0.4, 0.0)).unwrap();
        let near = solve_roots(&m, 0.009, Complex64::new(0.4, 1e-9)).unwrap();
        for (a, b) in real.betas().iter().zip(near.betas()) {
            assert!((a - b).norm() < 1e-7);
        }
        for (a, b) in real.gammas().iter().zip(near.gammas()) {
            assert!((a - b).norm() < 1e-7);
        }
    }

    fn arb_model() -> impl Strategy<Value = HejdModel> {
        (1usize..=3, 1usize..=3, 0.05f64..0.5, -0.3f64..0.3, 0.1f64..5.0, 0u64..u64::MAX).prop_map(
            |(m, n, sigma, mu, lambda, seed)| crate::test_support::random_model(m, n, sigma, mu, lambda, seed),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn real_q_interlaces(model in arb_model(), q in 0.01f64..20.0, shift in 0.0f64..0.5) {
            let set = solve_roots(&model, shift, Complex64::new(q, 0.0)).unwrap();
            prop_assert!(set.max_residual(&model) < ROOT_RESIDUAL_TOL);
            let mut lo = 0.0;
            for (b, &eta) in set.betas().iter().zip(model.up_rates()) {
                prop_assert!(b.im == 0.0 && lo < b.re && b.re < eta);
                lo = eta;
            }
            prop_assert!(set.betas().last().unwrap().re > lo);
            let mut lo = 0.0;
            for (g, &theta) in set.gammas().iter().zip(model.down_rates()) {
                prop_assert!(g.im == 0.0 && lo < g.re && g.re < theta);
                lo = theta;
            }
            prop_assert!(set.gammas().last().unwrap().re > lo);
        }

        #[test]
        fn complex_q_classifies(model in arb_model(), re in 0.01f64..5.0, im in -300.0f64..300.0, shift in 0.0f64..0.5) {
            let q = Complex64::new(re, im);
            let set = solve_roots(&model, shift, q).unwrap();
            prop_assert_eq!(set.betas().len(), model.m() + 1);
            prop_assert_eq!(set.gammas().len(), model.n() + 1);
            prop_assert!(set.max_residual(&model) < ROOT_RESIDUAL_TOL);
            prop_assert!(set.betas().iter().chain(set.gammas()).all(|z| z.re > 0.0));
        }

        #[test]
        fn roots_move_continuously(model in arb_model(), re in 0.05f64..5.0, im in -50.0f64..50.0) {
            let q = Complex64::new(re, im);
            let a = solve_roots(&model, 0.01, q).unwrap();
            let b = solve_roots(&model, 0.01, q + Complex64::new(1e-8, 1e-8)).unwrap();
            let pairs = [(a.betas(), b.betas()), (a.gammas(), b.gammas())];
            for (xs, ys) in pairs {
                for x in xs {
                    let nearest = ys.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min);
                    prop_assert!(nearest < 1e-5, "{} moved by {}", x, nearest);
                }
            }
        }
    }
}

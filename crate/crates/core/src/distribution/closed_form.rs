//! Closed-form coefficient vectors.
//!
//! For a single drift regime with roots `β`, `γ`, the law of the process at
//! an exponential time started below / above a level `y` is
//! `Σ A_i e^{β_i(x−y)}` / `1 + Σ B_j e^{γ_j(y−x)}` with `A = up_coefficients`
//! and `B = −down_coefficients`. The merged-barrier case mixes the α₁ and α₂
//! roots.

use num_complex::Complex64;

use crate::model::{HejdModel, RootSet};

fn prod(it: impl Iterator<Item = Complex64>) -> Complex64 {
    it.fold(Complex64::new(1.0, 0.0), |a, b| a * b)
}

fn prod_real(values: &[f64]) -> f64 {
    values.iter().product()
}

/// `Π_m(η_k−β_i) Π_{k≠i}β_k Π_n(β_i+ϑ_k) Π γ_k / (Π η_k Π_{k≠i}(β_k−β_i) Π ϑ_k Π(β_i+γ_k))`.
pub(crate) fn up_coefficients(model: &HejdModel, roots: &RootSet) -> Vec<Complex64> {
    let (betas, gammas) = (roots.betas(), roots.gammas());
    let scale = prod_real(model.up_rates()) * prod_real(model.down_rates());
    let gamma_prod = prod(gammas.iter().copied());
    betas
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let num = prod(model.up_rates().iter().map(|&e| e - b))
                * prod(betas.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &bk)| bk))
                * prod(model.down_rates().iter().map(|&t| b + t))
                * gamma_prod;
            let den = scale
                * prod(betas.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &bk)| bk - b))
                * prod(gammas.iter().map(|&g| b + g));
            num / den
        })
        .collect()
}

/// `Π_n(ϑ_k−γ_j) Π_{k≠j}γ_k Π_m(γ_j+η_k) Π β_k / (Π ϑ_k Π_{k≠j}(γ_k−γ_j) Π η_k Π(γ_j+β_k))`.
pub(crate) fn down_coefficients(model: &HejdModel, roots: &RootSet) -> Vec<Complex64> {
    let (betas, gammas) = (roots.betas(), roots.gammas());
    let scale = prod_real(model.up_rates()) * prod_real(model.down_rates());
    let beta_prod = prod(betas.iter().copied());
    gammas
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            let num = prod(model.down_rates().iter().map(|&t| t - g))
                * prod(gammas.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &gk)| gk))
                * prod(model.up_rates().iter().map(|&e| g + e))
                * beta_prod;
            let den = scale
                * prod(gammas.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &gk)| gk - g))
                * prod(betas.iter().map(|&bk| g + bk));
            num / den
        })
        .collect()
}

/// Merged barrier, threshold above: coefficients `M¹` of `e^{γ̂_j(b−x)}`.
pub(crate) fn merged_above_m(
    model: &HejdModel,
    lower: &RootSet,
    upper: &RootSet,
    b: f64,
    y: f64,
) -> Vec<Complex64> {
    let (bt, bh, gh) = (lower.betas(), upper.betas(), upper.gammas());
    let scale = prod_real(model.up_rates()) * prod_real(model.down_rates());
    let front = prod(bh.iter().copied()) * prod(gh.iter().copied()) / scale;
    gh.iter()
        .enumerate()
        .map(|(j, &g)| {
            let lead = front
                * prod(model.up_rates().iter().map(|&e| g + e))
                * prod(model.down_rates().iter().map(|&t| t - g))
                / (prod(bt.iter().map(|&b| g + b))
                    * prod(gh.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &gk)| gk - g)));
            let sum: Complex64 = bh
                .iter()
                .enumerate()
                .map(|(i, &bi)| {
                    prod(bt.iter().map(|&bk| bi - bk)) * (bi * (b - y)).exp()
                        / (bi * (bi + g)
                            * prod(bh.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &bk)| bi - bk)))
                })
                .sum();
            lead * sum
        })
        .collect()
}

/// Merged barrier, threshold above: coefficients `E¹` of `e^{β̃_i(x−b)}`.
pub(crate) fn merged_above_e(
    model: &HejdModel,
    lower: &RootSet,
    upper: &RootSet,
    b: f64,
    y: f64,
) -> Vec<Complex64> {
    let (bt, bh, gh) = (lower.betas(), upper.betas(), upper.gammas());
    let scale = prod_real(model.up_rates()) * prod_real(model.down_rates());
    let front = prod(bh.iter().copied()) * prod(gh.iter().copied()) / scale;
    bt.iter()
        .enumerate()
        .map(|(i, &bi)| {
            let lead = front
                * prod(model.up_rates().iter().map(|&e| bi - e))
                * prod(model.down_rates().iter().map(|&t| bi + t))
                / (prod(bt.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &bk)| bi - bk))
                    * prod(gh.iter().map(|&g| bi + g)));
            let sum: Complex64 = bh
                .iter()
                .enumerate()
                .map(|(j, &bj)| {
                    prod(bt.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &bk)| bj - bk))
                        * (bj * (b - y)).exp()
                        / (bj * prod(bh.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &bk)| bj - bk)))
                })
                .sum();
            lead * sum
        })
        .collect()
}

/// Merged barrier, threshold below: coefficients `Ñ¹` of `e^{γ̂_j(b−x)}`.
pub(crate) fn merged_below_n(
    model: &HejdModel,
    lower: &RootSet,
    upper: &RootSet,
    b: f64,
    y: f64,
) -> Vec<Complex64> {
    let (bt, gt, gh) = (lower.betas(), lower.gammas(), upper.gammas());
    let scale = prod_real(model.up_rates()) * prod_real(model.down_rates());
    let front = prod(bt.iter().copied()) * prod(gt.iter().copied()) / scale;
    gh.iter()
        .enumerate()
        .map(|(j, &g)| {
            let lead = front
                * prod(model.up_rates().iter().map(|&e| g + e))
                * prod(model.down_rates().iter().map(|&t| t - g))
                / (prod(bt.iter().map(|&bk| g + bk))
                    * prod(gh.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &gk)| gk - g)));
            let sum: Complex64 = gt
                .iter()
                .enumerate()
                .map(|(i, &gi)| {
                    prod(gh.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &gk)| gk - gi))
                        * (gi * (y - b)).exp()
                        / (gi * prod(gt.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &gk)| gk - gi)))
                })
                .sum();
            lead * sum
        })
        .collect()
}

/// Merged barrier, threshold below: coefficients `F̃¹` of `e^{β̃_i(x−b)}`.
pub(crate) fn merged_below_f(
    model: &HejdModel,
    lower: &RootSet,
    upper: &RootSet,
    b: f64,
    y: f64,
) -> Vec<Complex64> {
    let (bt, gt, gh) = (lower.betas(), lower.gammas(), upper.gammas());
    let scale = prod_real(model.up_rates()) * prod_real(model.down_rates());
    let front = prod(bt.iter().copied()) * prod(gt.iter().copied()) / scale;
    bt.iter()
        .enumerate()
        .map(|(i, &bi)| {
            let lead = front
                * prod(model.up_rates().iter().map(|&e| bi - e))
                * prod(model.down_rates().iter().map(|&t| bi + t))
                / (prod(bt.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &bk)| bi - bk))
                    * prod(gh.iter().map(|&g| bi + g)));
            let sum: Complex64 = gt
                .iter()
                .enumerate()
                .map(|(j, &gj)| {
                    prod(gh.iter().map(|&gk| gk - gj)) * (gj * (y - b)).exp()
                        / (-gj
                            * (bi + gj)
                            * prod(gt.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &gk)| gk - gj)))
                })
                .sum();
            lead * sum
        })
        .collect()
}

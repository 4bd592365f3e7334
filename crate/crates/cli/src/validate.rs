//! Invariant and simulation checks on one configuration.

use anyhow::Result;
use num_complex::Complex64;
use serde::Serialize;
use vafee_core::distribution::{CoefficientSolution, DistributionContext};
use vafee_core::fluctuation::extrema_coefficients;
use vafee_core::oracle::{simulate_paths, Scenario};
use vafee_core::pricing::contract_values;
use vafee_core::{solve_roots, FeeStructure, HejdModel, RootSet};

use crate::config::JobConfig;
use crate::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check: &'static str,
    pub status: &'static str,
    pub measured: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(check: &'static str, measured: f64, tolerance: f64) -> Self {
        let passed = measured.is_finite() && measured <= tolerance;
        Self {
            check,
            status: if passed { "PASS" } else { "FAIL" },
            measured,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "PASS"
    }
}

fn largest(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |acc, v| if v.is_nan() { f64::INFINITY } else { acc.max(v) })
}

fn pasting_slope_jump(sol: &CoefficientSolution) -> f64 {
    let step = 1e-6;
    largest(sol.boundaries().iter().enumerate().map(|(k, &p)| {
        let dl = (sol.branch(k, p + step) - sol.branch(k, p - step)) / (2.0 * step);
        let dr = (sol.branch(k + 1, p + step) - sol.branch(k + 1, p - step)) / (2.0 * step);
        (dl - dr).norm()
    }))
}

struct Setup {
    model: HejdModel,
    fees: FeeStructure,
    roots: [RootSet; 3],
    ctx: DistributionContext,
}

fn setup(job: &JobConfig, corrupt_root: Option<f64>) -> Result<Setup> {
    let model = job.model.build(job.contract.rate)?;
    let fees = job.validate.fees(&job.contract)?;
    let q = Complex64::new(job.validate.q, 0.0);
    let mut unshifted = solve_roots(&model, 0.0, q)?;
    if let Some(delta) = corrupt_root {
        unshifted = unshifted.with_corrupted_beta(0, Complex64::new(delta, 0.0));
    }
    let lower = solve_roots(&model, fees.alpha1(), q)?;
    let upper = solve_roots(&model, fees.alpha2(), q)?;
    let ctx = DistributionContext::from_roots(&model, &fees, q, unshifted.clone(), lower.clone(), upper.clone())?;
    Ok(Setup {
        model,
        fees,
        roots: [unshifted, lower, upper],
        ctx,
    })
}

/// Runs every check; a check whose computation errors is reported as failed.
pub fn run_validate(job: &JobConfig, corrupt_root: Option<f64>) -> Result<Vec<Check>, Failure> {
    let sim = job.simulation.build().map_err(Failure::Config)?;
    let inversion = job.inversion.build().map_err(Failure::Config)?;
    job.contract.build().map_err(Failure::Config)?;
    let s = setup(job, corrupt_root).map_err(Failure::Solver)?;
    let (b1, b2) = (s.fees.b1(), s.fees.b2());
    let or_inf = |r: Result<f64>| r.unwrap_or(f64::INFINITY);

    let mut checks = vec![
        Check::new("root_residual", largest(s.roots.iter().map(|r| r.max_residual(&s.model))), 1e-10),
        Check::new(
            "wiener_hopf_identities",
            largest(s.roots.iter().map(|r| extrema_coefficients(r, &s.model).identity_residual())),
            1e-9,
        ),
        Check::new(
            "wiener_hopf_factorization",
            largest(s.roots.iter().map(|r| extrema_coefficients(r, &s.model).factorization_residual(&s.model))),
            1e-9,
        ),
        Check::new("middle_coefficient_relations", s.ctx.middle_identity_residual(), 1e-9),
    ];

    let pasting = or_inf((|| -> Result<f64> {
        let sols = [
            s.ctx.solve_above_high(b2 + 0.1)?,
            s.ctx.solve_below_low(b1 - 0.1)?,
            s.ctx.solve_middle(0.5 * (b1 + b2))?,
        ];
        Ok(largest(sols.iter().map(pasting_slope_jump)))
    })());
    checks.push(Check::new("smooth_pasting", pasting, 1e-4));

    let atoms = or_inf((|| -> Result<f64> {
        let (high, mid_high) = (s.ctx.solve_above_high(b2)?, s.ctx.solve_middle(b2)?);
        let (mid_low, low) = (s.ctx.solve_middle(b1)?, s.ctx.solve_below_low(b1)?);
        Ok(largest([b1 - 0.2, b1, 0.5 * (b1 + b2), b2, b2 + 0.2].iter().flat_map(|&x| {
            [
                (high.value(x) - mid_high.value(x)).norm(),
                (mid_low.value(x) + low.value(x) - 1.0).norm(),
            ]
        })))
    })());
    checks.push(Check::new("atom_gap", atoms, 1e-8));

    let martingale = or_inf((|| -> Result<f64> {
        let free = FeeStructure::new(0.0, 0.0, job.contract.f0, job.contract.f0, job.contract.b2)?;
        let (fund, _, _) = contract_values(&s.model, &free, job.contract.rate, job.contract.maturity, &inversion)?;
        Ok((fund / job.contract.f0 - 1.0).abs())
    })());
    checks.push(Check::new("zero_fee_martingale", martingale, 1e-4));

    let monte_carlo = or_inf((|| -> Result<f64> {
        let paths = simulate_paths(&s.model, &s.fees, &Scenario::killed(0.0, job.validate.q), &sim)?;
        let n = paths.len() as f64;
        let mut z = Vec::new();
        for y in job.validate.thresholds(b2) {
            let p = paths.iter().filter(|p| p.terminal > y).count() as f64 / n;
            let se = (p * (1.0 - p) / (n - 1.0)).sqrt().max(1.0 / n);
            z.push((s.ctx.survival(0.0, y)?.re - p).abs() / se);
        }
        Ok(largest(z))
    })());
    checks.push(Check::new("monte_carlo_max_z", monte_carlo, job.validate.z_max));
    Ok(checks)
}

pub fn to_csv(checks: &[Check]) -> String {
    let mut out = String::from("check,status,measured,tolerance\n");
    for c in checks {
        out.push_str(&format!("{},{},{:.6e},{:e}\n", c.check, c.status, c.measured, c.tolerance));
    }
    out
}

pub fn to_json(checks: &[Check]) -> Result<String> {
    Ok(serde_json::to_string_pretty(checks)? + "\n")
}

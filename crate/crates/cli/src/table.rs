//! Fair-fee sweeps.

use anyhow::{anyhow, bail, Result};
use rayon::prelude::*;
use serde::Serialize;
use vafee_core::pricing::{solve_fair_fee, ContractSpec};
use vafee_core::HejdModel;

use crate::config::{Axis, JobConfig};
use crate::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub sweep_value: f64,
    pub alpha1_star: f64,
    pub alpha2_star: f64,
    pub total_fees: f64,
    pub ttime1: f64,
    pub ttime2: f64,
    pub gap_residual: f64,
    pub q1_condition_max: f64,
}

pub const COLUMNS: [&str; 8] = [
    "sweep_value",
    "alpha1_star",
    "alpha2_star",
    "total_fees",
    "ttime1",
    "ttime2",
    "gap_residual",
    "q1_condition_max",
];

impl TableRow {
    pub fn fields(&self) -> [f64; 8] {
        [
            self.sweep_value,
            self.alpha1_star,
            self.alpha2_star,
            self.total_fees,
            self.ttime1,
            self.ttime2,
            self.gap_residual,
            self.q1_condition_max,
        ]
    }
}

/// Model and contract for one sweep value.
fn row_inputs(job: &JobConfig, axis: Axis, value: f64) -> Result<(HejdModel, ContractSpec)> {
    let mut model = job.model.clone();
    let mut contract = job.contract;
    match axis {
        Axis::B2 => contract.b2 = value,
        Axis::T => contract.maturity = value,
        Axis::Sigma => model.sigma = value,
        Axis::Rate => contract.rate = value,
        Axis::FeeRatio => contract.fee_ratio = value,
        Axis::Eta1 => match model.up_rates.first_mut() {
            Some(rate) => *rate = value,
            None => bail!("eta1 sweep needs at least one upward jump rate"),
        },
        Axis::Theta1 => match model.down_rates.first_mut() {
            Some(rate) => *rate = value,
            None => bail!("theta1 sweep needs at least one downward jump rate"),
        },
    }
    Ok((model.build(contract.rate)?, contract.build()?))
}

pub fn run_table(job: &JobConfig) -> Result<(Axis, Vec<TableRow>), Failure> {
    let sweep = job
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::Config(anyhow!("a [sweep] section is required")))?;
    if sweep.values.is_empty() {
        return Err(Failure::Config(anyhow!("sweep over {} has no values", sweep.axis.name())));
    }
    let cfg = job.inversion.build().map_err(Failure::Config)?;
    let inputs = sweep
        .values
        .iter()
        .map(|&v| {
            row_inputs(job, sweep.axis, v)
                .map_err(|e| Failure::Config(e.context(format!("{} = {v}", sweep.axis.name()))))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rows = inputs
        .par_iter()
        .zip(&sweep.values)
        .enumerate()
        .map(|(k, ((model, spec), &value))| {
            let quote = solve_fair_fee(model, spec, &cfg).map_err(|e| {
                Failure::Solver(anyhow!("row {} ({} = {value}): {e}", k + 1, sweep.axis.name()))
            })?;
            Ok(TableRow {
                sweep_value: value,
                alpha1_star: quote.alpha1_star,
                alpha2_star: quote.alpha2_star,
                total_fees: quote.total_fees,
                ttime1: quote.ttime1,
                ttime2: quote.ttime2,
                gap_residual: quote.diagnostics.gap_residual,
                q1_condition_max: quote.diagnostics.q1_condition_max,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok((sweep.axis, rows))
}

pub fn to_csv(rows: &[TableRow]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.fields().iter().map(|&v| number(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Shortest round-trip form, in scientific notation for very small or very
/// large magnitudes.
fn number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn to_json(rows: &[TableRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)? + "\n")
}

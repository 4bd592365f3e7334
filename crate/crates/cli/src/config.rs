//! Job configuration read from a TOML file. Every section is optional and
//! defaults to the baseline double-exponential model and contract.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use vafee_core::inversion::InversionConfig;
use vafee_core::oracle::SimConfig;
use vafee_core::pricing::ContractSpec;
use vafee_core::{FeeStructure, HejdModel};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JobConfig {
    pub model: ModelSection,
    pub contract: ContractSection,
    pub sweep: Option<SweepSection>,
    pub inversion: InversionSection,
    pub simulation: SimulationSection,
    pub validate: ValidateSection,
}

/// Jump-diffusion parameters. The drift is not configurable: it is always
/// set so that the discounted fund is a martingale at the contract rate.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub sigma: f64,
    pub lambda: f64,
    pub up_weights: Vec<f64>,
    pub up_rates: Vec<f64>,
    pub down_weights: Vec<f64>,
    pub down_rates: Vec<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            sigma: 0.2,
            lambda: 1.0,
            up_weights: vec![0.5],
            up_rates: vec![15.0],
            down_weights: vec![0.5],
            down_rates: vec![15.0],
        }
    }
}

impl ModelSection {
    pub fn build(&self, rate: f64) -> Result<HejdModel> {
        let model = HejdModel::new(
            self.sigma,
            0.0,
            self.lambda,
            self.up_weights.clone(),
            self.up_rates.clone(),
            self.down_weights.clone(),
            self.down_rates.clone(),
        )?;
        Ok(model.calibrate_drift(rate)?)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractSection {
    pub f0: f64,
    pub b2: f64,
    pub maturity: f64,
    pub rate: f64,
    pub fee_ratio: f64,
}

impl Default for ContractSection {
    fn default() -> Self {
        Self {
            f0: 100.0,
            b2: 120.0,
            maturity: 10.0,
            rate: 0.05,
            fee_ratio: 0.5,
        }
    }
}

impl ContractSection {
    pub fn build(&self) -> Result<ContractSpec> {
        Ok(ContractSpec::new(self.f0, self.b2, self.maturity, self.rate, self.fee_ratio)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Axis {
    B2,
    T,
    #[serde(rename = "sigma")]
    Sigma,
    #[serde(rename = "r")]
    Rate,
    #[serde(rename = "eta1")]
    Eta1,
    #[serde(rename = "theta1")]
    Theta1,
    #[serde(rename = "fee_ratio")]
    FeeRatio,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::B2 => "B2",
            Axis::T => "T",
            Axis::Sigma => "sigma",
            Axis::Rate => "r",
            Axis::Eta1 => "eta1",
            Axis::Theta1 => "theta1",
            Axis::FeeRatio => "fee_ratio",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionSection {
    pub a_tilde: f64,
    pub series_terms: usize,
    pub euler_average_terms: usize,
}

impl Default for InversionSection {
    fn default() -> Self {
        let cfg = InversionConfig::default();
        Self {
            a_tilde: cfg.a_tilde,
            series_terms: cfg.series_terms,
            euler_average_terms: cfg.euler_average_terms,
        }
    }
}

impl InversionSection {
    pub fn build(&self) -> Result<InversionConfig> {
        let cfg = InversionConfig {
            a_tilde: self.a_tilde,
            series_terms: self.series_terms,
            euler_average_terms: self.euler_average_terms,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            paths: 200_000,
            dt: vafee_core::oracle::DEFAULT_DT,
            seed: 2024,
            antithetic: false,
        }
    }
}

impl SimulationSection {
    pub fn build(&self) -> Result<SimConfig> {
        if self.paths == 0 || !(self.dt.is_finite() && self.dt > 0.0) {
            bail!("simulation needs paths > 0 and dt > 0");
        }
        Ok(SimConfig::new(self.paths, self.seed)
            .with_dt(self.dt)
            .with_antithetic(self.antithetic))
    }
}

/// Fee structure and killing rate for the validation suites. The lower fee
/// level is `F0` and the upper one is the contract's `B2`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    pub q: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Largest accepted Monte Carlo deviation, in standard errors.
    pub z_max: f64,
    /// Thresholds `y` (log scale, relative to `F0`) for the simulation check.
    pub thresholds: Option<Vec<f64>>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            q: 0.15,
            alpha1: 0.018,
            alpha2: 0.009,
            z_max: 3.0,
            thresholds: None,
        }
    }
}

impl ValidateSection {
    pub fn fees(&self, contract: &ContractSection) -> Result<FeeStructure> {
        Ok(FeeStructure::new(self.alpha1, self.alpha2, contract.f0, contract.f0, contract.b2)?)
    }

    /// Configured thresholds, or twelve points covering all three regimes.
    pub fn thresholds(&self, b2: f64) -> Vec<f64> {
        self.thresholds.clone().unwrap_or_else(|| {
            let mut grid = vec![-0.5, -0.25, -0.1, -0.03, 0.0];
            grid.extend([0.2, 0.5, 0.8].map(|f| f * b2));
            grid.extend([b2, b2 + 0.07, b2 + 0.2, b2 + 0.5]);
            grid
        })
    }
}

impl JobConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

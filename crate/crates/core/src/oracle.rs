//! Monte Carlo simulation of the account process `U`, independent of the
//! transform machinery.
//!
//! Between jumps the refracted diffusion is advanced by Euler steps with the
//! deduction evaluated at step start. Jump epochs are exact Poisson times and
//! sizes are drawn from the hyper-exponential mixture. Barrier exits by
//! diffusion are detected with the Brownian-bridge crossing probability.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, require_positive, Result};
use crate::model::{FeeStructure, HejdModel};

pub const DEFAULT_DT: f64 = 1e-3;
const BATCH: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub paths: usize,
    /// Euler step for the drift/diffusion part, in years.
    pub dt: f64,
    pub seed: u64,
    /// Pair every path with one driven by the negated Gaussian increments.
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(paths: usize, seed: u64) -> Self {
        Self {
            paths,
            dt: DEFAULT_DT,
            seed,
            antithetic: false,
        }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    pub fn with_antithetic(self, antithetic: bool) -> Self {
        Self { antithetic, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(invalid("paths", "must be positive"));
        }
        require_positive("dt", self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    pub estimate: f64,
    pub standard_error: f64,
    pub paths_used: usize,
}

impl SimResult {
    /// Distance from `value` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        (value - self.estimate).abs() / self.standard_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Fixed(f64),
    /// Independent exponential lifetime with the given rate.
    Killed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

/// Starting point, horizon and an optional exit window `(lower, upper)`.
/// A path stops at its first exit; infinite bounds disable the check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub start: f64,
    pub horizon: Horizon,
    pub lower: f64,
    pub upper: f64,
}

impl Scenario {
    pub fn fixed(start: f64, horizon: f64) -> Self {
        Self {
            start,
            horizon: Horizon::Fixed(horizon),
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn killed(start: f64, q: f64) -> Self {
        Self {
            horizon: Horizon::Killed(q),
            ..Self::fixed(start, 0.0)
        }
    }

    pub fn with_exit_window(self, lower: f64, upper: f64) -> Self {
        Self { lower, upper, ..self }
    }

    fn validate(&self) -> Result<()> {
        match self.horizon {
            Horizon::Fixed(t) => require_positive("horizon", t)?,
            Horizon::Killed(q) => require_positive("q", q)?,
        }
        if !(self.lower < self.upper) {
            return Err(invalid("exit window", format!("need lower < upper, got ({}, {})", self.lower, self.upper)));
        }
        Ok(())
    }
}

/// What one simulated path leaves behind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    /// `U` at the horizon, or at the exit point if the path stopped early.
    pub terminal: f64,
    pub elapsed: f64,
    /// Time spent with `U < b1`.
    pub time_below: f64,
    /// Time spent with `U ≥ b2`.
    pub time_above: f64,
    pub jumps: usize,
    pub exit: Option<Side>,
}

/// Functionals with a Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    /// `P_x(U_{e(q)} > y)`.
    Survival { x: f64, y: f64, q: f64 },
    /// `E[e^{−rT} F_T]`.
    PriceFund { maturity: f64, rate: f64 },
    /// `E[e^{−rT} (K − F_T)_+]`.
    PricePut { maturity: f64, rate: f64, strike: f64 },
    /// Expected time below `b1` or at/above `b2` on `[0, T]`.
    Occupation { maturity: f64, side: Side },
    /// `E_x[e^{−qτ}; U_τ exits (lower, upper) on side]`.
    Exit {
        x: f64,
        q: f64,
        lower: f64,
        upper: f64,
        side: Side,
    },
}

impl Quantity {
    fn scenario(&self) -> Scenario {
        match *self {
            Quantity::Survival { x, q, .. } => Scenario::killed(x, q),
            Quantity::PriceFund { maturity, .. }
            | Quantity::PricePut { maturity, .. }
            | Quantity::Occupation { maturity, .. } => Scenario::fixed(0.0, maturity),
            Quantity::Exit { x, q, lower, upper, .. } => Scenario::killed(x, q).with_exit_window(lower, upper),
        }
    }

    fn value(&self, path: &PathSummary, f0: f64) -> f64 {
        match *self {
            Quantity::Survival { y, .. } => f64::from(u8::from(path.terminal > y)),
            Quantity::PriceFund { maturity, rate } => (-rate * maturity).exp() * f0 * path.terminal.exp(),
            Quantity::PricePut { maturity, rate, strike } => {
                (-rate * maturity).exp() * (strike - f0 * path.terminal.exp()).max(0.0)
            }
            Quantity::Occupation { side: Side::Below, .. } => path.time_below,
            Quantity::Occupation { side: Side::Above, .. } => path.time_above,
            Quantity::Exit { side, .. } => f64::from(u8::from(path.exit == Some(side))),
        }
    }
}

struct Simulator<'a> {
    model: &'a HejdModel,
    b1: f64,
    b2: f64,
    alpha1: f64,
    alpha2: f64,
    dt: f64,
    /// Step ladder `dt·4^k` with the distance to the nearest barrier that
    /// makes each rung safe, and `σ√h` per rung.
    ladder: Vec<(f64, f64, f64)>,
    up_mass: f64,
    up_cdf: Vec<f64>,
    down_cdf: Vec<f64>,
}

impl<'a> Simulator<'a> {
    fn new(model: &'a HejdModel, fees: &'a FeeStructure, dt: f64) -> Self {
        let total: f64 = model.up_weights().iter().chain(model.down_weights()).sum();
        let cdf = |w: &[f64]| {
            let mass: f64 = w.iter().sum();
            let mut acc = 0.0;
            w.iter()
                .map(|p| {
                    acc += p / mass;
                    acc
                })
                .collect::<Vec<_>>()
        };
        Self {
            model,
            b1: fees.b1(),
            b2: fees.b2(),
            alpha1: fees.alpha1(),
            alpha2: fees.alpha2(),
            dt,
            ladder: Self::ladder(model, fees, dt),
            up_mass: model.up_weights().iter().sum::<f64>() / total,
            up_cdf: cdf(model.up_weights()),
            down_cdf: cdf(model.down_weights()),
        }
    }

    fn jump<R: Rng>(&self, rng: &mut R) -> f64 {
        let pick = |cdf: &[f64], u: f64| cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
        let size: f64 = rng.sample(Exp1);
        if rng.random::<f64>() < self.up_mass {
            size / self.model.up_rates()[pick(&self.up_cdf, rng.random())]
        } else {
            -size / self.model.down_rates()[pick(&self.down_cdf, rng.random())]
        }
    }

    /// Whether a Brownian bridge from `u` to `v` over `h` touched `level`.
    fn bridge_crossed<R: Rng>(&self, rng: &mut R, u: f64, v: f64, level: f64, h: f64) -> bool {
        let var = self.model.sigma().powi(2) * h;
        var > 0.0 && rng.random::<f64>() < (-2.0 * (u - level) * (v - level) / var).exp()
    }

    /// Rungs `h = dt·4^k` up to a quarter year, each paired with the
    /// barrier distance `6σ√h + |drift|_max·h` beyond which a step of length
    /// `h` leaves every barrier uncrossed except with probability below 1e-9.
    ///
    /// Within such a step the drift is constant, so one Gaussian increment has
    /// the law of the corresponding run of `dt` Euler steps.
    fn ladder(model: &HejdModel, fees: &FeeStructure, dt: f64) -> Vec<(f64, f64, f64)> {
        let drift = [0.0, fees.alpha1(), fees.alpha2()]
            .iter()
            .map(|a| (model.mu() - a).abs())
            .fold(0.0, f64::max);
        let mut rungs = Vec::new();
        let mut h = dt;
        loop {
            let scale = model.sigma() * h.sqrt();
            rungs.push((h, 6.0 * scale + drift * h, scale));
            h *= 4.0;
            if h > 0.25 {
                break;
            }
        }
        rungs.reverse();
        rungs
    }

    /// Longest safe rung at `u`, with its `σ√h`.
    fn step(&self, u: f64, sc: &Scenario) -> (f64, f64) {
        let d = (u - self.b1)
            .abs()
            .min((u - self.b2).abs())
            .min(u - sc.lower)
            .min(sc.upper - u);
        self.ladder
            .iter()
            .find(|r| d >= r.1)
            .map_or((self.dt, self.ladder[self.ladder.len() - 1].2), |r| (r.0, r.2))
    }

    fn deduction(&self, u: f64) -> f64 {
        if u < self.b1 {
            self.alpha1
        } else if u >= self.b2 {
            self.alpha2
        } else {
            0.0
        }
    }

    fn path<R: Rng>(&self, sc: &Scenario, rng: &mut R, sign: f64) -> PathSummary {
        let (mu, sigma, lambda) = (self.model.mu(), self.model.sigma(), self.model.lambda());
        let (b1, b2) = (self.b1, self.b2);
        let end = match sc.horizon {
            Horizon::Fixed(t) => t,
            Horizon::Killed(q) => rng.sample::<f64, _>(Exp1) / q,
        };
        let mut next_jump = if lambda > 0.0 {
            rng.sample::<f64, _>(Exp1) / lambda
        } else {
            f64::INFINITY
        };
        let mut out = PathSummary {
            terminal: sc.start,
            elapsed: 0.0,
            time_below: 0.0,
            time_above: 0.0,
            jumps: 0,
            exit: None,
        };
        let outside = |u: f64| {
            if u <= sc.lower {
                Some(Side::Below)
            } else if u >= sc.upper {
                Some(Side::Above)
            } else {
                None
            }
        };
        if let Some(side) = outside(sc.start) {
            out.exit = Some(side);
            return out;
        }
        let (mut u, mut t) = (sc.start, 0.0);
        while t < end {
            let (to_jump, to_end) = (next_jump - t, end - t);
            let drift = mu - self.deduction(u);
            let (rung, rung_scale) = self.step(u, sc);
            let h = to_jump.min(to_end).min(rung);
            let z: f64 = rng.sample(StandardNormal);
            let scale = if h == rung { rung_scale } else { sigma * h.sqrt() };
            let v = u + drift * h + scale * sign * z;
            let below = |w: f64| f64::from(u8::from(w < b1));
            let above = |w: f64| f64::from(u8::from(w >= b2));
            out.time_below += 0.5 * h * (below(u) + below(v));
            out.time_above += 0.5 * h * (above(u) + above(v));

            let crossed = if v <= sc.lower || (sc.lower.is_finite() && self.bridge_crossed(rng, u, v, sc.lower, h)) {
                Some((Side::Below, sc.lower))
            } else if v >= sc.upper || (sc.upper.is_finite() && self.bridge_crossed(rng, u, v, sc.upper, h)) {
                Some((Side::Above, sc.upper))
            } else {
                None
            };
            if let Some((side, level)) = crossed {
                out.exit = Some(side);
                out.terminal = level;
                out.elapsed = t + h;
                return out;
            }

            u = v;
            if h == to_jump {
                t = next_jump;
                u += self.jump(rng);
                out.jumps += 1;
                next_jump += rng.sample::<f64, _>(Exp1) / lambda;
                if let Some(side) = outside(u) {
                    out.exit = Some(side);
                    break;
                }
            } else if h == to_end {
                t = end;
            } else {
                t += h;
            }
        }
        out.terminal = u;
        out.elapsed = t;
        out
    }
}

fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

/// Runs `units` independent units in deterministic batches; a unit is one
/// path, or an antithetic pair. Batch results come back in batch order.
fn run_batches<T, F>(cfg: &SimConfig, units: usize, unit: F) -> Vec<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let batches = units.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(cfg.seed, b);
            let len = BATCH.min(units - b * BATCH);
            (0..len)
                .map(|_| {
                    let mut path_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
                    unit(&mut path_rng)
                })
                .collect()
        })
        .collect()
}

/// Simulates `cfg.paths` paths of `U` and returns their summaries in a
/// seed-determined order.
pub fn simulate_paths(model: &HejdModel, fees: &FeeStructure, scenario: &Scenario, cfg: &SimConfig) -> Result<Vec<PathSummary>> {
    cfg.validate()?;
    scenario.validate()?;
    let sim = Simulator::new(model, fees, cfg.dt);
    let batches = if cfg.antithetic {
        run_batches(cfg, cfg.paths.div_ceil(2), |rng| {
            let mut twin = rng.clone();
            vec![sim.path(scenario, rng, 1.0), sim.path(scenario, &mut twin, -1.0)]
        })
        .into_iter()
        .map(|b| b.into_iter().flatten().collect())
        .collect()
    } else {
        run_batches(cfg, cfg.paths, |rng| sim.path(scenario, rng, 1.0))
    };
    Ok(batches.into_iter().flatten().collect())
}

/// Monte Carlo mean and standard error of `quantity`.
///
/// With antithetics the standard error is computed over pair averages.
pub fn estimate(model: &HejdModel, fees: &FeeStructure, quantity: &Quantity, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let scenario = quantity.scenario();
    scenario.validate()?;
    let sim = Simulator::new(model, fees, cfg.dt);
    let f0 = fees.initial();
    let (units, per_unit) = if cfg.antithetic {
        (cfg.paths.div_ceil(2), 2)
    } else {
        (cfg.paths, 1)
    };
    let batches = run_batches(cfg, units, |rng| {
        if cfg.antithetic {
            let mut twin = rng.clone();
            let a = quantity.value(&sim.path(&scenario, rng, 1.0), f0);
            let b = quantity.value(&sim.path(&scenario, &mut twin, -1.0), f0);
            0.5 * (a + b)
        } else {
            quantity.value(&sim.path(&scenario, rng, 1.0), f0)
        }
    });
    // Shift by the first sample to keep the variance sum well conditioned.
    let pivot = batches[0][0];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for x in batches.iter().flatten() {
        let d = x - pivot;
        sum += d;
        sum_sq += d * d;
    }
    let n = units as f64;
    let mean = sum / n;
    let var = if units > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SimResult {
        estimate: pivot + mean,
        standard_error: (var / n).sqrt(),
        paths_used: units * per_unit,
    })
}

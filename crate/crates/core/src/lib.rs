//! Pricing engine for variable annuities whose fees are charged only while
//! the account sits below a lower level or at/above an upper level, under a
//! hyper-exponential jump diffusion.
//!
//! The pipeline is: roots of the Lévy exponent ([`model`]), Wiener–Hopf
//! building blocks ([`fluctuation`]), the law of the refracted account at an
//! exponential time ([`distribution`]), Euler inversion ([`inversion`]) and the
//! fair-fee search ([`pricing`]). [`oracle`] is an independent Monte Carlo
//! simulator used to cross-check the analytic results.

// `!(a < b)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distribution;
pub mod error;
pub mod fluctuation;
pub mod inversion;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod pricing;

pub use error::{Error, Result};
pub use model::{solve_roots, FeeStructure, HejdModel, RootSet};

#[cfg(test)]
pub(crate) mod test_support;

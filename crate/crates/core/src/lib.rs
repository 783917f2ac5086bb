//! Exponentially weighted aggregation (EWA) for regression with a fixed design.
//!
//! The crate covers two estimators built on the same exponential-weights
//! construction:
//!
//! * [`finite_agg`]: exact weights over a finite family of candidate
//!   functions, computed in the log domain.
//! * [`sparse_ewa`]: the posterior mean over linear combinations of a
//!   dictionary under a heavy-tailed product prior, estimated by MCMC and
//!   cross-checked against tensor-product quadrature for tiny dimensions.
//!
//! [`bounds`] holds closed-form calculators for the temperature thresholds
//! and oracle-inequality right-hand sides, [`noise`] the error models those
//! thresholds depend on, and [`harness`] a seeded Monte Carlo runner that
//! checks the inequalities empirically.

pub mod bounds;
pub mod error;
pub mod finite_agg;
pub mod harness;
pub mod model;
pub mod noise;
pub mod quadrature;
pub mod seed;
pub mod sparse_ewa;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};

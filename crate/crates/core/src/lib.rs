//! Bayesian degradation modeling with a Dirichlet-process-mixture random
//! effect, residual-life distributions built from posterior draws, and
//! transformation-based MCMC prediction.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the domain types (unit paths, datasets, prior scenarios)
//!   and the deterministic model math.
//! * [`gibbs`] is the blocked Gibbs sampler for the semi-parametric and the
//!   parametric hierarchy.
//! * [`rul`] turns posterior draws into residual-life CDFs and densities.
//! * [`tmcmc`] samples those densities and produces point and interval
//!   predictions.
//! * [`sim`] generates the synthetic study cases and evaluates predictions.
//! * [`diagnostics`] summarises chains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dist;
mod error;
pub mod gibbs;
pub mod model;
pub mod rul;
pub mod sim;
pub mod tmcmc;

pub use error::{Error, Result};

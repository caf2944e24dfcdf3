//! Transferability bounds and simulators for classifier-induced
//! distribution shift.
//!
//! A deployed classifier changes the population it scores: agents adapt
//! their features, qualification rates drift with the treatment each class
//! receives, credit scores respond to decisions. This crate models that
//! feedback as a map from a classifier h to the distribution D(h) it
//! induces, and computes upper and lower bounds relating a model's source
//! risk, its induced risk, and the best achievable induced risk.
//!
//! Layout:
//!
//! - [`distributions`]: datasets, binned densities, risks, rates, total
//!   variation, H-divergence, importance weights.
//! - [`classifiers`]: the threshold family h_τ, logistic training of the
//!   base scorer, grid construction and sweeps.
//! - [`shift`]: strategic response, replicator dynamics, two synthetic
//!   causal DAGs, and credit-score dynamics.
//! - [`bounds`]: the transfer bounds, assumption checkers, and worst-case
//!   estimators, assembled into [`bounds::BoundReport`].
//! - [`optimizers`]: source/induced grid optima, closed-form replicator
//!   descent, one-point bandit gradient descent, regularized training.
//! - [`harness`]: experiment loops behind the CLI — configs, seeded
//!   determinism, CSV output.

pub mod bounds;
pub mod classifiers;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod math;
pub mod optimizers;
pub mod shift;

pub use error::{Error, Result};

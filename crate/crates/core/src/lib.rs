//! Capacity toolkit for the binary random-insertion channel.
//!
//! After every input bit the channel inserts, with probability `alpha`, one
//! uniformly random bit. This crate provides
//!
//! - [`model`]: channel realizations, run bookkeeping, and the modified,
//!   perturbed and run-truncating transforms used in the small-`alpha` analysis;
//! - [`exact`]: the exact transition law `P(y | x)` by dynamic programming;
//! - [`capacity`]: exact finite-blocklength mutual information (with its
//!   segment-length entropy decomposition) and Blahut–Arimoto upper bounds;
//! - [`series`]: the first-order expansion constants with rigorous tails;
//! - [`monte_carlo`]: seeded large-blocklength estimators for the per-term
//!   entropy constants.
//!
//! All logarithms are base two.

pub mod capacity;
pub mod error;
pub mod exact;
pub mod model;
pub mod monte_carlo;
pub mod series;

pub use error::{Error, Result};
pub use model::{BitWord, ChannelParams, InsertionRealization};

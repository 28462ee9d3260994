//! Quantum Fisher information toolkit for two-photon time/frequency radar.

// `!(x > 0.0)` is used throughout so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod analytic;
pub mod error;
pub mod gaussian;
pub mod kinematics;
pub mod montecarlo;
pub mod oracle;
pub mod verdict;

pub use error::{Error, Result};

//! Batch means estimation of MCMC variance with CLT-based confidence
//! intervals, reference samplers, analytic oracles and a replication harness.

// NaN-rejecting guards are written as `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod oracles;
pub mod samplers;

pub use error::{Error, Result};

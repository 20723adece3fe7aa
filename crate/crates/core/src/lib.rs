//! Taut strings through discrete tubes around Wiener sample paths.
//!
//! The crate bundles an exact tube solver, Monte Carlo energy experiments,
//! a pursuit-process simulator, closed-form bound evaluation, and a buffer
//! scheduling application of the same solver.

pub mod bounds;
pub mod buffer;
pub mod error;
pub mod exec;
pub mod montecarlo;
pub mod paths;
pub mod pursuit;
pub mod stats;
pub mod tautstring;

pub use error::{Error, Result};

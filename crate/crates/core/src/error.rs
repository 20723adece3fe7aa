//! Error type shared across the toolkit.
//!
//! Two broad classes matter to callers:
//!
//! * input problems (bad grids, infeasible tubes, malformed files) — the
//!   caller gave us something we refuse to work on;
//! * internal failures (`Solver`) — an invariant the solvers rely on was
//!   violated, which signals a bug rather than bad input.
//!
//! The CLI maps the first class to exit code 1 and the second to exit code 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A time grid failed validation (not strictly increasing, wrong origin,
    /// too short).
    #[error("invalid grid: {0}")]
    Grid(String),

    /// Some other argument or file failed validation.
    #[error("invalid input: {0}")]
    Input(String),

    /// A tube has no feasible path through it; `knot` names the first
    /// offending knot index.
    #[error("infeasible tube at knot {knot}: {detail}")]
    Infeasible { knot: usize, detail: String },

    /// An internal solver invariant failed. This is a bug, not bad input.
    #[error("solver invariant violated: {0}")]
    Solver(String),

    /// Underlying I/O failure while reading or writing data files.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A data file did not parse; the message names the offending line.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors that indicate a bug in this crate rather than a
    /// problem with the caller's input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Solver(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

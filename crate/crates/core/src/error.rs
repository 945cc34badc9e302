use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid fundamental diagram: {0}")]
    InvalidDiagram(String),

    #[error("{what} = {value} is outside the admissible range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("state (rho = {rho}, q = {q}) violates 0 <= q <= rho <= 1")]
    Domain { rho: f64, q: f64 },

    #[error("time step {dt} exceeds the CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("time step collapsed to {dt} at t = {time}")]
    StepCollapse { dt: f64, time: f64 },

    #[error("invariant region left by {excess:e} in cell {cell} (rho = {rho}, Z = {z})")]
    InvariantViolation {
        cell: usize,
        rho: f64,
        z: f64,
        excess: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot compare runs: {0}")]
    Comparison(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

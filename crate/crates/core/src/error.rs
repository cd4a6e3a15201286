use alloc::string::String;

use crate::grid::Boundary;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("Newton iteration stalled after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("degenerate {boundary} boundary: |u| = {modulus:e} at angular node {node}")]
    DegenerateBoundary {
        boundary: Boundary,
        node: usize,
        modulus: f64,
    },

    #[error("energy increased at iteration {iteration} by {increase:e} even after step reduction")]
    StepSize { iteration: usize, increase: f64 },

    #[error("mode k = {k} (q = {q}) hits a tangent singularity at R = {inner_radius}")]
    Singularity { k: i64, q: u32, inner_radius: f64 },

    #[error("mode k = {k} (q = {q}): discrete functional is unbounded below")]
    UnboundedBelow { k: i64, q: u32 },

    #[error("coefficients resolved up to K = {available}, ledger needs K_R = {required}")]
    InsufficientResolution { available: usize, required: usize },

    #[error("infeasible coefficients: sum k|a_k|^2 = {found}, expected degree {expected}")]
    InfeasibleCoefficients { found: f64, expected: i64 },

    #[error("Q_{p} has no root in (0,1)")]
    NoRoot { p: u32 },

    #[error("criterion is not monotone in R between {lower} and {upper}")]
    NonMonotone { lower: f64, upper: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

use thiserror::Error;

/// Errors raised anywhere in the pipeline, from block indexing up to the
/// validation oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("chain length {len} is not a multiple of the interaction range {range}")]
    InvalidLength { len: usize, range: usize },

    #[error("invalid coupling table: {0}")]
    InvalidCouplings(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error(
        "Perron iteration did not converge after {iterations} squarings (residual {residual:e})"
    )]
    Convergence { iterations: usize, residual: f64 },

    #[error(
        "stochastic inversion failed: consistency residual {residual:e} at (prev={prev}, mid={mid}, next={next})"
    )]
    InversionFailure {
        residual: f64,
        prev: usize,
        mid: usize,
        next: usize,
    },

    #[error("causal partition is ambiguous at tolerance {tol:e}: rows {a} ~ {b} and {b} ~ {c} but {a} !~ {c}")]
    PartitionAmbiguity {
        tol: f64,
        a: usize,
        b: usize,
        c: usize,
    },

    #[error("unifilarity violated: state {state} emitting symbol {symbol} reaches several states")]
    Unifilarity { state: usize, symbol: usize },

    #[error("chain is reducible ({classes} recurrent classes); select a class explicitly")]
    Reducible { classes: usize },

    #[error("parameter at its limit: {0}; use the ground-state pathway")]
    LimitParameter(String),

    #[error("phase boundary: minimum energy shared by {0:?}")]
    PhaseBoundary(Vec<String>),

    #[error("enumeration too large: {configs} configurations exceeds the guard {limit}")]
    EnumerationTooLarge { configs: u128, limit: u64 },

    #[error("position {position} out of range for a chain of {blocks} blocks")]
    PositionOutOfRange { position: usize, blocks: usize },

    #[error("quadratic-system solve failed: factorization residual {residual:e}")]
    QuadraticSolve { residual: f64 },

    #[error("estimator undersampled: {len} symbols, need at least {needed}")]
    Undersampled { len: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

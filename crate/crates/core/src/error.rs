//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by state algebra, protocol execution and analysis.
#[derive(Debug, Error)]
pub enum QkdError {
    /// Operator/state/target dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A qubit index is out of range or repeated.
    #[error("invalid qubit index: {0}")]
    InvalidIndex(String),

    /// A scalar argument is outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Amplitudes do not form a normalized, finite state vector.
    #[error("invalid state vector: {0}")]
    InvalidState(String),

    /// A matrix fails the unitarity check.
    #[error("matrix is not unitary: {0}")]
    NotUnitary(String),

    /// A matrix fails the density-matrix invariants.
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    /// A measurement landed on a branch of (numerically) zero probability.
    /// Unreachable under correct draw semantics; signals an internal bug.
    #[error("zero-probability measurement branch selected")]
    ZeroProbabilityBranch,

    /// A round record is missing measurements required by its case.
    #[error("incomplete round record: {0}")]
    IncompleteRecord(String),

    /// A transcript estimator was fed no rounds of a required category.
    #[error("empty category: {0}")]
    EmptyCategory(String),

    /// Root bracketing failed; the key-rate formula changed behaviour.
    #[error("no sign change on threshold bracket [{0}, {1}]")]
    NoSignChange(f64, f64),

    /// An attack specification string could not be parsed.
    #[error("invalid attack spec: {0}")]
    AttackSpec(String),

    /// A serialized transcript line could not be decoded.
    #[error("transcript parse error: {0}")]
    TranscriptParse(String),
}

pub type Result<T> = std::result::Result<T, QkdError>;

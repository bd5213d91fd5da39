use thiserror::Error;

/// Largest register the dense simulator will allocate.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: bad indices, size mismatches, empty collections.
    #[error("structural error: {0}")]
    Structural(String),

    /// An input violated a documented precondition (norm, symmetry, range).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("unsupported domain size {0}: need a power of two >= 4")]
    UnsupportedSize(usize),

    #[error("invalid interval width M={width} for N={domain}: {reason}")]
    InvalidInterval {
        width: usize,
        domain: usize,
        reason: &'static str,
    },

    #[error("resource cap exceeded: {needed} qubits requested, cap is {cap}")]
    ResourceCap { needed: usize, cap: usize },

    #[error("degenerate problem: {0}")]
    DegenerateProblem(String),

    #[error("pattern does not occur in the text")]
    NoOccurrence,

    #[error("pattern occurs {0} times cyclically; exactly one occurrence is required")]
    MultipleOccurrences(usize),

    #[error("solver did not converge after {0} iterations")]
    NotConverged(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::ContractViolation(msg.into())
}

pub(crate) fn check_qubit_cap(needed: usize) -> Result<()> {
    if needed > MAX_QUBITS {
        Err(Error::ResourceCap {
            needed,
            cap: MAX_QUBITS,
        })
    } else {
        Ok(())
    }
}

/// log2 of `n` when `n` is a power of two.
pub(crate) fn exact_log2(n: usize) -> Option<usize> {
    if n.is_power_of_two() {
        Some(n.trailing_zeros() as usize)
    } else {
        None
    }
}

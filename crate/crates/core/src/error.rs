use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },
    #[error("invalid player partition: {0}")]
    InvalidPartition(String),
    #[error("non-finite value encountered ({0})")]
    NonFinite(&'static str),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix for player {player} is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { player: usize, asymmetry: f64 },
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("not a fixed point: |xi| = {xi_norm:e} exceeds tolerance {tolerance:e}")]
    NotAFixedPoint { xi_norm: f64, tolerance: f64 },
    #[error("dimension {dim} exceeds the dense Hessian cap {cap}")]
    HessianCapExceeded { dim: usize, cap: usize },
    #[error("zero vector passed where a nonzero one is required ({0})")]
    ZeroVector(&'static str),
    #[error("eigenvalue iteration failed to converge")]
    EigenNoConvergence,
    #[error("spectral oracle needs {0}")]
    OracleUnsupported(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

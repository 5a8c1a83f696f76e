use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not unitary: ||U^dag U - 1||_F = {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("channel is not trace preserving: ||sum W^dag W - 1||_F = {defect:.3e}")]
    NotTracePreserving { defect: f64 },

    #[error("operation requires a single-qubit space, got {num_qubits} qubits")]
    NotSingleQubit { num_qubits: usize },

    #[error("time {t} lies outside [0, {t_final}]")]
    TimeOutOfRange { t: f64, t_final: f64 },

    #[error(
        "time step {dt} does not resolve the fastest frequency omega_max = {omega_max} \
         (need dt <= {max_dt})"
    )]
    UnresolvedFrequency { dt: f64, omega_max: f64, max_dt: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unitarity defect {defect:.3e} exceeds {limit:.1e}")]
    UnitarityDefect { defect: f64, limit: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

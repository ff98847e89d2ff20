use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("wire {wire} out of range for a {n_qubits}-qubit register")]
    WireOutOfRange { wire: usize, n_qubits: usize },
    #[error("wire {0} listed more than once")]
    DuplicateWire(usize),
    #[error("classical bit {bit} out of range ({n_bits} bits)")]
    BitOutOfRange { bit: usize, n_bits: usize },
    #[error("matrix is not unitary (max deviation of U^dag U from I: {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("state is not normalized (|psi|^2 = {norm_sq})")]
    NotNormalized { norm_sq: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("keep set for a partial trace must be non-empty")]
    EmptyKeepSet,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("beta = inf is ill-defined for a degenerate ground energy")]
    DegenerateGroundState,
    #[error("entanglement resource damaged: largest eigenvalue {largest_eigenvalue} of its reduced state")]
    ResourceDamaged { largest_eigenvalue: f64 },
}

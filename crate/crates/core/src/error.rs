use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M^dagger| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix dimension {found} is not supported (expected {expected})")]
    Dimension { expected: usize, found: usize },

    #[error("not a state: {0}")]
    NotAState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid Pauli word {0:?}: expected three letters from I, X, Y, Z")]
    InvalidPauliWord(String),

    #[error("certificate rejected: {0}")]
    CertificateRejected(String),
}

pub type Result<T> = std::result::Result<T, Error>;

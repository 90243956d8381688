use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("imaginary part is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("lattice basis is rank deficient")]
    RankDeficient,
    #[error("precision must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("C*B + D is singular or badly conditioned (condition number {0:.3e})")]
    SingularDenominator(f64),
    #[error("matrix is not symplectic")]
    NotSymplectic,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("reduction did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("trisecant configuration is trivial (two points coincide up to sign)")]
    TrivialConfiguration,
    #[error("odd theta denominator underflow (|lambda| = {0:.3e})")]
    DenominatorUnderflow(f64),
    #[error("half-period starts need 0 < ell < 1, got {0}")]
    DegenerateEll(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("genus {got} is not supported here (need {need})")]
    WrongGenus { got: usize, need: String },
    #[error("A block of the period data is singular")]
    SingularA,
    #[error("unknown matrix name `{0}`")]
    UnknownName(String),
    #[error("malformed matrix file: {0}")]
    MalformedFile(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is a perfect square; use the cusp path instead")]
    SquareDiscriminant(i64),
    #[error("arguments are not coprime: ({0}, {1})")]
    NotCoprime(i64, i64),
    #[error("invalid discriminant {0}")]
    InvalidDiscriminant(i64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("form has zero leading coefficient")]
    ZeroLeadingCoefficient,
    #[error("form is not positive definite")]
    NotDefinite,
    #[error("imaginary part must be positive")]
    NonPositiveImaginaryPart,
    #[error("Poincaré series needs s > 1, got {0}")]
    ConvergenceRegion(f64),
    #[error("both m and n are negative")]
    BothNegative,
    #[error("coefficient p({0},{1}) is not available from a holomorphic basis element")]
    NotConstructible(i64, i64),
    #[error("{0} is not of the shape v^2 m with m squarefree and (v,6)=1")]
    BadShape(i64),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("series truncation too short: {0}")]
    Truncation(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

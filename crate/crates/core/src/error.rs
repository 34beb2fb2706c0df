use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },

    #[error("leading denominator coefficient is zero")]
    ZeroLeadingCoefficient,

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("only single-input single-output data is supported (n_u = {nu}, n_y = {ny})")]
    NotSiso { nu: usize, ny: usize },

    #[error("compression needs at least {needed} columns, got {got}")]
    CompressionNotApplicable { needed: usize, got: usize },

    #[error("singular equality constraints: input data matrix has rank {rank}, expected {expected}")]
    SingularConstraint { rank: usize, expected: usize },

    #[error("zero pseudoinverse solution with positive online noise variance")]
    ZeroPseudoinverse,

    #[error("rank-deficient regressor: rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

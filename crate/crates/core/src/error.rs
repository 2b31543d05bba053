use thiserror::Error;

use crate::field::FieldSpec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("field mismatch: {left} vs {right}")]
    FieldMismatch { left: FieldSpec, right: FieldSpec },

    #[error("division by zero")]
    DivisionByZero,

    #[error("invalid modulus {0}: must be a prime >= 2")]
    InvalidModulus(u64),

    #[error("index ({i}, {j}) out of range for dimension {n} (indices are 1-based)")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operation requires a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("generator-pair oracle cannot evaluate this input: {0}")]
    UnsupportedQuery(String),

    #[error("validation needs a full table or conjugation backing")]
    UnsupportedBacking,

    #[error("I - G^(n-1)H is injective; (H, G) does not come from an automorphism")]
    EmptyKernel,

    #[error("assembled conjugator is singular; (H, G) does not come from an automorphism")]
    SingularConjugator,

    #[error("no invertible matrix found after {0} attempts")]
    GenerationExhausted(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

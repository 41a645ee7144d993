use thiserror::Error;

use crate::Rational;

#[derive(Debug, Error)]
pub enum Error {
    #[error("variable-count mismatch: {left} vs {right}")]
    VarCountMismatch { left: usize, right: usize },

    #[error("point has {got} coordinates but the polynomial has {expected} variables")]
    PointLength { expected: usize, got: usize },

    #[error("degree {degree} exceeds the target degree {target}")]
    DegreeTooHigh { degree: u32, target: u32 },

    #[error("polynomial is not homogeneous")]
    NotHomogeneous,

    #[error("form of degree {0} does not have the required even degree")]
    OddDegree(u32),

    #[error("polynomial is not an even form")]
    NotEven,

    #[error("gamma {gamma} is below the floor {floor}")]
    GammaBelowFloor { gamma: Rational, floor: Rational },

    #[error("point is not feasible: {0}")]
    InfeasiblePoint(String),

    #[error("invalid rational literal {0:?}")]
    ParseRational(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed conic program: {0}")]
    MalformedProgram(String),

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("certificate does not verify: {0}")]
    InvalidCertificate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

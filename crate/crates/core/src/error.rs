use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polynomial degree {0}: the DG space needs degree >= 1")]
    InvalidDegree(usize),

    #[error("interpolation points are not nested under dyadic refinement: {0}")]
    NonNestedPoints(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("basis index out of range: level {level}, support {support}, degree {degree}")]
    IndexOutOfRange {
        level: usize,
        support: usize,
        degree: usize,
    },

    #[error("element key outside the admissible range: {0}")]
    InvalidKey(String),

    #[error("level overflow: {0}")]
    LevelOverflow(String),

    #[error("dimension or shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index set is not downward closed")]
    NotDownwardClosed,

    #[error("singular linear system")]
    SingularSystem,

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no snapshot has been taken; call snapshot before restore")]
    NoSnapshot,

    #[error("cache file rejected: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

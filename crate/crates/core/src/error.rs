pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("disorder field does not cover site {0:?}; sample the field over the extended site set first")]
    UncoveredSite(Vec<i64>),

    #[error("matrix dimension {dim} exceeds the configured cap {cap}; raise `max_dimension` if this size is intended")]
    DimensionCap { dim: usize, cap: usize },

    #[error("boxes are not R-separated at R={r}: no coordinate subset satisfies either separation condition")]
    NotSeparated { r: f64 },

    #[error("eigensolver did not converge: {0}")]
    SolverFailure(String),

    #[error("spectral slice basis lost orthonormality (max deviation {max_dev:.3e}); refusing to report a ratio")]
    IllConditionedSlice { max_dev: f64 },

    #[error("point set generation failed: {0}")]
    GenerationFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

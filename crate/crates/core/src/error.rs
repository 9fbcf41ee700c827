use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// The coefficients violate the chain `0 < B < C < A`.
    #[error("coefficients not admissible: {violated} (A={a}, B={b}, C={c})")]
    NotAdmissible {
        violated: String,
        a: f64,
        b: f64,
        c: f64,
    },

    #[error("invalid family parameters: {0}")]
    InvalidFamily(String),

    #[error("vector {0:?} does not generate a q-base")]
    NotQBase([f64; 4]),

    #[error("degenerate 2-section: g(x,x)g(y,y) - g(x,y)^2 = {0:e}")]
    DegenerateSection(f64),

    #[error("degenerate pyramid: {0}")]
    DegeneratePyramid(String),

    #[error("metric is not positive definite at the evaluation point")]
    NotPositiveDefinite,

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

impl From<std::io::Error> for GeomError {
    fn from(e: std::io::Error) -> Self {
        GeomError::Io(e.to_string())
    }
}

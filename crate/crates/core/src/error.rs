use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A quotient denominator or a sqrt radicand is not admissible at the
    /// expansion point.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("order error: {0}")]
    Order(String),

    #[error("center mismatch: {left} vs {right}")]
    CenterMismatch { left: f64, right: f64 },

    #[error("division by a series with zero constant term")]
    DivisionByZeroSeries,

    #[error("index error: m({i}, {j}) requires 0 <= j <= i")]
    Index { i: i64, j: i64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Square system whose factorization failed and whose least-squares
    /// fallback left a residual above tolerance. Carries the provenance tags
    /// of the rows with the largest residuals.
    #[error("singular system (relative residual {residual:.3e}); worst rows: {worst_rows:?}")]
    SingularSystem { residual: f64, worst_rows: Vec<String> },

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("parameter error: {0}")]
    Param(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

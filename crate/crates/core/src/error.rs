use thiserror::Error;

/// Errors raised by the engine and the learning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible with the requested operation.
    #[error("shape error in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// An input value or configuration is outside its valid range.
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller broke an API contract (non-scalar loss, missing gradient, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A row's norm is too small to normalize.
    #[error("row {row} has norm {norm:e}, at or below the degeneracy threshold")]
    DegenerateRow { row: usize, norm: f64 },

    /// A runtime bookkeeping invariant failed.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A serialized file is malformed.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Shape {
        op,
        detail: detail.into(),
    }
}

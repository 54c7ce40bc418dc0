//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DistillError>;

#[derive(Debug, Error)]
pub enum DistillError {
    /// An aggregation or fit was asked to run on an empty collection.
    #[error("no samples: {0}")]
    NoSamples(&'static str),

    /// A loss or data entry was NaN/Inf where a finite value is required.
    #[error("invalid loss at {context} (index {index})")]
    NonFinite { context: &'static str, index: usize },

    /// Matrix/schema dimensions disagree.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A configuration field is out of its documented range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Operation needs complete data but the input still carries a mask.
    #[error("impute first: {0}")]
    MaskedData(&'static str),

    /// EM cannot impute a row with no visible entries.
    #[error("row {row} is fully masked")]
    RowFullyMasked { row: usize },

    /// Requested sample size exceeds the available rows.
    #[error("ipc {ipc} exceeds available rows {rows}")]
    IpcTooLarge { ipc: usize, rows: usize },

    /// Outer-loop loss blew past the divergence guard.
    #[error("divergence at iteration {iteration}: loss {loss:.3e} exceeds {limit:.3e}")]
    Divergence {
        iteration: usize,
        loss: f64,
        limit: f64,
        trace: Vec<(usize, f64)>,
    },

    /// Categorical entry outside {0,1,2}.
    #[error("state {value} out of range at position {index}")]
    StateOutOfRange { value: i64, index: usize },

    /// A probability vector does not lie on the simplex.
    #[error("not a distribution: {0}")]
    NotADistribution(&'static str),

    /// Training aborted on a non-finite loss.
    #[error("non-finite training loss at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("batch {batch}: {source}")]
    Batch {
        batch: usize,
        #[source]
        source: Box<DistillError>,
    },

    #[error("duplicate seed label: {0}")]
    DuplicateLabel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

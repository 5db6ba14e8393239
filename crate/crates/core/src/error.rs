use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A least-squares fit did not converge or was underdetermined.
    #[error("fit failed: {reason} (residual {residual:.3e})")]
    Fit { reason: String, residual: f64 },

    #[error("unknown correction term `{0}`")]
    UnknownTerm(String),

    #[error(
        "return-pair tensor needs {cells} cells, over the budget of {budget}; \
         use the dominant term set or enable price binning"
    )]
    MemoryBudget { cells: usize, budget: usize },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

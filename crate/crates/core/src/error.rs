use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A cell could not be parsed under its declared type. `row` is the
    /// 1-based data row (the header is not counted).
    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("model specification error: {0}")]
    Spec(String),

    #[error("covariate `{0}` has a single level and cannot be dummy coded")]
    DegenerateCovariate(String),

    /// Non-finite intermediate while evaluating the likelihood. `row` is the
    /// 0-based observation index.
    #[error("likelihood evaluation failed at observation {row}: {message}")]
    Evaluation { row: usize, message: String },

    #[error("covariance unavailable: {0}")]
    CovarianceUnavailable(String),

    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("simulation configuration error: {0}")]
    Config(String),

    #[error("model comparison error: {0}")]
    Comparison(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("knapsack box is infeasible: sum(lower) = {lower_sum}, sum(upper) = {upper_sum}, target = {target}")]
    InfeasibleBox {
        lower_sum: f64,
        upper_sum: f64,
        target: f64,
    },

    #[error("non-finite iterate produced at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },

    #[error("power iteration did not converge within {max_iter} iterations")]
    NoConvergence { max_iter: usize },

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("intercept bracket not found after {doublings} doublings")]
    BracketFailure { doublings: usize },

    #[error("invalid data model: {0}")]
    InvalidDataModel(String),

    #[error("bad image: {0}")]
    BadImage(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

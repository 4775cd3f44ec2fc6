use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("name `{0}` is empty after normalization")]
    EmptyAfterNormalization(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("sample of {n} exceeds pool of {pool}")]
    SampleLargerThanPool { n: usize, pool: usize },
    #[error("observed distinct count {l_obs} exceeds sample size {n}")]
    InvalidObservedCount { l_obs: usize, n: usize },
    #[error("exact computation too large: {0}")]
    InstanceTooLarge(String),
    #[error("name pool is empty")]
    EmptyPool,
    #[error("no p-values given")]
    EmptyInput,
    #[error("invalid p-value {0}, expected 0 < p <= 1")]
    InvalidPValue(f64),
    #[error("group labels do not match: {0}")]
    LabelMismatch(String),
    #[error("degenerate design: all covariate values are equal")]
    DegenerateDesign,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MfdrError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfdrError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("column {0} is constant and cannot be standardized")]
    ConstantColumn(usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("invalid response: {0}")]
    InvalidResponse(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    ParseError { row: usize, col: usize, msg: String },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("non-numeric cell '{value}' at row {row}, column {col}")]
    NonNumericCell { row: usize, col: usize, value: String },
    #[error("i/o error: {0}")]
    Io(String),

    #[error("family {family} does not match the response type")]
    FamilyMismatch { family: &'static str },
    #[error("invalid lambda grid: {0}")]
    InvalidGrid(String),
    #[error("every penalty factor is zero; nothing to select")]
    EmptyPenalizedSet,
    #[error("lambda_max {0:e} is below the degeneracy floor; response is orthogonal to every feature")]
    DegenerateNull(f64),
    #[error("grid index {index} out of range for a path of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("model is saturated: n - df = {0}")]
    SaturatedModel(i64),
    #[error("residual sum of squares is numerically zero (perfect fit)")]
    ZeroResidual,
    #[error("feature {0} has a degenerate weighted scale")]
    DegenerateWeight(usize),

    #[error("need at least {needed} statistics, got {got}")]
    TooFewStatistics { needed: usize, got: usize },
    #[error("non-finite statistic at position {0}")]
    NonFinite(usize),
    #[error("empty selection")]
    EmptySelection,
    #[error("feature {0} is not present in the table")]
    UnknownFeature(String),

    #[error("fold {fold} is too small ({size} observations)")]
    FoldTooSmall { fold: usize, size: usize },
    #[error("fold {0} contains no events")]
    EmptyEventFold(usize),

    #[error("at least one replicate is required")]
    RequiresReplicates,
    #[error("no features were selected in any replicate")]
    NoSelections,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

impl From<std::io::Error> for MfdrError {
    fn from(e: std::io::Error) -> Self {
        MfdrError::Io(e.to_string())
    }
}

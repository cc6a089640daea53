use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate design matrix: {0}")]
    DegenerateDesign(String),
    #[error("derivative of order {order} unavailable (capability {cap})")]
    DerivativeUnavailable { order: usize, cap: usize },
    #[error("unknown builtin net `{0}`")]
    UnknownBuiltin(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("point or scale outside the evaluable domain: {0}")]
    OutOfDomain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("tolerance exceeded for {what}: {value:e} > {limit:e}")]
    Tolerance { what: String, value: f64, limit: f64 },
    #[error("support error: {0}")]
    Support(String),
    #[error("series coefficient bound violated at |gamma| = {order}: |a| = {value:e} > {bound:e}")]
    SeriesBoundViolation { order: usize, value: f64, bound: f64 },
    #[error("bad bin count {count} for dimension {dim}")]
    BadBinCount { dim: usize, count: usize },
    #[error("bin {0} holds no samples")]
    EmptyBin(usize),
    #[error("cone partitions or probe grids differ")]
    PartitionMismatch,
    #[error("coefficient net `{0}` is not regular")]
    CoefficientNotRegular(String),
    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error("bad array file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

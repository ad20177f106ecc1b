use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{0}` not present in schema")]
    UnexpectedColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("value {value} out of domain for column `{column}` (row {row})")]
    OutOfDomainValue {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("cannot parse `{value}` in column `{column}` (row {row})")]
    UnparseableCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("split leaves an empty side ({train} train / {test} test rows)")]
    EmptySplit { train: usize, test: usize },
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("exponential mechanism needs at least one candidate")]
    EmptyCandidates,
    #[error("split factor must satisfy 0 < p < 1, got {0}")]
    SplitOutOfRange(f64),
    #[error("privacy budget exhausted: requested epsilon {requested}, remaining {remaining}")]
    BudgetExhausted { requested: f64, remaining: f64 },
    #[error("invalid privacy budget: {0}")]
    InvalidBudget(String),
    #[error("domain has a single cell; no informative queries exist")]
    DomainTooSmall,
    #[error("domain has {cells} cells, above the cap of {cap}")]
    DomainTooLarge { cells: u128, cap: u64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has no target column")]
    NoTarget,
    #[error("all features have zero variance")]
    DegenerateFeatures,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("need at least two algorithms to compare, got {0}")]
    TooFewAlgorithms(usize),
    #[error("only one class present; AUC-ROC is undefined")]
    SingleClass,
    #[error("plan has no synthesizers")]
    EmptyPlan,
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad caller input (as opposed to a failure
    /// inside a mechanism or the filesystem).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::UnexpectedColumn(_)
                | Error::UnknownColumn(_)
                | Error::OutOfDomainValue { .. }
                | Error::UnparseableCell { .. }
                | Error::LengthMismatch { .. }
                | Error::InvalidSchema(_)
                | Error::InvalidSpec(_)
                | Error::EmptySplit { .. }
                | Error::NonPositiveParameter { .. }
                | Error::SplitOutOfRange(_)
                | Error::InvalidBudget(_)
                | Error::NoTarget
                | Error::SchemaMismatch(_)
                | Error::EmptyPlan
                | Error::InvalidPlan(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed input at line {line}: {reason}")]
    Malformed { line: u64, reason: String },

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("conflicting values for ({sample}, {feature}): `{first}` vs `{second}`")]
    ConflictingValue {
        sample: String,
        feature: String,
        first: String,
        second: String,
    },

    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),

    #[error("table is empty after {0}")]
    EmptyTable(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ternary feature `{feature}` has {count} distinct values (at most 3 allowed)")]
    TooManyCategories { feature: String, count: usize },

    #[error("value `{value}` of ternary feature `{feature}` has no split mapping")]
    UnmappedTernaryValue { feature: String, value: String },

    #[error("feature `{0}` has no observed values to impute from")]
    EmptyFeature(String),

    #[error("table has missing cells; run imputation before building the indicator matrix")]
    MissingCells,

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("zero row mass for column {0}")]
    ZeroMass(usize),

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})"
    )]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("dimension {requested} out of range 1..={available}")]
    DimensionOutOfRange { requested: usize, available: usize },

    #[error("unknown sample `{0}`")]
    UnknownSample(String),

    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),

    #[error("Rips complex exceeds the simplex budget of {budget} (at least {count} simplices)")]
    SimplexBudget { count: usize, budget: usize },

    #[error("homology dimension {dim} needs a complex built to dimension {needed}; rebuild the filtration with a larger max_dim")]
    HomologyDimTooHigh { dim: usize, needed: usize },

    #[error("pair has no death column: {0}")]
    EssentialPair(String),

    #[error("diagram contains an essential class (infinite death); strip or cap it first")]
    InfiniteDeath,

    #[error("diagrams mix homology dimensions {0:?}")]
    MixedDimensions(Vec<usize>),

    #[error(
        "{partitions} partitions exceed the exact enumeration cap of {cap}; use randomized mode"
    )]
    PartitionCap { partitions: u128, cap: u128 },

    #[error("render: {0}")]
    Render(String),

    #[error("config: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

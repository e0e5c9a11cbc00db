use thiserror::Error;

use crate::spn::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected through node {0}")]
    Cycle(usize),

    #[error("node {node} references missing child {child}")]
    DanglingChild { node: usize, child: usize },

    #[error("leaf node {node} has variable {variable} outside [0, {num_variables})")]
    VariableOutOfRange {
        node: usize,
        variable: usize,
        num_variables: usize,
    },

    #[error("malformed SPN: {0}")]
    Malformed(String),

    #[error("invalid SPN: {0}")]
    InvalidSpn(ValidationReport),

    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sum node {0} has zero total outgoing weight")]
    ZeroWeightSum(usize),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid tensor train: {0}")]
    InvalidTensorTrain(String),

    #[error("{what}: {d} variables exceeds the enumeration limit of {limit}")]
    LimitExceeded {
        what: &'static str,
        d: usize,
        limit: usize,
    },

    #[error("model collapsed: every slice of core {core} sums to zero")]
    Collapsed { core: usize },

    #[error("partition function is zero or not finite")]
    ZeroPartition,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("NNLS did not converge at sweep {sweep}, core {core} after {iterations} iterations")]
    NnlsNotConverged {
        sweep: usize,
        core: usize,
        iterations: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "could not draw {requested} non-samples: only {available} of the 2^{d} states are outside the dataset"
    )]
    NonSampleBudget {
        requested: usize,
        available: u128,
        d: usize,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

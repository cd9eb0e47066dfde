use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Csv { path: PathBuf, line: usize, msg: String },

    #[error("header {found:?} does not match schema {expected:?}")]
    HeaderMismatch { expected: Vec<String>, found: Vec<String> },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("binding {binding:?} is not a prefix of schema {schema:?}")]
    NotAPrefix { binding: Vec<String>, schema: Vec<String> },

    #[error("attribute set {x:?} is not contained in {y:?}")]
    NotSubset { x: Vec<String>, y: Vec<String> },

    #[error("schemas {0:?} and {1:?} share no attribute")]
    DisjointSchemas(Vec<String>, Vec<String>),

    #[error("threshold must be positive")]
    InvalidThreshold,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("relation `{0}` is not loaded")]
    MissingRelation(String),

    #[error("constraint guard `{guard}` does not cover {y:?}")]
    GuardMismatch { guard: String, y: Vec<String> },

    #[error("output size is unbounded: variables {unbound:?} are not bound")]
    Unbounded { unbound: Vec<String> },

    #[error("degree constraints are cyclic: {}", witness.join(" -> "))]
    Cyclic { witness: Vec<String> },

    #[error("variable order is incompatible with the constraints: {0}")]
    OrderIncompatible(String),

    #[error("{what} has {n} variables, limit is {max}")]
    SizeLimit { what: &'static str, n: usize, max: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("insufficient weight on {term}")]
    InsufficientWeight { term: String },

    #[error("could not serialise the certificate into a proof sequence within budget")]
    DeriveIncomplete,

    #[error("proof sequence invalid at step {step}: {reason}")]
    InvalidSequence { step: usize, reason: String },

    #[error("term {0} has no affiliated relation")]
    Unaffiliated(String),

    #[error("decomposition step {0} has no threshold")]
    MissingTheta(usize),

    #[error("weight functions must be non-negative")]
    NegativeWeight,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("cannot generate instance: {0}")]
    Unachievable(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

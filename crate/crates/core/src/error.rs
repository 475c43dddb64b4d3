use thiserror::Error;

/// Which input a parse error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Nodes,
    Edges,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Nodes => f.write_str("node file"),
            Source::Edges => f.write_str("edge file"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_file} line {line}: {message}")]
    Malformed {
        source_file: Source,
        line: usize,
        message: String,
    },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("edge file line {line}: non-positive weight {weight}")]
    NonPositiveWeight { line: usize, weight: f64 },
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("graph invariant violated: {0}")]
    InvalidGraph(String),
    #[error("node `{0}` is not a product")]
    NotAProduct(String),
    #[error("node `{0}` is not an attribute")]
    NotAnAttribute(String),
    #[error("product `{0}` has no attributes to justify with")]
    NoAttributes(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid personalization: {0}")]
    InvalidPersonalization(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("selection of {size} attributes exceeds budget {budget}")]
    BudgetExceeded { size: usize, budget: usize },
    #[error("attribute `{0}` is already in the base set")]
    AlreadySelected(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

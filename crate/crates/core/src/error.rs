use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The edge list closes a directed cycle. The nodes are listed in cycle order.
    #[error("graph contains a cycle: {}", fmt_cycle(.cycle))]
    Cycle { cycle: Vec<usize> },

    #[error("edge ({from}, {to}) references a node outside 0..{node_count}")]
    BadEdge { from: usize, to: usize, node_count: usize },

    #[error("node {node}: {message}")]
    Domain { node: usize, message: String },

    #[error("{what} is too large: {size} exceeds the limit of {limit}")]
    TooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("model hypotheses violated: {0}")]
    Hypothesis(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite: {0}")]
    Singular(String),

    #[error("system cost is not finite ({value}) on sample {sample}")]
    NonFiniteCost { sample: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn fmt_cycle(cycle: &[usize]) -> String {
    let mut parts: Vec<String> = cycle.iter().map(|n| n.to_string()).collect();
    if let Some(first) = cycle.first() {
        parts.push(first.to_string());
    }
    parts.join(" -> ")
}

impl Error {
    pub(crate) fn domain(node: usize, message: impl Into<String>) -> Self {
        Error::Domain {
            node,
            message: message.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn too_large(what: &'static str, size: impl Into<u128>, limit: impl Into<u128>) -> Self {
        Error::TooLarge {
            what,
            size: size.into(),
            limit: limit.into(),
        }
    }
}

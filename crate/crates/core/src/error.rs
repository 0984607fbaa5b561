//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A line of an edge-list file could not be parsed.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// The edge-list input contained no edge lines at all.
    #[error("edge list is empty")]
    EmptyEdgeList,

    /// A dense node id outside `0..node_count`.
    #[error("node {node} out of range (graph has {node_count} nodes)")]
    NodeOutOfRange { node: u64, node_count: usize },

    /// An original node id that does not occur in the loaded graph.
    #[error("unknown node id {0}")]
    UnknownLabel(u64),

    /// A threshold-model specification string or parameter was rejected.
    #[error("invalid threshold model: {0}")]
    Model(String),

    /// A caller violated an operation precondition (k out of range, empty
    /// snapshot pool, argument outside its domain, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A seed was committed to an `EvalCache` twice, or queried after commit.
    #[error("seed {0} is already committed")]
    AlreadyCommitted(u32),

    /// An exact-oracle feasibility guard was exceeded.
    #[error("{what} = {actual} exceeds the oracle guard of {limit}")]
    GuardExceeded {
        what: &'static str,
        limit: u64,
        actual: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

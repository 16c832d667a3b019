use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("edge {edge}: {reason}")]
    InvalidEdge { edge: u64, reason: String },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("node index {0} is out of range")]
    NodeOutOfRange(usize),

    #[error("duplicate node `{0}`")]
    DuplicateNode(String),

    #[error("duplicate edge id {0}")]
    DuplicateEdge(u64),

    #[error("invalid task pair: {0}")]
    InvalidTask(String),

    #[error("travel time {t} outside [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("subpath {subpath}: {reason}")]
    Structure { subpath: usize, reason: String },

    #[error("no merge/split pair connects all endpoints")]
    NoPlatoonPair,

    #[error("no plan can meet the deadlines")]
    Infeasible,

    #[error("multiplier {index} is negative ({value})")]
    NegativeMultiplier { index: usize, value: f64 },

    #[error("flow conservation violated at node {node} in subpath {subpath}")]
    FlowConservation { node: usize, subpath: usize },

    #[error("decomposition stalled in subpath {subpath} at node {node}")]
    DecompositionStalled { node: usize, subpath: usize },

    #[error("sampling gave up after {0} attempts")]
    RetryCapExhausted(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

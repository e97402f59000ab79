use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("self-loop on node `{0}`")]
    SelfLoop(String),

    #[error("node index {index} out of range for {n_nodes} nodes")]
    NodeIndex { index: usize, n_nodes: usize },

    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),

    #[error("graph has {found} edges, at least {required} are required")]
    TooFewEdges { found: usize, required: usize },

    #[error("requested {requested} non-edges but only {available} are available (short by {})", requested - available)]
    InsufficientNonEdges { requested: usize, available: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric undefined: need at least one positive and one negative (got {n_pos} / {n_neg})")]
    SingleClass { n_pos: usize, n_neg: usize },

    #[error("weighted prox did not converge after {iterations} Newton iterations (residual {residual:e})")]
    ProxNonConvergence { iterations: usize, residual: f64 },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("forward cache does not match the parameters passed to backward")]
    StaleCache,

    #[error("no model satisfies |C*| <= {theta}; closest admissible size was {closest}")]
    Infeasible { theta: usize, closest: usize },

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

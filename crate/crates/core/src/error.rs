use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty graph")]
    EmptyGraph,

    #[error("partition incomplete: node {0} has no community")]
    PartitionIncomplete(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("org tree cycle detected involving {0}")]
    OrgCycle(String),

    #[error("org tree has multiple roots: {}", .0.join(", "))]
    OrgMultipleRoots(Vec<String>),

    #[error("org tree invalid: {0}")]
    OrgInvalid(String),

    #[error("workgroup not resolvable in org tree")]
    WorkgroupNotResolvable,

    #[error("no fluidity signal for workgroup {0}")]
    NoFluiditySignal(usize),

    #[error("no org tree resolves any member of workgroup {0}")]
    NoFreedomSignal(usize),

    #[error("eigensolver failed to converge: {0}")]
    NoConvergence(String),

    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),

    #[error("layout produced non-finite positions after jitter retry")]
    NonFiniteLayout,

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("unresolved tags: {}", .0.join(", "))]
    UnresolvedTags(Vec<String>),

    #[error("missing media: {0}")]
    MissingMedia(String),

    #[error("unknown slide id in sequence: {0}")]
    UnknownSlide(String),

    #[error("malformed template: {0}")]
    Template(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

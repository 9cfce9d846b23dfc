use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a graph needs at least one node")]
    EmptyGraph,
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("node index {index} out of range for a graph with {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("unknown attribute `{0}`")]
    MissingAttribute(String),
    #[error("attribute `{0}` is not numeric")]
    NonNumericAttribute(String),
    #[error("attribute `{name}` has {got} values for {n} nodes")]
    AttributeLength { name: String, got: usize, n: usize },
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("logistic fit diverged: {0}")]
    SeparationDiverged(String),
    #[error("no convergence after {count} {unit}")]
    NonConvergence { count: usize, unit: &'static str },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("exact enumeration supports at most {max} nodes, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("MPLE on the observed network failed: {0}")]
    BaseFitFailed(Box<Error>),
    #[error("{failed} of {total} bootstrap replicates failed")]
    TooManyReplicateFailures { failed: usize, total: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("empty input")]
    EmptyInput,

    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of an estimator on otherwise valid input.
    pub fn is_estimation_failure(&self) -> bool {
        matches!(
            self,
            Error::SeparationDiverged(_)
                | Error::NonConvergence { .. }
                | Error::DegenerateSample(_)
                | Error::BaseFitFailed(_)
                | Error::TooManyReplicateFailures { .. }
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

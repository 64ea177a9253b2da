use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // graph
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("node `{0}` has an empty or inverted support interval")]
    InvalidSupport(String),
    #[error("more than {0} directed paths")]
    TooManyPaths(usize),
    #[error("invalid path: {0}")]
    PathInvalid(String),

    // interventions
    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),
    #[error("outcome `{0}` is not a binary variable")]
    OutcomeNotBinary(String),
    #[error("assignment for `{node}` is missing parent `{parent}`")]
    MissingParent { node: String, parent: String },

    // density estimation
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative log-likelihood is not finite")]
    NonFiniteLoss,
    #[error("gradient is not finite")]
    NonFiniteGradient,
    #[error("training diverged at epoch {0}")]
    Diverged(usize),
    #[error("insufficient data: {rows} rows, need at least {required}")]
    InsufficientData { rows: usize, required: usize },

    // actual causation / selection
    #[error("{0} mediators on the path; at most 12 are supported")]
    TooManyMediators(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    // discovery
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("stable undirected edge {0} -- {1} cannot be oriented by tiers")]
    UnresolvedUndirectedEdge(String, String),

    // data and config
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            InvalidConfig(_)
            | InvalidIntervention(_)
            | OutcomeNotBinary(_)
            | UnknownNode(_)
            | PathInvalid(_)
            | GridMismatch(_)
            | TooManyMediators(_) => 2,
            NonFiniteLoss | NonFiniteGradient | Diverged(_) | SingularCovariance => 4,
            _ => 3,
        }
    }
}

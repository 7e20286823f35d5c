use std::path::PathBuf;

/// Errors produced anywhere in the clustering pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("covariance matrix is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularCovariance { min_eigenvalue: f64 },
    #[error("neighborhood is empty")]
    EmptyNeighborhood,
    #[error("covariance matrix is zero")]
    ZeroCovariance,
    #[error("no surviving points to assign removed points to")]
    NoSurvivors,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("too few centers: found {found}, need at least {needed}")]
    TooFewCenters { found: usize, needed: usize },
    #[error("no center pairs closer than eps = {eps}")]
    NoPairsInRange { eps: f64 },
    #[error("too few rows for k-means: {rows} rows, {k} clusters")]
    TooFewRows { rows: usize, k: usize },
    #[error("node {0} has zero degree in the affinity graph")]
    IsolatedNode(usize),
    #[error("every point was removed by the intersection filter")]
    AllPointsRemoved,
    #[error("unknown dataset '{0}'")]
    UnknownDataset(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

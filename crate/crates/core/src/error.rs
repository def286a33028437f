use crate::instance::Problem;

/// Errors raised while building instances or running the solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("k = {k} is infeasible with {available} candidate centers")]
    InfeasibleK { k: usize, available: usize },

    #[error("operation requires a {expected} problem, got {actual}")]
    WrongProblem {
        expected: &'static str,
        actual: Problem,
    },

    #[error("center set is empty")]
    EmptyCenters,

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no candidate center outside the current solution")]
    EmptyCandidatePool,

    #[error("coordinates required: {0}")]
    CoordinatesRequired(&'static str),

    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

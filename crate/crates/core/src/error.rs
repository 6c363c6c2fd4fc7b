use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants fall into two families: input/validation problems (malformed
/// files, networks that violate a precondition) and numeric problems (a solver
/// that did not reach its tolerance). [`Error::is_numeric`] separates them so
/// front ends can map them onto distinct exit codes or status codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node {0} has no outgoing arcs")]
    DanglingNode(usize),

    #[error("node index {index} out of range for a network of {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("duplicate arc {tail}->{head}")]
    DuplicateArc { tail: usize, head: usize },

    #[error("arc {tail}->{head} does not exist")]
    MissingArc { tail: usize, head: usize },

    #[error("arc {tail}->{head} has non-positive capacity {capacity}")]
    InvalidCapacity { tail: usize, head: usize, capacity: f64 },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("network is not strongly connected")]
    NotStronglyConnected,

    #[error("transition matrix is not irreducible")]
    NotIrreducible,

    #[error("cloud augmentation did not produce a strongly connected network")]
    AugmentationFailed,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square")]
    NotSquare,

    #[error("matrix is not premagic: residual {0:e}")]
    NotPremagic(f64),

    #[error("flow matrix has no positive entry")]
    EmptyFlow,

    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("edge vector entry {index} is not positive ({value})")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("null space has dimension {0}, expected 1")]
    DegenerateNullSpace(usize),

    #[error("flow conservation violated: residual {0:e}")]
    ConservationViolated(f64),

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unit flow is identically zero")]
    ZeroUnitFlow,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("metadata declares {declared} {what} but {found} were found")]
    MetadataMismatch {
        what: &'static str,
        declared: usize,
        found: usize,
    },

    #[error("flow references unknown arc {from}->{to}")]
    UnknownArc { from: usize, to: usize },

    #[error("schema error at {path}: {reason}")]
    Schema { path: String, reason: String },

    #[error("no edit to undo")]
    EmptyHistory,

    #[error("edit {stage} rejected: {source}")]
    EditRejected { stage: usize, source: Box<Error> },
}

impl Error {
    /// True for failures of a numerical procedure rather than of its input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::SolverFailure(_)
            | Error::NoConvergence { .. }
            | Error::DegenerateNullSpace(_)
            | Error::ConservationViolated(_) => true,
            Error::EditRejected { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

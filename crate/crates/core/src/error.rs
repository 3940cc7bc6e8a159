use alloc::string::String;

/// Errors raised by the design pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("edge ({tail}, {head}) is out of range for a graph with {n} nodes")]
    EdgeOutOfRange { tail: usize, head: usize, n: usize },

    #[error("self-loop at node {0} (self-communication is implicit and must not be listed)")]
    SelfLoop(usize),

    #[error(
        "no strongly connected graph with n = {n}, p_edge = {p_edge} after {attempts} draws; \
         p_edge is too small for this n"
    )]
    ConnectivityNotReached { n: usize, p_edge: f64, attempts: usize },

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{which} system matrix is numerically singular (degenerate constraint set)")]
    SingularSystem { which: &'static str },

    #[error("unknown shift method `{0}`")]
    UnknownMethod(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point or parameter lies outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller-side precondition was violated.
    #[error("contract violation: {0}")]
    Contract(String),
    /// The metric or the graph degenerated at some node.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// A barrier or radius could not be constructed under the given constraints.
    #[error("construction error: {0}")]
    Construction(String),
    #[error("linear algebra error: {0}")]
    LinearAlgebra(String),
    /// An iterative method hit its iteration cap or step floor.
    #[error("no convergence: {0}")]
    NonConvergence(String),
    /// Field file could not be parsed.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

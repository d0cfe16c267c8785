//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by geometry, statistics, filtering and simulation code.
#[derive(Debug, Error)]
pub enum Error {
    /// The requested operation does not exist on this manifold
    /// (e.g. group composition on a sphere).
    #[error("operation `{operation}` is not supported on {manifold}")]
    UnsupportedOperation {
        manifold: String,
        operation: &'static str,
    },

    /// An input left the domain where a map is defined or numerically
    /// trustworthy (antipodal points, cut locus, chart boundary).
    #[error("out of domain: {context}")]
    OutOfDomain { context: String },

    /// A point or tangent vector failed a membership/tangency check or has
    /// the wrong representation.
    #[error("invalid input: {context}")]
    InvalidInput { context: String },

    /// A vector or matrix has the wrong size.
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// The innovation covariance could not be factorised.
    #[error("innovation covariance is singular")]
    SingularInnovation,

    /// A covariance was not positive (semi-)definite where required.
    #[error("degenerate covariance: {context}")]
    DegenerateCovariance { context: String },

    /// The fixed-point iteration for the exponential barycenter failed to
    /// converge.
    #[error("barycenter iteration did not converge within {iterations} iterations")]
    BarycenterDiverged { iterations: usize },

    /// A noise Jacobian required by the adaptation formulas is not square or
    /// not invertible.
    #[error("noise adaptation is not applicable: {context}")]
    AdaptationNotApplicable { context: String },

    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {context}")]
    InvalidConfig { context: String },

    /// A filter run aborted at the given step.
    #[error("filter aborted at step {step}: {source}")]
    FilterAborted {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// A simulation aborted at the given step.
    #[error("simulation aborted at step {step}: {source}")]
    SimulationAborted {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// File output failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn unsupported(manifold: impl Into<String>, operation: &'static str) -> Self {
        Error::UnsupportedOperation {
            manifold: manifold.into(),
            operation,
        }
    }

    pub(crate) fn out_of_domain(context: impl Into<String>) -> Self {
        Error::OutOfDomain {
            context: context.into(),
        }
    }

    pub(crate) fn invalid_input(context: impl Into<String>) -> Self {
        Error::InvalidInput {
            context: context.into(),
        }
    }
}

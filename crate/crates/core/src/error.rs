use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// One subdivision interval left unconverged by adaptive quadrature:
/// `(lower, upper, error estimate relative to the running integral)`.
pub type IntervalTrace = (f64, f64, f64);

/// One Newton iterate: `(iteration, log posterior, newton decrement)`.
pub type NewtonTrace = (usize, f64, f64);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("node {node} has no provider type; type mixing requires every node typed")]
    TypedAttributeMissing { node: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degree sum {sum} is odd, so no simple graph realizes it")]
    OddDegreeSum { sum: u64 },

    #[error("degree sequence is not graphical: Erdős–Gallai inequality fails at k = {index}")]
    NonGraphical { index: usize },

    #[error("adaptive quadrature did not converge: relative error {relative_error:.3e} after {intervals} intervals")]
    QuadratureNonConvergence {
        relative_error: f64,
        intervals: usize,
        trace: Vec<IntervalTrace>,
    },

    #[error("Newton ascent did not converge within {iterations} iterations")]
    Optimization {
        iterations: usize,
        trace: Vec<NewtonTrace>,
    },

    #[error("posterior is degenerate: {0}")]
    DegeneratePosterior(String),

    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),

    #[error("none of the {samples} sequential constructions completed")]
    NoValidSamples { samples: u64 },
}

impl Error {
    /// Short machine-readable tag, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TypedAttributeMissing { .. } => "typed_attribute_missing",
            Error::InvalidGraph(_) => "invalid_graph",
            Error::Domain(_) => "domain",
            Error::OddDegreeSum { .. } | Error::NonGraphical { .. } => "non_graphical",
            Error::QuadratureNonConvergence { .. } => "quadrature_non_convergence",
            Error::Optimization { .. } => "optimization",
            Error::DegeneratePosterior(_) => "degenerate_posterior",
            Error::DegeneratePrior(_) => "degenerate_prior",
            Error::NoValidSamples { .. } => "no_valid_samples",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

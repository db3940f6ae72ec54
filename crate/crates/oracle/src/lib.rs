//! Slow reference computations for checking `ccm-core`: exhaustive
//! enumeration of every labeled graph on up to 8 vertices, fine-grid
//! evidence integrals for graphs on up to 6 vertices, and a large-sample
//! importance-sampling estimate of the degree-mixing integral.
//!
//! Statistics and integrands are recomputed here from scratch rather than
//! through the production code paths they are used to check.

mod enumerate;
mod evidence;
mod m5;

pub use enumerate::{class_table, oracle_enumerate, statistic_of_mask, GraphMasks};
pub use evidence::{oracle_evidence, OracleEvidence};
pub use m5::{oracle_m5_log_integral, oracle_m5_log_likelihood};

use ccm_core::LogValue;

/// Largest vertex count for exhaustive enumeration.
pub const MAX_ENUMERATION_N: usize = 8;
/// Largest vertex count for oracle evidence.
pub const MAX_EVIDENCE_N: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle refuses n = {n}: limit is {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("oracle does not support {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Core(#[from] ccm_core::Error),
}

/// A reference value with its error bound and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub quantity: String,
    pub exact_or_estimate: LogValue,
    /// Zero for exhaustive enumeration.
    pub error_bound: f64,
    /// Graphs visited or integrand evaluations.
    pub cost: u64,
}

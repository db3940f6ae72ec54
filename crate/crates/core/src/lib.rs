//! Bayesian model selection among congruence class models (CCMs) of networks.
//!
//! A CCM assigns a probability to a graph through a statistic map `phi` and a
//! distribution over statistic values; every graph in the same congruence
//! class `{g : phi(g) = x}` receives the same share of that mass. The model
//! evidence therefore factors into a parameter integral divided by the size
//! of the congruence class (the *volume factor*):
//!
//! ```text
//! log p(g | m) = log ∫ P_phi(phi(g) | theta) p(theta | m) dtheta  -  log |c_phi(phi(g))|
//! ```
//!
//! This crate is `no_std` (with `alloc`). It holds the graph representation and
//! statistics, volume-factor computation (closed forms, exact small-graph
//! enumeration and sequential importance sampling), the evidence integrals
//! for the five models, leave-one-out prior fits and synthetic network
//! generators. File formats, the command-line tool and threading live in the
//! `ccm-select` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod enumeration;
pub mod error;
pub mod evidence;
pub mod graph;
pub mod linalg;
pub mod logvalue;
pub mod math;
pub mod prior_fit;
pub mod quadrature;
pub mod simulate;
pub mod statistics;

pub use enumeration::{SamplingConfig, VolumeEstimate, VolumeMethod, VolumePlan};
pub use error::{Error, Result};
pub use simulate::{sample_network, Mechanism, SimConfig};
pub use evidence::{EvidenceMethod, EvidenceResult, ModelId, ModelPrior, ModelSpec};
pub use graph::{Graph, NodeType};
pub use logvalue::LogValue;
pub use statistics::{
    compute_statistic, DegreeDistribution, DegreeMixing, StatisticKind, StatisticValue, TypeMixing,
};

//! Volume factors `ln |c_phi(x)|`: how many labeled graphs share a statistic
//! value.
//!
//! Edge-count and type-mixing classes have closed forms. Degree-sequence,
//! degree-distribution and degree-mixing classes are counted exactly for
//! small `n` and estimated by sequential importance sampling otherwise.
//! Sampling is split into a [`SamplingJob`] so callers can run workers on
//! their own threads; [`SamplingJob::run`] runs them serially.

pub mod closed;
pub mod exact;
pub mod graphical;
mod sis;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use closed::{log_volume_edges, log_volume_type_mixing, type_block_capacities};
pub use exact::{count_degree_sequence, count_degree_sequence_with_mixing};
pub use graphical::{check_graphical, is_graphical};
pub use sis::{SisProblem, WeightAccumulator, Workspace};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::logvalue::LogValue;
use crate::math::ln_multinomial;
use crate::statistics::{DegreeDistribution, DegreeMixing, StatisticValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VolumeMethod {
    Exact,
    ImportanceSampling,
    Oracle,
}

/// A volume factor with its standard error on the natural-log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub log_count: LogValue,
    /// Zero for exact methods.
    pub std_error_log: f64,
    pub method: VolumeMethod,
    pub samples: u64,
}

impl VolumeEstimate {
    pub fn exact(log_count: LogValue, method: VolumeMethod) -> Self {
        Self { log_count, std_error_log: 0.0, method, samples: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub samples: u64,
    pub seed: u64,
    /// Number of independent random streams; the estimate depends on
    /// `(seed, workers)` but not on how streams are scheduled.
    pub workers: u32,
    /// Largest `n` counted exactly instead of sampled.
    pub oracle_limit: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { samples: 1000, seed: 0, workers: 1, oracle_limit: 8 }
    }
}

impl SamplingConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Samples drawn by `worker`: an even split, remainder to the first workers.
    pub fn samples_for_worker(&self, worker: u32) -> u64 {
        let w = self.workers as u64;
        self.samples / w + u64::from((worker as u64) < self.samples % w)
    }
}

/// Importance-sampling work for one volume factor.
#[derive(Debug, Clone)]
pub struct SamplingJob {
    problem: SisProblem,
    /// Added to the log mean weight (labelings of the representative sequence).
    log_prefactor: f64,
    config: SamplingConfig,
}

impl SamplingJob {
    pub fn config(&self) -> &SamplingConfig {
        &self.config
    }

    pub fn problem(&self) -> &SisProblem {
        &self.problem
    }

    /// Runs stream `worker`. Independent of every other worker.
    pub fn run_worker(&self, worker: u32) -> WeightAccumulator {
        self.problem.run(self.config.samples_for_worker(worker), self.config.seed, worker as u64)
    }

    /// Merges per-worker results in worker order.
    pub fn finish(&self, parts: &[WeightAccumulator]) -> Result<VolumeEstimate> {
        let mut acc = WeightAccumulator::default();
        for p in parts {
            acc.merge(p);
        }
        if acc.completed == 0 {
            return Err(Error::NoValidSamples { samples: acc.samples });
        }
        Ok(VolumeEstimate {
            log_count: LogValue::ln_unchecked(self.log_prefactor + acc.log_mean()),
            std_error_log: acc.relative_standard_error(),
            method: VolumeMethod::ImportanceSampling,
            samples: acc.samples,
        })
    }

    pub fn run(&self) -> Result<VolumeEstimate> {
        let parts: Vec<_> = (0..self.config.workers).map(|w| self.run_worker(w)).collect();
        self.finish(&parts)
    }
}

/// Either a finished volume factor or sampling work still to run.
#[derive(Debug, Clone)]
pub enum VolumePlan {
    Ready(VolumeEstimate),
    Sample(SamplingJob),
}

impl VolumePlan {
    pub fn run(self) -> Result<VolumeEstimate> {
        match self {
            VolumePlan::Ready(v) => Ok(v),
            VolumePlan::Sample(job) => job.run(),
        }
    }
}

fn check_config(config: &SamplingConfig) -> Result<()> {
    if config.workers == 0 {
        return Err(Error::domain("workers must be at least 1"));
    }
    if config.samples < 2 || config.samples < config.workers as u64 {
        return Err(Error::domain(format!(
            "{} samples over {} workers: need at least 2 samples and one per worker",
            config.samples, config.workers
        )));
    }
    Ok(())
}

fn sampling(problem: SisProblem, log_prefactor: f64, config: &SamplingConfig) -> Result<VolumePlan> {
    check_config(config)?;
    Ok(VolumePlan::Sample(SamplingJob { problem, log_prefactor, config: *config }))
}

pub fn plan_degree_sequence(degrees: &[u32], config: &SamplingConfig) -> Result<VolumePlan> {
    check_graphical(degrees)?;
    if degrees.len() <= config.oracle_limit {
        let count = count_degree_sequence(degrees);
        return Ok(VolumePlan::Ready(VolumeEstimate::exact(LogValue::from_count(count), VolumeMethod::Oracle)));
    }
    sampling(SisProblem::degree_sequence(degrees.to_vec())?, 0.0, config)
}

/// Graphs realizing exactly the sequence `degrees` (vertex `i` has degree `d_i`).
pub fn log_volume_degree_sequence(degrees: &[u32], config: &SamplingConfig) -> Result<VolumeEstimate> {
    plan_degree_sequence(degrees, config)?.run()
}

fn check_distribution(dist: &DegreeDistribution) -> Result<Vec<u32>> {
    let n = dist.node_count();
    if n == 0 {
        return Err(Error::domain("degree distribution has no vertices"));
    }
    let sequence = dist.representative_sequence();
    check_graphical(&sequence)?;
    Ok(sequence)
}

/// `ln(n! / prod_k D[k]!)` plus the volume of one representative sequence.
pub fn plan_degree_distribution(dist: &DegreeDistribution, config: &SamplingConfig) -> Result<VolumePlan> {
    let sequence = check_distribution(dist)?;
    let prefactor = ln_multinomial(dist.counts().iter().copied());
    match plan_degree_sequence(&sequence, config)? {
        VolumePlan::Ready(v) => Ok(VolumePlan::Ready(VolumeEstimate {
            log_count: LogValue::ln_unchecked(prefactor + v.log_count.ln()),
            ..v
        })),
        VolumePlan::Sample(mut job) => {
            job.log_prefactor = prefactor;
            Ok(VolumePlan::Sample(job))
        }
    }
}

pub fn log_volume_degree_distribution(dist: &DegreeDistribution, config: &SamplingConfig) -> Result<VolumeEstimate> {
    plan_degree_distribution(dist, config)?.run()
}

/// Graphs on `n` vertices whose degree mixing matrix is `dmm`. The degree
/// distribution follows from the matrix, vertices it does not cover being
/// isolated.
pub fn plan_degree_mixing(dmm: &DegreeMixing, n: u64, config: &SamplingConfig) -> Result<VolumePlan> {
    let dist = dmm.implied_degree_distribution(n)?;
    let sequence = check_distribution(&dist)?;
    let prefactor = ln_multinomial(dist.counts().iter().copied());
    if sequence.len() <= config.oracle_limit {
        let count = count_degree_sequence_with_mixing(&sequence, dmm);
        if count == 0 {
            return Err(Error::domain("no graph realizes this degree mixing matrix"));
        }
        let log_count = LogValue::ln_unchecked(prefactor + LogValue::from_count(count).ln());
        return Ok(VolumePlan::Ready(VolumeEstimate::exact(log_count, VolumeMethod::Oracle)));
    }
    sampling(SisProblem::with_mixing(sequence, dmm)?, prefactor, config)
}

pub fn log_volume_degree_mixing(dmm: &DegreeMixing, n: u64, config: &SamplingConfig) -> Result<VolumeEstimate> {
    plan_degree_mixing(dmm, n, config)?.run()
}

/// Volume plan for a statistic value observed on a graph with `n` vertices
/// and the given type counts `(primary, specialty)`.
pub fn plan_for_statistic(
    value: &StatisticValue,
    n: u64,
    type_counts: (u64, u64),
    config: &SamplingConfig,
) -> Result<VolumePlan> {
    match value {
        StatisticValue::EdgeCount(m) => log_volume_edges(n, *m).map(VolumePlan::Ready),
        StatisticValue::TypeMixing(t) => log_volume_type_mixing(
            type_counts.0,
            type_counts.1,
            t.primary_primary,
            t.primary_specialty,
            t.specialty_specialty,
        )
        .map(VolumePlan::Ready),
        StatisticValue::DegreeDistribution(d) => {
            if d.node_count() != n {
                return Err(Error::domain(format!(
                    "degree distribution covers {} vertices, graph has {n}",
                    d.node_count()
                )));
            }
            plan_degree_distribution(d, config)
        }
        StatisticValue::DegreeMixing(dmm) => plan_degree_mixing(dmm, n, config),
    }
}

/// Volume plan for statistic `value` computed from `g`.
pub fn plan_for_graph(g: &Graph, value: &StatisticValue, config: &SamplingConfig) -> Result<VolumePlan> {
    let (p, s, _) = g.type_counts();
    plan_for_statistic(value, g.node_count() as u64, (p as u64, s as u64), config)
}

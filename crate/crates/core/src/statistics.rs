//! The four network statistics used by the models: edge count, degree
//! distribution, provider-type mixing and degree mixing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    EdgeCount,
    DegreeDistribution,
    TypeMixing,
    DegreeMixing,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 4] = [
        StatisticKind::EdgeCount,
        StatisticKind::DegreeDistribution,
        StatisticKind::TypeMixing,
        StatisticKind::DegreeMixing,
    ];

    /// Short names used on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            StatisticKind::EdgeCount => "edges",
            StatisticKind::DegreeDistribution => "degdist",
            StatisticKind::TypeMixing => "typemix",
            StatisticKind::DegreeMixing => "degmix",
        }
    }

    pub fn from_short_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.short_name() == name)
    }
}

/// `D[k]` = number of vertices of degree `k`. Stored densely from degree 0 up
/// to the maximum degree with a nonzero count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DegreeDistribution {
    counts: Vec<u64>,
}

impl DegreeDistribution {
    /// Trailing zero counts are dropped. An all-zero input is rejected.
    pub fn from_counts(mut counts: Vec<u64>) -> Result<Self> {
        while counts.last() == Some(&0) {
            counts.pop();
        }
        if counts.is_empty() {
            return Err(Error::domain("degree distribution has no vertices"));
        }
        Ok(Self { counts })
    }

    pub fn from_degrees(degrees: &[u32]) -> Result<Self> {
        let max = degrees.iter().copied().max().unwrap_or(0) as usize;
        let mut counts = vec![0u64; max + 1];
        for &d in degrees {
            counts[d as usize] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn node_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn degree_sum(&self) -> u64 {
        self.counts.iter().enumerate().map(|(k, &c)| k as u64 * c).sum()
    }

    /// `(degree, count)` for every degree with a nonzero count.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(k, &c)| (k, c))
    }

    /// A degree sequence realizing this distribution, in nonincreasing order.
    pub fn representative_sequence(&self) -> Vec<u32> {
        let mut seq = Vec::with_capacity(self.node_count() as usize);
        for (k, &c) in self.counts.iter().enumerate().rev() {
            seq.extend(core::iter::repeat(k as u32).take(c as usize));
        }
        seq
    }
}

/// Edge counts between provider types: the symmetric 2x2 mixing matrix
/// over {primary, specialty}.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeMixing {
    pub primary_primary: u64,
    pub primary_specialty: u64,
    pub specialty_specialty: u64,
}

impl TypeMixing {
    pub fn total(&self) -> u64 {
        self.primary_primary + self.primary_specialty + self.specialty_specialty
    }

    pub fn matrix(&self) -> [[u64; 2]; 2] {
        [
            [self.primary_primary, self.primary_specialty],
            [self.primary_specialty, self.specialty_specialty],
        ]
    }
}

/// Degree mixing matrix: `DMM[k, l]` = number of edges joining a degree-`k`
/// and a degree-`l` vertex, each edge counted once. Stored sparsely with
/// `k <= l`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DegreeMixing {
    cells: BTreeMap<(u32, u32), u64>,
}

impl DegreeMixing {
    /// Accepts cells in either orientation; repeated cells are summed and
    /// zero cells dropped.
    pub fn from_cells(cells: impl IntoIterator<Item = ((u32, u32), u64)>) -> Self {
        let mut map = BTreeMap::new();
        for ((k, l), c) in cells {
            if c == 0 {
                continue;
            }
            let key = if k <= l { (k, l) } else { (l, k) };
            *map.entry(key).or_insert(0) += c;
        }
        Self { cells: map }
    }

    pub fn get(&self, k: u32, l: u32) -> u64 {
        let key = if k <= l { (k, l) } else { (l, k) };
        self.cells.get(&key).copied().unwrap_or(0)
    }

    /// Nonzero cells `((k, l), count)` with `k <= l`, in key order.
    pub fn cells(&self) -> impl Iterator<Item = ((u32, u32), u64)> + '_ {
        self.cells.iter().map(|(&k, &c)| (k, c))
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn total_edges(&self) -> u64 {
        self.cells.values().sum()
    }

    /// Number of edge endpoints at degree-`k` vertices, for each `k`.
    pub fn endpoint_counts(&self) -> BTreeMap<u32, u64> {
        let mut out = BTreeMap::new();
        for (&(k, l), &c) in &self.cells {
            *out.entry(k).or_insert(0) += c;
            *out.entry(l).or_insert(0) += c;
        }
        out
    }

    /// Recovers the degree distribution on `n` vertices from the endpoint
    /// identity `sum_l DMM[k, l] + DMM[k, k] = k * D[k]`; vertices not covered
    /// are isolated.
    pub fn implied_degree_distribution(&self, n: u64) -> Result<DegreeDistribution> {
        let endpoints = self.endpoint_counts();
        if endpoints.contains_key(&0) {
            return Err(Error::domain("degree mixing has a cell at degree 0"));
        }
        let max = endpoints.keys().next_back().copied().unwrap_or(0) as usize;
        let mut counts = vec![0u64; max + 1];
        let mut covered = 0u64;
        for (&k, &e) in &endpoints {
            if e % k as u64 != 0 {
                return Err(Error::domain(format!(
                    "{e} endpoints at degree {k} is not a multiple of {k}"
                )));
            }
            counts[k as usize] = e / k as u64;
            covered += e / k as u64;
        }
        if covered > n {
            return Err(Error::domain(format!(
                "degree mixing implies {covered} non-isolated vertices but n = {n}"
            )));
        }
        counts[0] = n - covered;
        DegreeDistribution::from_counts(counts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StatisticValue {
    EdgeCount(u64),
    DegreeDistribution(DegreeDistribution),
    TypeMixing(TypeMixing),
    DegreeMixing(DegreeMixing),
}

impl StatisticValue {
    pub fn kind(&self) -> StatisticKind {
        match self {
            StatisticValue::EdgeCount(_) => StatisticKind::EdgeCount,
            StatisticValue::DegreeDistribution(_) => StatisticKind::DegreeDistribution,
            StatisticValue::TypeMixing(_) => StatisticKind::TypeMixing,
            StatisticValue::DegreeMixing(_) => StatisticKind::DegreeMixing,
        }
    }
}

pub fn degree_distribution(g: &Graph) -> DegreeDistribution {
    DegreeDistribution::from_degrees(&g.degrees()).expect("a graph has at least one node")
}

pub fn type_mixing(g: &Graph) -> Result<TypeMixing> {
    if let Some(node) = g.node_types().iter().position(|&t| t == NodeType::Untyped) {
        return Err(Error::TypedAttributeMissing { node });
    }
    let mut mm = TypeMixing::default();
    for &(i, j) in g.edges() {
        match (g.node_type(i as usize), g.node_type(j as usize)) {
            (NodeType::Primary, NodeType::Primary) => mm.primary_primary += 1,
            (NodeType::Specialty, NodeType::Specialty) => mm.specialty_specialty += 1,
            _ => mm.primary_specialty += 1,
        }
    }
    Ok(mm)
}

pub fn degree_mixing(g: &Graph) -> DegreeMixing {
    let degrees = g.degrees();
    DegreeMixing::from_cells(
        g.edges().iter().map(|&(i, j)| ((degrees[i as usize], degrees[j as usize]), 1)),
    )
}

/// Exact value of the requested statistic.
pub fn compute_statistic(g: &Graph, kind: StatisticKind) -> Result<StatisticValue> {
    Ok(match kind {
        StatisticKind::EdgeCount => StatisticValue::EdgeCount(g.edge_count() as u64),
        StatisticKind::DegreeDistribution => StatisticValue::DegreeDistribution(degree_distribution(g)),
        StatisticKind::TypeMixing => StatisticValue::TypeMixing(type_mixing(g)?),
        StatisticKind::DegreeMixing => StatisticValue::DegreeMixing(degree_mixing(g)),
    })
}

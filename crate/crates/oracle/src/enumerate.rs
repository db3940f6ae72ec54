use std::collections::BTreeMap;

use ccm_core::statistics::{DegreeDistribution, DegreeMixing, StatisticKind, StatisticValue, TypeMixing};
use ccm_core::{LogValue, NodeType};

use crate::{OracleError, OracleReport, MAX_ENUMERATION_N};

/// Every labeled graph on `n` vertices as a bit mask over the pairs
/// `(i, j)`, `i < j`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct GraphMasks {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl GraphMasks {
    pub fn new(n: usize) -> Result<Self, OracleError> {
        if n == 0 || n > MAX_ENUMERATION_N {
            return Err(OracleError::TooLarge { n, limit: MAX_ENUMERATION_N });
        }
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Ok(Self { n, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn count(&self) -> u64 {
        1u64 << self.pairs.len()
    }

    pub fn edges(&self, mask: u64) -> Vec<(usize, usize)> {
        self.pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p).collect()
    }
}

/// The statistic of the graph `mask`, computed directly from its pairs.
pub fn statistic_of_mask(
    masks: &GraphMasks,
    mask: u64,
    kind: StatisticKind,
    types: Option<&[NodeType]>,
) -> Result<StatisticValue, OracleError> {
    let n = masks.n();
    let mut degree = vec![0u32; n];
    let mut edge_count = 0u64;
    for (b, &(i, j)) in masks.pairs().iter().enumerate() {
        if mask >> b & 1 == 1 {
            degree[i] += 1;
            degree[j] += 1;
            edge_count += 1;
        }
    }
    Ok(match kind {
        StatisticKind::EdgeCount => StatisticValue::EdgeCount(edge_count),
        StatisticKind::DegreeDistribution => {
            let mut counts = vec![0u64; n];
            for &d in &degree {
                counts[d as usize] += 1;
            }
            StatisticValue::DegreeDistribution(DegreeDistribution::from_counts(counts)?)
        }
        StatisticKind::TypeMixing => {
            let types = types.ok_or(OracleError::Unsupported("type mixing without node types"))?;
            if types.len() != n || types.contains(&NodeType::Untyped) {
                return Err(OracleError::Unsupported("type mixing with untyped vertices"));
            }
            let mut block = [0u64; 3];
            for (b, &(i, j)) in masks.pairs().iter().enumerate() {
                if mask >> b & 1 == 1 {
                    let primaries = (types[i] == NodeType::Primary) as usize + (types[j] == NodeType::Primary) as usize;
                    block[2 - primaries] += 1;
                }
            }
            StatisticValue::TypeMixing(TypeMixing {
                primary_primary: block[0],
                primary_specialty: block[1],
                specialty_specialty: block[2],
            })
        }
        StatisticKind::DegreeMixing => {
            let mut cells = BTreeMap::new();
            for (b, &(i, j)) in masks.pairs().iter().enumerate() {
                if mask >> b & 1 == 1 {
                    let (k, l) = (degree[i].min(degree[j]), degree[i].max(degree[j]));
                    *cells.entry((k, l)).or_insert(0u64) += 1;
                }
            }
            StatisticValue::DegreeMixing(DegreeMixing::from_cells(cells))
        }
    })
}

/// Class sizes `|{g : phi(g) = x}|` for every value `x` realized on `n`
/// vertices.
pub fn class_table(
    n: usize,
    kind: StatisticKind,
    types: Option<&[NodeType]>,
) -> Result<BTreeMap<StatisticValue, u128>, OracleError> {
    let masks = GraphMasks::new(n)?;
    let mut table = BTreeMap::new();
    for mask in 0..masks.count() {
        *table.entry(statistic_of_mask(&masks, mask, kind, types)?).or_insert(0u128) += 1;
    }
    Ok(table)
}

/// Exact size of the class of `x` on `n` vertices.
pub fn oracle_enumerate(
    n: usize,
    x: &StatisticValue,
    types: Option<&[NodeType]>,
) -> Result<OracleReport, OracleError> {
    let masks = GraphMasks::new(n)?;
    let mut count = 0u128;
    for mask in 0..masks.count() {
        if &statistic_of_mask(&masks, mask, x.kind(), types)? == x {
            count += 1;
        }
    }
    Ok(OracleReport {
        quantity: format!("class size of {x:?} on {n} vertices"),
        exact_or_estimate: LogValue::from_count(count),
        error_bound: 0.0,
        cost: masks.count(),
    })
}

//! Exact counts of labeled graphs with a prescribed degree sequence, and
//! optionally a prescribed degree mixing matrix, by backtracking over the
//! neighbor sets of vertices in index order. Only practical for small `n`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::statistics::DegreeMixing;

struct Backtrack<'a> {
    residual: Vec<u32>,
    class: &'a [u32],
    /// Remaining degree-mixing budget per `(k, l)` with `k <= l`, if constrained.
    budget: Option<BTreeMap<(u32, u32), u64>>,
}

impl Backtrack<'_> {
    fn key(&self, u: usize, v: usize) -> (u32, u32) {
        let (a, b) = (self.class[u], self.class[v]);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn vertex(&mut self, v: usize) -> u128 {
        let n = self.residual.len();
        if v == n {
            return 1;
        }
        let need = core::mem::replace(&mut self.residual[v], 0);
        let count = self.place(v, v + 1, need);
        self.residual[v] = need;
        count
    }

    fn place(&mut self, v: usize, start: usize, need: u32) -> u128 {
        if need == 0 {
            return self.vertex(v + 1);
        }
        let n = self.residual.len();
        let mut total = 0;
        for u in start..n {
            if n - u < need as usize {
                break;
            }
            if self.residual[u] == 0 {
                continue;
            }
            let key = self.key(v, u);
            if let Some(budget) = self.budget.as_mut() {
                match budget.get_mut(&key) {
                    Some(b) if *b > 0 => *b -= 1,
                    _ => continue,
                }
            }
            self.residual[u] -= 1;
            total += self.place(v, u + 1, need - 1);
            self.residual[u] += 1;
            if let Some(budget) = self.budget.as_mut() {
                *budget.get_mut(&key).expect("budget key present") += 1;
            }
        }
        total
    }
}

/// Number of labeled simple graphs with exactly this degree sequence.
pub fn count_degree_sequence(degrees: &[u32]) -> u128 {
    let mut bt = Backtrack { residual: degrees.to_vec(), class: degrees, budget: None };
    bt.vertex(0)
}

/// Number of labeled simple graphs with this degree sequence whose degree
/// mixing matrix equals `dmm`.
pub fn count_degree_sequence_with_mixing(degrees: &[u32], dmm: &DegreeMixing) -> u128 {
    let budget = dmm.cells().collect();
    let mut bt = Backtrack { residual: degrees.to_vec(), class: degrees, budget: Some(budget) };
    bt.vertex(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_countable_classes() {
        assert_eq!(count_degree_sequence(&[1, 1, 0]), 1);
        assert_eq!(count_degree_sequence(&[1, 1, 1, 1]), 3);
        assert_eq!(count_degree_sequence(&[2, 2, 2, 2, 2]), 12);
        assert_eq!(count_degree_sequence(&[2, 2, 2]), 1);
        assert_eq!(count_degree_sequence(&[3, 1, 1]), 0);
        assert_eq!(count_degree_sequence(&[0]), 1);
    }

    #[test]
    fn mixing_constrained_counts() {
        // Paths a-b-c with the centre fixed: one graph.
        let dmm = DegreeMixing::from_cells([((1, 2), 2)]);
        assert_eq!(count_degree_sequence_with_mixing(&[2, 1, 1], &dmm), 1);
        // (2,2,1,1) is realized only by the two paths 2-0-1-3 and 2-1-0-3,
        // both with DMM {(1,2):2, (2,2):1}.
        let dmm = DegreeMixing::from_cells([((1, 2), 2), ((2, 2), 1)]);
        assert_eq!(count_degree_sequence_with_mixing(&[2, 2, 1, 1], &dmm), 2);
        assert_eq!(count_degree_sequence(&[2, 2, 1, 1]), 2);
        let other = DegreeMixing::from_cells([((1, 2), 1), ((2, 2), 1), ((1, 1), 1)]);
        assert_eq!(count_degree_sequence_with_mixing(&[2, 2, 1, 1], &other), 0);
    }
}

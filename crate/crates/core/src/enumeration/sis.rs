//! Sequential importance sampling of graph constructions with a prescribed
//! degree sequence (optionally also a prescribed degree mixing matrix).
//!
//! A construction repeatedly takes the vertex with the smallest positive
//! residual degree (lowest index on ties) as the hub and connects it, one
//! edge at a time, to candidates chosen with probability proportional to
//! their residual degree. Candidates are restricted to those that keep the
//! residual problem realizable, so the pure degree-sequence sampler never
//! fails. The hub order is a function of the finished graph, so a graph with
//! hub residuals `r_1, r_2, ...` is produced by exactly `prod r_i!` edge
//! orderings, and
//!
//! ```text
//! w = 1 / (prod_i r_i! * P(construction))
//! ```
//!
//! is an unbiased estimate of the number of realizations. Each edge added
//! multiplies the running count ratio, the sequential form of
//! `|c(x_k)| = r(x_k, x_{k-1}) |c(x_{k-1})|`.
//!
//! Realizability while building hub `h` is a star-constrained problem: the
//! only existing edges among unfinished vertices join `h` to its chosen
//! neighbors. Such a residual sequence is realizable iff laying off the hub's
//! remaining stubs onto the largest-residual vertices it may still join leaves
//! a graphical sequence. Feasible candidates form an upper set in residual
//! degree, so the cut-off is found by bisection over distinct residual values.
//!
//! With a degree mixing target a construction can reach a dead end; it then
//! contributes weight zero, which keeps the estimator unbiased as long as no
//! completable prefix is ever pruned.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graphical::{check_graphical, histogram_is_graphical, HistogramScratch};
use crate::error::{Error, Result};
use crate::math::{ln, ln_add_exp, ln_factorial, sqrt, exp};
use crate::statistics::DegreeMixing;

#[derive(Debug, Clone)]
struct JointTarget {
    class_of: Vec<u32>,
    classes: usize,
    /// `classes x classes`, symmetric.
    budget: Vec<u64>,
}

/// A counting problem for the sampler.
#[derive(Debug, Clone)]
pub struct SisProblem {
    degrees: Vec<u32>,
    joint: Option<JointTarget>,
}

impl SisProblem {
    pub fn degree_sequence(degrees: Vec<u32>) -> Result<Self> {
        check_graphical(&degrees)?;
        Ok(Self { degrees, joint: None })
    }

    /// Degree sequence plus a degree mixing target over the original degrees.
    pub fn with_mixing(degrees: Vec<u32>, dmm: &DegreeMixing) -> Result<Self> {
        check_graphical(&degrees)?;
        let mut class_index = BTreeMap::new();
        let mut vertices_at = BTreeMap::new();
        for &d in &degrees {
            *vertices_at.entry(d).or_insert(0u64) += 1;
        }
        for (i, &d) in vertices_at.keys().enumerate() {
            class_index.insert(d, i);
        }
        let endpoints = dmm.endpoint_counts();
        for (&d, &count) in &vertices_at {
            let e = endpoints.get(&d).copied().unwrap_or(0);
            if e != d as u64 * count {
                return Err(Error::domain(format!(
                    "degree mixing has {e} endpoints at degree {d}, expected {}",
                    d as u64 * count
                )));
            }
        }
        let classes = class_index.len();
        let mut budget = vec![0u64; classes * classes];
        for ((k, l), c) in dmm.cells() {
            let (Some(&a), Some(&b)) = (class_index.get(&k), class_index.get(&l)) else {
                return Err(Error::domain(format!("degree mixing cell ({k}, {l}) has no vertices")));
            };
            budget[a * classes + b] = c;
            budget[b * classes + a] = c;
        }
        let class_of = degrees.iter().map(|d| class_index[d] as u32).collect();
        Ok(Self { degrees, joint: Some(JointTarget { class_of, classes, budget }) })
    }

    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    pub fn workspace(&self) -> Workspace {
        let n = self.degrees.len();
        let len = self.degrees.iter().copied().max().unwrap_or(0) as usize + 2;
        let classes = self.joint.as_ref().map_or(0, |j| j.classes);
        Workspace {
            residual: vec![0; n],
            mark: vec![0; n],
            epoch: 0,
            free: vec![0; len],
            forbidden: vec![0; len],
            trial: vec![0; len],
            moved: vec![0; len],
            distinct: Vec::new(),
            eg: HistogramScratch::default(),
            budget: vec![0; classes * classes],
            avail: vec![0; classes],
        }
    }

    /// Runs one construction. Returns the natural log of its importance
    /// weight, or `None` at a dead end. When `edges` is given it receives the
    /// constructed edge list (`i < j`).
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        ws: &mut Workspace,
        mut edges: Option<&mut Vec<(u32, u32)>>,
    ) -> Option<f64> {
        let n = self.degrees.len();
        ws.residual.copy_from_slice(&self.degrees);
        ws.mark.fill(0);
        ws.epoch = 0;
        if let Some(j) = &self.joint {
            ws.budget.copy_from_slice(&j.budget);
        }
        if let Some(e) = edges.as_deref_mut() {
            e.clear();
        }
        let mut log_w = 0.0;
        loop {
            let mut hub = usize::MAX;
            let mut best = u32::MAX;
            for (v, &r) in ws.residual.iter().enumerate() {
                if r > 0 && r < best {
                    best = r;
                    hub = v;
                }
            }
            if hub == usize::MAX {
                return Some(log_w);
            }
            log_w -= ln_factorial(best as u64);
            ws.epoch += 1;
            ws.mark[hub] = ws.epoch;
            ws.free.fill(0);
            ws.forbidden.fill(0);
            for v in 0..n {
                if v != hub && ws.residual[v] > 0 {
                    ws.free[ws.residual[v] as usize] += 1;
                }
            }
            while ws.residual[hub] > 0 {
                let threshold = self.threshold(hub, ws)?;
                let chosen = self.choose(hub, threshold, rng, ws)?;
                log_w += chosen.1;
                let v = chosen.0;
                if let Some(e) = edges.as_deref_mut() {
                    e.push(if hub < v { (hub as u32, v as u32) } else { (v as u32, hub as u32) });
                }
                ws.residual[hub] -= 1;
                let rv = ws.residual[v] as usize;
                ws.free[rv] -= 1;
                ws.residual[v] -= 1;
                if rv > 1 {
                    ws.forbidden[rv - 1] += 1;
                }
                ws.mark[v] = ws.epoch;
                if let Some(j) = &self.joint {
                    let (a, b) = (j.class_of[hub] as usize, j.class_of[v] as usize);
                    ws.budget[a * j.classes + b] -= 1;
                    if a != b {
                        ws.budget[b * j.classes + a] -= 1;
                    }
                }
            }
        }
    }

    /// Smallest residual degree a free candidate may have, or `None` if no
    /// candidate keeps the problem realizable.
    fn threshold(&self, hub: usize, ws: &mut Workspace) -> Option<u32> {
        ws.distinct.clear();
        for (x, &c) in ws.free.iter().enumerate().skip(1) {
            if c > 0 {
                ws.distinct.push(x as u32);
            }
        }
        let top = ws.distinct.len().checked_sub(1)?;
        if !Self::feasible_after(hub, ws.distinct[top], ws) {
            debug_assert!(self.joint.is_some(), "largest-residual candidate must be feasible");
            return None;
        }
        let (mut lo, mut hi) = (0, top);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if Self::feasible_after(hub, ws.distinct[mid], ws) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(ws.distinct[lo])
    }

    /// Whether joining the hub to a free vertex of residual `d` leaves a
    /// realizable star-constrained problem.
    fn feasible_after(hub: usize, d: u32, ws: &mut Workspace) -> bool {
        let d = d as usize;
        let len = ws.free.len();
        ws.trial.copy_from_slice(&ws.free);
        ws.moved.fill(0);
        ws.trial[d] -= 1;
        let mut remaining = ws.residual[hub] as u64 - 1;
        for x in (1..len).rev() {
            if remaining == 0 {
                break;
            }
            let take = ws.trial[x].min(remaining);
            ws.trial[x] -= take;
            ws.moved[x - 1] += take;
            remaining -= take;
        }
        if remaining > 0 {
            return false;
        }
        for x in 0..len {
            ws.trial[x] += ws.moved[x] + ws.forbidden[x];
        }
        if d > 1 {
            ws.trial[d - 1] += 1;
        }
        histogram_is_graphical(&ws.trial, &mut ws.eg)
    }

    /// Draws the next neighbor of the hub; returns it with the log of the
    /// inverse selection probability.
    fn choose<R: Rng + ?Sized>(
        &self,
        hub: usize,
        threshold: u32,
        rng: &mut R,
        ws: &mut Workspace,
    ) -> Option<(usize, f64)> {
        let n = self.degrees.len();
        let joint = match &self.joint {
            None => None,
            Some(j) => {
                let a = j.class_of[hub] as usize;
                ws.avail.fill(0);
                for v in 0..n {
                    if ws.is_free(v) {
                        ws.avail[j.class_of[v] as usize] += 1;
                    }
                }
                let row = &ws.budget[a * j.classes..(a + 1) * j.classes];
                let capacity: u64 = row.iter().zip(&ws.avail).map(|(&b, &av)| b.min(av)).sum();
                Some((j, a, capacity))
            }
        };
        let eligible = |ws: &Workspace, v: usize| -> bool {
            if v == hub || !ws.is_free(v) || ws.residual[v] < threshold {
                return false;
            }
            let Some((j, a, capacity)) = joint else { return true };
            let b = j.class_of[v] as usize;
            let budget = ws.budget[a * j.classes + b];
            if budget == 0 {
                return false;
            }
            // Edges the hub could still place after this one, at most one per
            // free vertex and within each class budget.
            let avail = ws.avail[b];
            let after = capacity - budget.min(avail) + (budget - 1).min(avail - 1);
            after >= ws.residual[hub] as u64 - 1
        };
        let mut total = 0u64;
        for v in 0..n {
            if eligible(ws, v) {
                total += ws.residual[v] as u64;
            }
        }
        if total == 0 {
            return None;
        }
        let mut u = rng.random_range(0..total);
        for v in 0..n {
            if eligible(ws, v) {
                let r = ws.residual[v] as u64;
                if u < r {
                    return Some((v, ln(total as f64) - ln(r as f64)));
                }
                u -= r;
            }
        }
        unreachable!("draw exceeded the eligible total")
    }

    /// Runs `samples` constructions from stream `stream` of `seed`.
    pub fn run(&self, samples: u64, seed: u64, stream: u64) -> WeightAccumulator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut ws = self.workspace();
        let mut acc = WeightAccumulator::default();
        for _ in 0..samples {
            acc.push(self.sample(&mut rng, &mut ws, None));
        }
        acc
    }
}

/// Scratch buffers for [`SisProblem::sample`], reusable across samples.
#[derive(Debug, Clone)]
pub struct Workspace {
    residual: Vec<u32>,
    mark: Vec<u32>,
    epoch: u32,
    free: Vec<u64>,
    forbidden: Vec<u64>,
    trial: Vec<u64>,
    moved: Vec<u64>,
    distinct: Vec<u32>,
    eg: HistogramScratch,
    budget: Vec<u64>,
    avail: Vec<u64>,
}

impl Workspace {
    fn is_free(&self, v: usize) -> bool {
        self.mark[v] != self.epoch && self.residual[v] > 0
    }
}

/// Log-domain running sums of importance weights and their squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightAccumulator {
    pub samples: u64,
    pub completed: u64,
    log_sum: f64,
    log_sum_sq: f64,
}

impl Default for WeightAccumulator {
    fn default() -> Self {
        Self { samples: 0, completed: 0, log_sum: f64::NEG_INFINITY, log_sum_sq: f64::NEG_INFINITY }
    }
}

impl WeightAccumulator {
    pub fn push(&mut self, log_weight: Option<f64>) {
        self.samples += 1;
        if let Some(lw) = log_weight {
            self.completed += 1;
            self.log_sum = ln_add_exp(self.log_sum, lw);
            self.log_sum_sq = ln_add_exp(self.log_sum_sq, 2.0 * lw);
        }
    }

    pub fn merge(&mut self, other: &WeightAccumulator) {
        self.samples += other.samples;
        self.completed += other.completed;
        self.log_sum = ln_add_exp(self.log_sum, other.log_sum);
        self.log_sum_sq = ln_add_exp(self.log_sum_sq, other.log_sum_sq);
    }

    /// `ln` of the sample mean weight (dead ends count as zero weight).
    pub fn log_mean(&self) -> f64 {
        self.log_sum - ln(self.samples as f64)
    }

    /// Standard error of the mean divided by the mean, i.e. the standard
    /// error on the log scale by the delta method.
    pub fn relative_standard_error(&self) -> f64 {
        let n = self.samples as f64;
        if self.samples < 2 || self.completed == 0 {
            return f64::INFINITY;
        }
        let ratio = exp(self.log_sum_sq + ln(n) - 2.0 * self.log_sum);
        sqrt(((ratio - 1.0) / (n - 1.0)).max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::exact::{count_degree_sequence, count_degree_sequence_with_mixing};
    use crate::statistics::DegreeMixing;
    use proptest::prelude::*;

    /// Candidate degrees that keep the problem feasible, testing each distinct
    /// value directly instead of bisecting.
    fn exhaustive_allowed(hub: usize, ws: &mut Workspace) -> Vec<u32> {
        let values: Vec<u32> =
            (1..ws.free.len()).filter(|&x| ws.free[x] > 0).map(|x| x as u32).collect();
        values.into_iter().filter(|&d| SisProblem::feasible_after(hub, d, ws)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        /// The allowed set is an upper set in residual degree at every step
        /// of random constructions.
        #[test]
        fn feasible_candidates_form_an_upper_set(
            raw in proptest::collection::vec(0u32..7, 2..12),
            seed in 0u64..1000,
        ) {
            let n = raw.len() as u32;
            let mut d: Vec<u32> = raw.iter().map(|&x| x.min(n - 1)).collect();
            if d.iter().sum::<u32>() % 2 == 1 { d[0] = if d[0] > 0 { d[0] - 1 } else { 1 }; }
            prop_assume!(crate::enumeration::graphical::is_graphical(&d));
            let problem = SisProblem::degree_sequence(d.clone()).unwrap();
            let mut ws = problem.workspace();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ws.residual.copy_from_slice(&d);
            loop {
                let hub = (0..d.len()).filter(|&v| ws.residual[v] > 0).min_by_key(|&v| ws.residual[v]);
                let Some(hub) = hub else { break };
                ws.epoch += 1;
                ws.mark[hub] = ws.epoch;
                ws.free.fill(0);
                ws.forbidden.fill(0);
                for v in 0..d.len() {
                    if v != hub && ws.residual[v] > 0 { ws.free[ws.residual[v] as usize] += 1; }
                }
                while ws.residual[hub] > 0 {
                    let allowed = exhaustive_allowed(hub, &mut ws);
                    prop_assert!(!allowed.is_empty());
                    let thr = problem.threshold(hub, &mut ws).unwrap();
                    let max = *ws.distinct.last().unwrap();
                    let expected: Vec<u32> = ws.distinct.iter().copied().filter(|&x| x >= thr && x <= max).collect();
                    prop_assert_eq!(allowed, expected);
                    let (v, _) = problem.choose(hub, thr, &mut rng, &mut ws).unwrap();
                    ws.residual[hub] -= 1;
                    let rv = ws.residual[v] as usize;
                    ws.free[rv] -= 1;
                    ws.residual[v] -= 1;
                    if rv > 1 { ws.forbidden[rv - 1] += 1; }
                    ws.mark[v] = ws.epoch;
                }
            }
        }
    }

    #[test]
    fn constructions_realize_the_sequence() {
        let d = vec![3, 3, 2, 2, 2, 1, 1];
        let problem = SisProblem::degree_sequence(d.clone()).unwrap();
        let mut ws = problem.workspace();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut edges = Vec::new();
        for _ in 0..200 {
            problem.sample(&mut rng, &mut ws, Some(&mut edges)).unwrap();
            let g = crate::graph::Graph::with_indices(d.len(), edges.iter().map(|&(i, j)| (i as usize, j as usize))).unwrap();
            assert_eq!(g.degrees(), d);
        }
    }

    #[test]
    fn estimates_match_exact_counts() {
        for d in [vec![1, 1, 1, 1], vec![2, 2, 2, 2, 2], vec![3, 3, 2, 2, 2, 1, 1], vec![4, 3, 3, 2, 2, 2, 1, 1]] {
            let exact = count_degree_sequence(&d) as f64;
            let acc = SisProblem::degree_sequence(d.clone()).unwrap().run(20_000, 11, 0);
            assert_eq!(acc.completed, acc.samples);
            let est = acc.log_mean();
            let se = acc.relative_standard_error();
            assert!((est - exact.ln()).abs() <= 4.0 * se + 1e-12, "{d:?}: {} vs {} (se {se})", est.exp(), exact);
        }
    }

    #[test]
    fn mixing_constrained_estimates_match_exact_counts() {
        let d = vec![3, 3, 2, 2, 2, 1, 1];
        let dmm = DegreeMixing::from_cells([((3, 3), 1), ((2, 3), 3), ((1, 3), 1), ((2, 2), 1), ((1, 2), 1)]);
        let exact = count_degree_sequence_with_mixing(&d, &dmm);
        assert!(exact > 0);
        let acc = SisProblem::with_mixing(d, &dmm).unwrap().run(20_000, 5, 0);
        let est = acc.log_mean();
        let se = acc.relative_standard_error();
        assert!((est - (exact as f64).ln()).abs() <= 4.0 * se, "{} vs {exact} (se {se})", est.exp());
    }

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let problem = SisProblem::degree_sequence(vec![3, 3, 2, 2, 2, 1, 1]).unwrap();
        let whole = problem.run(1000, 9, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        rng.set_stream(0);
        let mut ws = problem.workspace();
        let mut a = WeightAccumulator::default();
        let mut b = WeightAccumulator::default();
        for i in 0..1000 {
            let w = problem.sample(&mut rng, &mut ws, None);
            if i < 400 { a.push(w) } else { b.push(w) }
        }
        a.merge(&b);
        assert_eq!(a.samples, whole.samples);
        assert!((a.log_mean() - whole.log_mean()).abs() < 1e-12);
    }
}

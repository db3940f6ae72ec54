//! Synthetic networks from each generating mechanism, for model-recovery
//! experiments and estimator checks. Output is a function of the config and
//! seed only.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::enumeration::{is_graphical, SisProblem};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeType};
use crate::linalg::{dot, Vec3};
use crate::math::{ceil, exp_m1, ln_sigmoid};

/// Full restarts of the pairing before falling back to sequential
/// construction.
const PAIRING_RESTARTS: usize = 50;
/// Consecutive rejected stub pairs that trigger a restart.
const PAIRING_RETRIES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "snake_case")]
pub enum Mechanism {
    /// Every pair joined independently with probability `p`.
    Er { p: f64 },
    /// Degrees `ceil(X) - 1` for `X ~ Exp(lambda)`, realized by stub pairing.
    ExponentialDegree { lambda: f64 },
    /// The first `n_primary` vertices are primary, the rest specialty; pairs
    /// are joined with the probability of their type block.
    BlockMixing { n_primary: usize, p_pp: f64, p_ps: f64, p_ss: f64 },
    /// An exponential-degree graph rewired by Metropolis double-edge swaps
    /// toward edge weights `sigmoid(b0 + b1 k + b2 l)`, `k <= l`.
    DegreeMixingLogistic { lambda: f64, beta: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub mechanism: Mechanism,
    pub seed: u64,
}

/// A generated network with generation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub graph: Graph,
    /// Degree units removed to make the drawn degrees graphical.
    pub repaired_mass: u64,
    /// Degree sum before repair (0 for mechanisms without target degrees).
    pub target_degree_sum: u64,
    /// Whether stub pairing gave up and sequential construction was used.
    pub sequential_fallback: bool,
    pub swaps_accepted: u64,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain(format!("n = {} but at least 2 vertices are required", self.n)));
        }
        match self.mechanism {
            Mechanism::Er { p } => check_probability("p", p),
            Mechanism::BlockMixing { n_primary, p_pp, p_ps, p_ss } => {
                if n_primary > self.n {
                    return Err(Error::domain(format!("n_primary = {n_primary} exceeds n = {}", self.n)));
                }
                check_probability("p_pp", p_pp)?;
                check_probability("p_ps", p_ps)?;
                check_probability("p_ss", p_ss)
            }
            Mechanism::ExponentialDegree { lambda } | Mechanism::DegreeMixingLogistic { lambda, .. } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::domain(format!("lambda = {lambda} must be positive")));
                }
                // Mean of ceil(X) - 1 for X ~ Exp(lambda).
                let mean_degree = 1.0 / exp_m1(lambda);
                if mean_degree >= (self.n - 1) as f64 {
                    return Err(Error::domain(format!(
                        "lambda = {lambda} gives mean degree {mean_degree:.1}, not below n - 1 = {}",
                        self.n - 1
                    )));
                }
                if let Mechanism::DegreeMixingLogistic { beta, .. } = self.mechanism {
                    if beta.iter().any(|b| !b.is_finite()) {
                        return Err(Error::domain("beta must be finite"));
                    }
                }
                Ok(())
            }
        }
    }
}

pub fn sample_network(config: &SimConfig) -> Result<Graph> {
    sample_network_detailed(config).map(|s| s.graph)
}

pub fn sample_network_detailed(config: &SimConfig) -> Result<Simulated> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n;
    let plain = |graph| Simulated {
        graph,
        repaired_mass: 0,
        target_degree_sum: 0,
        sequential_fallback: false,
        swaps_accepted: 0,
    };
    match config.mechanism {
        Mechanism::Er { p } => {
            let edges = bernoulli_pairs(n, &mut rng, |_, _| p);
            Ok(plain(Graph::with_indices(n, edges)?))
        }
        Mechanism::BlockMixing { n_primary, p_pp, p_ps, p_ss } => {
            let edges = bernoulli_pairs(n, &mut rng, |i, j| match (i < n_primary, j < n_primary) {
                (true, true) => p_pp,
                (false, false) => p_ss,
                _ => p_ps,
            });
            let types = (0..n).map(|v| if v < n_primary { NodeType::Primary } else { NodeType::Specialty }).collect();
            Ok(plain(Graph::with_indices(n, edges)?.with_types(types)?))
        }
        Mechanism::ExponentialDegree { lambda } => exponential_degree(n, lambda, &mut rng),
        Mechanism::DegreeMixingLogistic { lambda, beta } => {
            let mut sim = exponential_degree(n, lambda, &mut rng)?;
            let (edges, accepted) = logistic_swaps(&sim.graph, &beta, &mut rng);
            sim.graph = Graph::with_indices(n, edges.into_iter().map(|(a, b)| (a as usize, b as usize)))?;
            sim.swaps_accepted = accepted;
            Ok(sim)
        }
    }
}

fn bernoulli_pairs<R: Rng>(n: usize, rng: &mut R, p: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let pij = p(i, j);
            if pij >= 1.0 || (pij > 0.0 && rng.random::<f64>() < pij) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Drawn degrees before repair.
pub fn draw_exponential_degrees<R: Rng>(n: usize, lambda: f64, rng: &mut R) -> Result<Vec<u32>> {
    let dist = Exp::new(lambda).map_err(|e| Error::domain(format!("{e}")))?;
    Ok((0..n)
        .map(|_| {
            let x: f64 = dist.sample(rng);
            let d = (ceil(x) - 1.0).max(0.0);
            d.min((n - 1) as f64) as u32
        })
        .collect())
}

/// Makes the degree sum even by decrementing the largest degree, then
/// decrements the two largest degrees until the sequence is graphical.
/// Returns the number of degree units removed.
pub fn repair_degrees(degrees: &mut [u32]) -> u64 {
    let argmax = |d: &[u32], skip: Option<usize>| {
        let mut best: Option<usize> = None;
        for (i, &x) in d.iter().enumerate() {
            if Some(i) != skip && best.is_none_or(|b| x > d[b]) {
                best = Some(i);
            }
        }
        best
    };
    let mut removed = 0;
    if degrees.iter().map(|&d| d as u64).sum::<u64>() % 2 == 1 {
        let i = argmax(degrees, None).expect("odd sum has a positive degree");
        degrees[i] -= 1;
        removed += 1;
    }
    while !is_graphical(degrees) {
        let i = argmax(degrees, None).expect("non-graphical sequence is nonempty");
        let j = argmax(degrees, Some(i)).expect("non-graphical sequence has two vertices");
        degrees[i] -= 1;
        // A lone positive degree is even here, so it gives up both units.
        if degrees[j] == 0 {
            degrees[i] -= 1;
        } else {
            degrees[j] -= 1;
        }
        removed += 2;
    }
    removed
}

fn exponential_degree<R: Rng>(n: usize, lambda: f64, rng: &mut R) -> Result<Simulated> {
    let mut degrees = draw_exponential_degrees(n, lambda, rng)?;
    let target_degree_sum = degrees.iter().map(|&d| d as u64).sum();
    let repaired_mass = repair_degrees(&mut degrees);
    let (edges, sequential_fallback) = match pair_stubs(&degrees, rng) {
        Some(e) => (e, false),
        None => {
            let problem = SisProblem::degree_sequence(degrees.clone())?;
            let mut ws = problem.workspace();
            let mut e = Vec::new();
            problem
                .sample(rng, &mut ws, Some(&mut e))
                .expect("sequential construction of a graphical sequence completes");
            (e, true)
        }
    };
    let graph = Graph::with_indices(n, edges.into_iter().map(|(a, b)| (a as usize, b as usize)))?;
    debug_assert_eq!(graph.degrees(), degrees);
    Ok(Simulated { graph, repaired_mass, target_degree_sum, sequential_fallback, swaps_accepted: 0 })
}

/// Configuration-model pairing: repeatedly joins two random free stubs,
/// rejecting loops and repeated edges; restarts when stuck.
fn pair_stubs<R: Rng>(degrees: &[u32], rng: &mut R) -> Option<Vec<(u32, u32)>> {
    let all: Vec<u32> =
        degrees.iter().enumerate().flat_map(|(v, &d)| core::iter::repeat_n(v as u32, d as usize)).collect();
    'restart: for _ in 0..PAIRING_RESTARTS {
        let mut stubs = all.clone();
        let mut edges = BTreeSet::new();
        while stubs.len() >= 2 {
            let mut placed = false;
            for _ in 0..PAIRING_RETRIES {
                let i = rng.random_range(0..stubs.len());
                let mut j = rng.random_range(0..stubs.len() - 1);
                if j >= i {
                    j += 1;
                }
                let (u, v) = (stubs[i], stubs[j]);
                let key = if u < v { (u, v) } else { (v, u) };
                if u != v && !edges.contains(&key) {
                    edges.insert(key);
                    let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                    stubs.swap_remove(hi);
                    stubs.swap_remove(lo);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'restart;
            }
        }
        return Some(edges.into_iter().collect());
    }
    None
}

/// `10 |E|` Metropolis double-edge swaps targeting
/// `prod_edges sigmoid(beta . (1, k, l))` at fixed degrees.
fn logistic_swaps<R: Rng>(g: &Graph, beta: &Vec3, rng: &mut R) -> (Vec<(u32, u32)>, u64) {
    let degrees = g.degrees();
    let mut edges: Vec<(u32, u32)> = g.edges().to_vec();
    let mut present: BTreeSet<(u32, u32)> = edges.iter().copied().collect();
    let log_w = |a: u32, b: u32| {
        let (k, l) = {
            let (x, y) = (degrees[a as usize] as f64, degrees[b as usize] as f64);
            if x <= y { (x, y) } else { (y, x) }
        };
        ln_sigmoid(dot(beta, &[1.0, k, l]))
    };
    let key = |a: u32, b: u32| if a < b { (a, b) } else { (b, a) };
    let m = edges.len();
    let mut accepted = 0;
    if m < 2 {
        return (edges, 0);
    }
    for _ in 0..10 * m {
        let i = rng.random_range(0..m);
        let mut j = rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = edges[i];
        let (c, d) = if rng.random::<bool>() { edges[j] } else { (edges[j].1, edges[j].0) };
        // (a, b), (c, d) -> (a, d), (c, b)
        if a == d || c == b || present.contains(&key(a, d)) || present.contains(&key(c, b)) {
            continue;
        }
        let delta = log_w(a, d) + log_w(c, b) - log_w(a, b) - log_w(c, d);
        if delta >= 0.0 || rng.random::<f64>() < crate::math::exp(delta) {
            present.remove(&key(a, b));
            present.remove(&key(c, d));
            present.insert(key(a, d));
            present.insert(key(c, b));
            edges[i] = key(a, d);
            edges[j] = key(c, b);
            accepted += 1;
        }
    }
    (edges, accepted)
}

/// Independent per-replica seed.
pub fn replica_seed(seed: u64, replica: u64) -> u64 {
    crate::math::derive_seed(seed, replica)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg(n: usize, mechanism: Mechanism, seed: u64) -> SimConfig {
        SimConfig { n, mechanism, seed }
    }

    #[test]
    fn er_extremes() {
        assert_eq!(sample_network(&cfg(100, Mechanism::Er { p: 0.0 }, 1)).unwrap().edge_count(), 0);
        assert_eq!(sample_network(&cfg(100, Mechanism::Er { p: 1.0 }, 1)).unwrap().edge_count(), 4950);
        assert!(sample_network(&cfg(100, Mechanism::Er { p: 1.5 }, 1)).is_err());
        assert!(sample_network(&cfg(1, Mechanism::Er { p: 0.5 }, 1)).is_err());
    }

    #[test]
    fn same_seed_same_graph() {
        for mech in [
            Mechanism::Er { p: 0.1 },
            Mechanism::ExponentialDegree { lambda: 0.2 },
            Mechanism::BlockMixing { n_primary: 20, p_pp: 0.2, p_ps: 0.05, p_ss: 0.1 },
            Mechanism::DegreeMixingLogistic { lambda: 0.2, beta: [-2.0, 0.1, -0.05] },
        ] {
            let a = sample_network(&cfg(80, mech, 5)).unwrap();
            let b = sample_network(&cfg(80, mech, 5)).unwrap();
            assert_eq!(a, b);
            let c = sample_network(&cfg(80, mech, 6)).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn exponential_degrees_are_realized() {
        let s = sample_network_detailed(&cfg(500, Mechanism::ExponentialDegree { lambda: 0.05 }, 3)).unwrap();
        assert!(s.repaired_mass as f64 <= 0.01 * s.target_degree_sum as f64);
        let sum: u64 = s.graph.degrees().iter().map(|&d| d as u64).sum();
        assert_eq!(sum + s.repaired_mass, s.target_degree_sum);
    }

    #[test]
    fn swaps_keep_degrees() {
        let base = sample_network(&cfg(120, Mechanism::ExponentialDegree { lambda: 0.15 }, 9)).unwrap();
        let s = sample_network_detailed(&cfg(120, Mechanism::DegreeMixingLogistic { lambda: 0.15, beta: [-3.0, 0.3, -0.2] }, 9))
            .unwrap();
        assert_eq!(base.degrees(), s.graph.degrees());
        assert!(s.swaps_accepted > 0);
    }

    #[test]
    fn repair_reaches_graphical() {
        let mut d = vec![5, 5, 5, 1, 1, 0];
        let removed = repair_degrees(&mut d);
        assert!(is_graphical(&d));
        assert_eq!(removed, 17 - d.iter().sum::<u32>() as u64);

        let mut lone = vec![0, 5, 0];
        assert_eq!(repair_degrees(&mut lone), 5);
        assert_eq!(lone, vec![0, 0, 0]);
    }

    #[test]
    fn too_dense_exponential_is_rejected() {
        assert!(sample_network(&cfg(10, Mechanism::ExponentialDegree { lambda: 0.05 }, 1)).is_err());
    }

    #[test]
    fn block_types_follow_config() {
        let g = sample_network(&cfg(30, Mechanism::BlockMixing { n_primary: 10, p_pp: 1.0, p_ps: 0.0, p_ss: 0.0 }, 2)).unwrap();
        assert_eq!(g.type_counts(), (10, 20, 0));
        assert_eq!(g.edge_count(), 45);
    }
}

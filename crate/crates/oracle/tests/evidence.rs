//! Production evidence against fine-grid integrals and exhaustive volumes.

use ccm_core::enumeration::SamplingConfig;
use ccm_core::evidence::{evidence, BetaPrior, DegreeLikelihood, IntegralOptions, ModelPrior, NormalPrior};
use ccm_core::{Graph, NodeType};
use ccm_oracle::oracle_evidence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let types = (0..n).map(|_| if rng.random::<bool>() { NodeType::Primary } else { NodeType::Specialty }).collect();
    Graph::with_indices(n, edges).unwrap().with_types(types).unwrap()
}

#[test]
fn closed_forms_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..12 {
        let n = rng.random_range(2..=6);
        let density = rng.random_range(0.1..0.9);
        let g = random_graph(&mut rng, n, density);
        let mut beta = || BetaPrior::new(rng.random_range(1.0..4.0), rng.random_range(1.0..4.0)).unwrap();
        let priors = [ModelPrior::M1, ModelPrior::M2(beta()), ModelPrior::M4([beta(), beta(), beta()])];
        for prior in priors {
            let p = evidence(&g, &prior, &SamplingConfig::default(), &IntegralOptions::default()).unwrap();
            let o = oracle_evidence(&g, &prior).unwrap();
            let diff = (p.log_evidence.ln() - o.log_evidence).abs();
            assert!(diff <= o.error_bound() + 1e-8, "{prior:?}: {} vs {}", p.log_evidence.ln(), o.log_evidence);
        }
    }
}

#[test]
fn m3_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..8 {
        let n = rng.random_range(2..=6);
        let g = random_graph(&mut rng, n, 0.5);
        let lambda = NormalPrior { mean: rng.random_range(0.2..1.5), sd: rng.random_range(0.1..0.8) };
        let likelihood = if i % 2 == 0 { DegreeLikelihood::Density } else { DegreeLikelihood::Geometric };
        let prior = ModelPrior::M3 { lambda, likelihood };
        let p = evidence(&g, &prior, &SamplingConfig::default(), &IntegralOptions::default()).unwrap();
        let o = oracle_evidence(&g, &prior).unwrap();
        assert!((p.log_volume.ln() - o.log_volume.exact_or_estimate.ln()).abs() < 1e-12);
        let diff = (p.log_integral.ln() - o.log_integral.exact_or_estimate.ln()).abs();
        assert!(diff <= o.error_bound() + 1e-8, "{prior:?}: diff {diff}, bound {}", o.error_bound());
    }
}

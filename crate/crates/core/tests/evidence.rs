use ccm_core::enumeration::SamplingConfig;
use ccm_core::evidence::{
    evidence, evidence_m1, evidence_m2, log_integral_beta_binomial, posterior_from_log_evidence, BetaPrior,
    IntegralOptions, ModelPrior,
};
use ccm_core::math::{ln_beta, ln_choose};
use ccm_core::quadrature::{integrate_log, QuadratureOptions};
use ccm_core::Graph;
use proptest::prelude::*;

fn graph_from(n: usize, bits: &[bool]) -> Graph {
    let mut edges = Vec::new();
    let mut b = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits[b % bits.len()] {
                edges.push((i, j));
            }
            b += 1;
        }
    }
    Graph::with_indices(n, edges).unwrap()
}

/// `ln ∫_0^1 C(N, E) p^E (1-p)^(N-E) Beta(p; a, b) dp` by adaptive quadrature
/// with breakpoints around the posterior mode.
fn beta_binomial_by_quadrature(pairs: u64, e: u64, a: f64, b: f64) -> f64 {
    let (n, k) = (pairs as f64, e as f64);
    let c = ln_choose(pairs, e) - ln_beta(a, b);
    let lf = |p: f64| c + (k + a - 1.0) * p.ln() + (n - k + b - 1.0) * (-p).ln_1p();
    let (s, t) = (k + a, n - k + b);
    let mean = s / (s + t);
    let sd = (s * t / ((s + t).powi(2) * (s + t + 1.0))).sqrt();
    let cuts: Vec<f64> = (-6..=6).map(|i| mean + i as f64 * sd).collect();
    let opts = QuadratureOptions { tolerance: 1e-10, max_intervals: 4000 };
    integrate_log(lf, 0.0, 1.0, &cuts, &opts).unwrap().log_value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_beta_is_m1(n in 2usize..=100, bits in proptest::collection::vec(any::<bool>(), 1..40)) {
        let g = graph_from(n, &bits);
        let a = evidence_m1(&g).unwrap();
        let b = evidence_m2(&g, BetaPrior::UNIFORM).unwrap();
        prop_assert!((a.log_evidence.ln() - b.log_evidence.ln()).abs() <= 1e-12 * a.log_evidence.ln().abs().max(1.0));
    }

    #[test]
    fn closed_form_matches_quadrature(pairs in 1u64..5000, frac in 0.0f64..1.0, a in 1.0f64..50.0, b in 1.0f64..50.0) {
        let e = ((pairs as f64) * frac) as u64;
        let closed = log_integral_beta_binomial(pairs, e, &BetaPrior::new(a, b).unwrap()).unwrap();
        let quad = beta_binomial_by_quadrature(pairs, e, a, b);
        prop_assert!((closed - quad).abs() <= 1e-6 * closed.abs().max(1.0), "{} vs {}", closed, quad);
    }

    #[test]
    fn posterior_is_shift_invariant_and_monotone(
        le in proptest::collection::vec(-70_000.0f64..-60_000.0, 2..6),
        shift in -1e4f64..1e4,
        bump in 0.01f64..5.0,
    ) {
        let k = le.len();
        let priors = vec![1.0 / k as f64; k];
        let p = posterior_from_log_evidence(&le, &priors).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = le.iter().map(|x| x + shift).collect();
        let q = posterior_from_log_evidence(&shifted, &priors).unwrap();
        for (x, y) in p.iter().zip(&q) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let mut raised = le.clone();
        raised[0] += bump;
        let r = posterior_from_log_evidence(&raised, &priors).unwrap();
        prop_assert!(r[0] >= p[0]);
        if p[0] > 1e-6 && p[0] < 1.0 - 1e-6 {
            prop_assert!(r[0] > p[0]);
        }
    }
}

#[test]
fn decomposition_reproduces_bit_for_bit() {
    let g = graph_from(9, &[true, false, false, true, true]);
    let cfg = SamplingConfig { samples: 200, seed: 1, workers: 1, oracle_limit: 8 };
    for prior in [
        ModelPrior::M1,
        ModelPrior::M2(BetaPrior::new(2.0, 5.0).unwrap()),
        ModelPrior::M3 { lambda: ccm_core::evidence::NormalPrior { mean: 0.3, sd: 0.1 }, likelihood: Default::default() },
    ] {
        let r = evidence(&g, &prior, &cfg, &IntegralOptions::default()).unwrap();
        assert_eq!(r.log_evidence.ln(), r.log_integral.ln() - r.log_volume.ln());
    }
}

#[test]
fn edge_volume_of_a_large_sparse_graph() {
    let v = ccm_core::enumeration::log_volume_edges(1283, 12749).unwrap();
    assert!((v.log_count.ln() - 65766.28).abs() < 0.01);
    // Uniform prior: ln I = -ln(N + 1).
    let li = log_integral_beta_binomial(822_403, 12_749, &BetaPrior::UNIFORM).unwrap();
    assert!((li + 822_404f64.ln()).abs() < 1e-6);
}

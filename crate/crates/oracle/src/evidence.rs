use std::f64::consts::PI;

use ccm_core::evidence::{BetaPrior, DegreeLikelihood, ModelPrior, NormalPrior};
use ccm_core::statistics::StatisticKind;
use ccm_core::{Graph, LogValue, NodeType};

use crate::enumerate::{class_table, statistic_of_mask, GraphMasks};
use crate::{OracleError, OracleReport, MAX_EVIDENCE_N};

/// Grid intervals for the composite Simpson rule.
const GRID: usize = 1_000_000;
/// Integrand cut-off below its peak, in nats.
const TAIL_NATS: f64 = 50.0;

/// Reference evidence: exhaustive volume and fine-grid parameter integral.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEvidence {
    pub log_evidence: f64,
    pub log_integral: OracleReport,
    pub log_volume: OracleReport,
}

impl OracleEvidence {
    /// Error bound on `log_evidence` (the volume is exact).
    pub fn error_bound(&self) -> f64 {
        self.log_integral.error_bound
    }
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// `c * ln(x)`, taking `0 * ln 0` as 0.
fn xlogy(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x.ln()
    }
}

/// `ln` of the composite Simpson sum of `exp(lf)` on `[a, b]` with
/// `intervals` (even) subintervals.
fn log_simpson(lf: &dyn Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let values: Vec<f64> = (0..=intervals).map(|i| lf(a + i as f64 * h)).collect();
    let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * (v - peak).exp();
    }
    peak + (sum * h / 3.0).ln()
}

/// Simpson at full and half resolution; the Richardson estimate of the
/// full-resolution error is `|S_N - S_{N/2}| / 15`, reported here on the log
/// scale.
fn simpson_with_bound(lf: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let fine = log_simpson(lf, a, b, GRID);
    let coarse = log_simpson(lf, a, b, GRID / 2);
    (fine, (fine - coarse).abs() / 15.0)
}

/// `ln ∫_0^1 C(N, E) p^E (1 - p)^(N - E) Beta(p; a, b) dp` with
/// `p = (1 - cos(pi t)) / 2`, which removes endpoint singularities for
/// `a, b >= 1/2`.
fn beta_binomial(pairs: u64, edges: u64, prior: &BetaPrior) -> (f64, f64) {
    let (n, e) = (pairs as f64, edges as f64);
    let constant = ln_choose(pairs, edges) - ln_beta(prior.alpha, prior.beta);
    let lf = move |t: f64| {
        let p = 0.5 * (1.0 - (PI * t).cos());
        let q = 0.5 * (1.0 + (PI * t).cos());
        let jac = (0.5 * PI * (PI * t).sin()).ln();
        constant + xlogy(e + prior.alpha - 1.0, p) + xlogy(n - e + prior.beta - 1.0, q) + jac
    };
    simpson_with_bound(&lf, 0.0, 1.0)
}

fn exponential_degrees(degrees: &[u32], prior: &NormalPrior, kind: DegreeLikelihood) -> (f64, f64) {
    let degrees: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
    let (mu, sd) = (prior.mean, prior.sd);
    let lf = move |lambda: f64| {
        if lambda <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let per_vertex = match kind {
            DegreeLikelihood::Density => lambda.ln(),
            DegreeLikelihood::Geometric => (1.0 - (-lambda).exp()).ln(),
        };
        let lik: f64 = degrees.iter().map(|d| per_vertex - lambda * d).sum();
        let z = (lambda - mu) / sd;
        lik - 0.5 * (2.0 * PI).ln() - sd.ln() - 0.5 * z * z
    };
    // Unimodal: bracket the peak, then golden-section search.
    let mut hi = 1.0;
    while lf(2.0 * hi) >= lf(hi) {
        hi *= 2.0;
    }
    hi *= 2.0;
    let (mut a, mut b) = (0.0, hi);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..300 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if lf(c) >= lf(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mode = 0.5 * (a + b);
    let peak = lf(mode);
    let scale = hi.max(mode) * 1e-9 + 1e-300;
    let mut step = scale;
    while lf(mode + step) > peak - TAIL_NATS {
        step *= 2.0;
    }
    let upper = mode + step;
    let mut step = scale;
    while mode - step > 0.0 && lf(mode - step) > peak - TAIL_NATS {
        step *= 2.0;
    }
    let lower = (mode - step).max(0.0);
    simpson_with_bound(&lf, lower, upper)
}

/// Mask of `g`'s edges in [`GraphMasks`] pair order.
fn mask_of(g: &Graph, masks: &GraphMasks) -> u64 {
    masks
        .pairs()
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| g.has_edge(i, j))
        .fold(0u64, |m, (b, _)| m | 1 << b)
}

/// Evidence of m1 to m4 for a graph on at most 6 vertices.
pub fn oracle_evidence(g: &Graph, prior: &ModelPrior) -> Result<OracleEvidence, OracleError> {
    let n = g.node_count();
    if n > MAX_EVIDENCE_N {
        return Err(OracleError::TooLarge { n, limit: MAX_EVIDENCE_N });
    }
    let masks = GraphMasks::new(n)?;
    let mask = mask_of(g, &masks);
    let degrees: Vec<u32> = (0..n).map(|v| (0..n).filter(|&u| u != v && g.has_edge(u, v)).count() as u32).collect();
    let edges = degrees.iter().map(|&d| d as u64).sum::<u64>() / 2;
    let pairs = (n * (n - 1) / 2) as u64;
    let types: Vec<NodeType> = g.node_types().to_vec();

    let (kind, (log_integral, bound)) = match prior {
        ModelPrior::M1 => (StatisticKind::EdgeCount, beta_binomial(pairs, edges, &BetaPrior::UNIFORM)),
        ModelPrior::M2(b) => (StatisticKind::EdgeCount, beta_binomial(pairs, edges, b)),
        ModelPrior::M3 { lambda, likelihood } => {
            (StatisticKind::DegreeDistribution, exponential_degrees(&degrees, lambda, *likelihood))
        }
        ModelPrior::M4(blocks) => {
            let primary: Vec<bool> = types.iter().map(|&t| t == NodeType::Primary).collect();
            let np = primary.iter().filter(|&&p| p).count() as u64;
            let ns = n as u64 - np;
            let caps = [np * np.saturating_sub(1) / 2, np * ns, ns * ns.saturating_sub(1) / 2];
            let mut counts = [0u64; 3];
            for &(i, j) in masks.pairs() {
                if g.has_edge(i, j) {
                    counts[2 - (primary[i] as usize + primary[j] as usize)] += 1;
                }
            }
            let mut total = (0.0, 0.0);
            for ((cap, e), b) in caps.iter().zip(counts).zip(blocks) {
                let (v, err) = beta_binomial(*cap, e, b);
                total = (total.0 + v, total.1 + err);
            }
            (StatisticKind::TypeMixing, total)
        }
        ModelPrior::M5(_) => return Err(OracleError::Unsupported("m5 evidence (use the Monte Carlo oracle)")),
    };
    let type_arg = (kind == StatisticKind::TypeMixing).then_some(types.as_slice());
    let x = statistic_of_mask(&masks, mask, kind, type_arg)?;
    let table = class_table(n, kind, type_arg)?;
    let count = table[&x];
    let log_volume = LogValue::from_count(count);
    Ok(OracleEvidence {
        log_evidence: log_integral - log_volume.ln(),
        log_integral: OracleReport {
            quantity: format!("parameter integral of {}", prior.id().name()),
            exact_or_estimate: LogValue::ln_unchecked(log_integral),
            error_bound: bound,
            cost: (GRID + 1 + GRID / 2 + 1) as u64,
        },
        log_volume: OracleReport {
            quantity: format!("class size on {n} vertices"),
            exact_or_estimate: log_volume,
            error_bound: 0.0,
            cost: masks.count(),
        },
    })
}

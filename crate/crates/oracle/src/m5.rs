use std::collections::BTreeMap;
use std::f64::consts::PI;

use ccm_core::evidence::MvnPrior;
use ccm_core::{Graph, LogValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::OracleReport;

type V3 = [f64; 3];
type M3 = [[f64; 3]; 3];

fn det(m: &M3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse by cofactors.
fn inverse(m: &M3) -> M3 {
    let d = det(m);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / d;
        }
    }
    inv
}

fn quad(inv: &M3, x: &V3) -> f64 {
    (0..3).map(|i| (0..3).map(|j| x[i] * inv[i][j] * x[j]).sum::<f64>()).sum()
}

fn ln_factorial(k: u64) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// Cells, counts and constant for the degree-mixing multinomial of `g`.
fn cells_of(g: &Graph) -> (Vec<(V3, f64)>, f64, f64) {
    let n = g.node_count();
    let degree: Vec<u64> = (0..n).map(|v| (0..n).filter(|&u| u != v && g.has_edge(u, v)).count() as u64).collect();
    let mut vertices_at: BTreeMap<u64, u64> = BTreeMap::new();
    for &d in &degree {
        if d > 0 {
            *vertices_at.entry(d).or_default() += 1;
        }
    }
    let mut counts: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            if g.has_edge(i, j) {
                *counts.entry((degree[i].min(degree[j]), degree[i].max(degree[j]))).or_default() += 1;
            }
        }
    }
    let ks: Vec<(u64, u64)> = vertices_at.into_iter().collect();
    let mut cells = Vec::new();
    for (a, &(k, dk)) in ks.iter().enumerate() {
        for &(l, _) in &ks[a..] {
            if k == l && dk < 2 {
                continue;
            }
            let y = counts.get(&(k, l)).copied().unwrap_or(0);
            cells.push(([1.0, k as f64, l as f64], y as f64));
        }
    }
    let total: u64 = counts.values().sum();
    let constant = ln_factorial(total) - counts.values().map(|&y| ln_factorial(y)).sum::<f64>();
    (cells, total as f64, constant)
}


/// Degree-mixing multinomial log likelihood of `g` at `beta`.
pub fn oracle_m5_log_likelihood(g: &Graph, beta: &V3) -> f64 {
    let (cells, total, constant) = cells_of(g);
    likelihood(&cells, total, constant, beta)
}

fn likelihood(cells: &[(V3, f64)], total: f64, constant: f64, beta: &V3) -> f64 {
    let log_s: Vec<f64> = cells
        .iter()
        .map(|(x, _)| {
            let eta = beta[0] * x[0] + beta[1] * x[1] + beta[2] * x[2];
            if eta >= 0.0 {
                -(-eta).exp().ln_1p()
            } else {
                eta - eta.exp().ln_1p()
            }
        })
        .collect();
    let peak = log_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = peak + log_s.iter().map(|l| (l - peak).exp()).sum::<f64>().ln();
    let fit: f64 = cells.iter().zip(&log_s).filter(|((_, y), _)| *y > 0.0).map(|((_, y), l)| y * l).sum();
    constant + fit - total * log_sum
}

/// Importance-sampling estimate of `ln ∫ P(DMM | b) N(b; mu, Sigma) db` with a
/// multivariate Student-t proposal (5 degrees of freedom) centered at
/// `center` with scale matrix `scale`.
pub fn oracle_m5_log_integral(
    g: &Graph,
    prior: &MvnPrior,
    center: &V3,
    scale: &M3,
    samples: u64,
    seed: u64,
) -> OracleReport {
    const NU: f64 = 5.0;
    let (cells, total, constant) = cells_of(g);
    let prior_inv = inverse(&prior.covariance);
    let prior_norm = -1.5 * (2.0 * PI).ln() - 0.5 * det(&prior.covariance).ln();
    // Lower Cholesky factor of the proposal scale.
    let s = scale;
    let l00 = s[0][0].sqrt();
    let l10 = s[1][0] / l00;
    let l20 = s[2][0] / l00;
    let l11 = (s[1][1] - l10 * l10).sqrt();
    let l21 = (s[2][1] - l20 * l10) / l11;
    let l22 = (s[2][2] - l20 * l20 - l21 * l21).sqrt();
    let log_det_scale = 2.0 * (l00.ln() + l11.ln() + l22.ln());
    let t_norm = libm::lgamma((NU + 3.0) / 2.0) - libm::lgamma(NU / 2.0) - 1.5 * (NU * PI).ln() - 0.5 * log_det_scale;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_w = Vec::with_capacity(samples as usize);
    for _ in 0..samples {
        let z: V3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let chi2: f64 = (0..NU as usize).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
        let k = (NU / chi2).sqrt();
        let y = [l00 * z[0], l10 * z[0] + l11 * z[1], l20 * z[0] + l21 * z[1] + l22 * z[2]];
        let beta = [center[0] + k * y[0], center[1] + k * y[1], center[2] + k * y[2]];
        let delta = k * k * (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
        let log_q = t_norm - 0.5 * (NU + 3.0) * (delta / NU).ln_1p();
        let dev = [beta[0] - prior.mean[0], beta[1] - prior.mean[1], beta[2] - prior.mean[2]];
        let log_p = likelihood(&cells, total, constant, &beta) + prior_norm - 0.5 * quad(&prior_inv, &dev);
        log_w.push(log_p - log_q);
    }
    let peak = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - peak).exp()).collect();
    let n = samples as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    OracleReport {
        quantity: "degree-mixing parameter integral".into(),
        exact_or_estimate: LogValue::ln_unchecked(peak + mean.ln()),
        error_bound: (var / n).sqrt() / mean,
        cost: samples,
    }
}

//! Exponential-degree model: every vertex degree is an independent draw with
//! rate `lambda`, and `lambda` has a normal prior restricted to `lambda > 0`.

use alloc::format;

use serde::{Deserialize, Serialize};

use super::NormalPrior;
use crate::error::{Error, Result};
use crate::math::{exp, exp_m1, ln, sqrt, LN_2PI};
use crate::quadrature::{integrate_log_peaked, QuadratureOptions, QuadratureResult};
use crate::statistics::DegreeDistribution;

/// How a degree `k` is scored under rate `lambda`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeLikelihood {
    /// Exponential density at the integer: `lambda * exp(-lambda k)`.
    #[default]
    Density,
    /// Geometric mass `(1 - exp(-lambda)) exp(-lambda k)`, which sums to one
    /// over `k = 0, 1, ...`.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M3Integral {
    pub quadrature: QuadratureResult,
    /// Maximizer of likelihood times prior.
    pub mode: f64,
}

/// Log likelihood and its first two derivatives in `lambda`, given the
/// vertex count `n` and degree sum `s = 2|E|`.
fn likelihood(kind: DegreeLikelihood, n: f64, s: f64, lambda: f64) -> (f64, f64, f64) {
    match kind {
        DegreeLikelihood::Density => (n * ln(lambda) - s * lambda, n / lambda - s, -n / (lambda * lambda)),
        DegreeLikelihood::Geometric => {
            let em1 = exp_m1(lambda);
            (n * ln(-exp_m1(-lambda)) - s * lambda, n / em1 - s, -n * exp(lambda) / (em1 * em1))
        }
    }
}

/// `ln ∫_0^inf L(lambda) N(lambda; mu, sd) dlambda`.
pub fn log_integral_m3(
    dist: &DegreeDistribution,
    prior: &NormalPrior,
    kind: DegreeLikelihood,
    options: &QuadratureOptions,
) -> Result<M3Integral> {
    prior.validate()?;
    let n = dist.node_count() as f64;
    let s = dist.degree_sum() as f64;
    if n == 0.0 {
        return Err(Error::domain("m3 needs at least one vertex"));
    }
    let (mu, sd) = (prior.mean, prior.sd);
    let var = sd * sd;
    let log_norm = -0.5 * LN_2PI - ln(sd);
    let slope = |lambda: f64| likelihood(kind, n, s, lambda).1 - (lambda - mu) / var;

    // The log integrand is strictly concave on (0, inf) with slope +inf at 0.
    let mut hi = mu.abs().max(1.0);
    let mut doublings = 0;
    while slope(hi) > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 {
            return Err(Error::domain(format!("no mode found for m3 with prior mean {mu}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mode = 0.5 * (lo + hi);
    let curvature = likelihood(kind, n, s, mode).2 - 1.0 / var;
    let width = 1.0 / sqrt(-curvature);

    // Integrate over u = (lambda - mode) / width, keeping the prior's
    // standardized offset free of cancellation when sd is tiny.
    let z0 = (mode - mu) / sd;
    let ratio = width / sd;
    let log_f = |u: f64| {
        let lambda = mode + width * u;
        if lambda <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = z0 + ratio * u;
        likelihood(kind, n, s, lambda).0 + log_norm - 0.5 * z * z
    };
    let mut quadrature = integrate_log_peaked(log_f, -mode / width, f64::INFINITY, 0.0, 1.0, options)?;
    quadrature.log_value += ln(width);
    Ok(M3Integral { quadrature, mode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn path3() -> DegreeDistribution {
        DegreeDistribution::from_counts(vec![0, 2, 1]).unwrap()
    }

    #[test]
    fn point_mass_prior_recovers_likelihood() {
        let d = path3();
        let prior = NormalPrior { mean: 0.5, sd: 1e-12 };
        let r = log_integral_m3(&d, &prior, DegreeLikelihood::Density, &QuadratureOptions::default()).unwrap();
        let direct = likelihood(DegreeLikelihood::Density, 3.0, 4.0, 0.5).0;
        assert!((r.quadrature.log_value - direct).abs() < 1e-8, "{} vs {direct}", r.quadrature.log_value);
    }

    #[test]
    fn matches_trapezoid_on_fine_grid() {
        let d = path3();
        let prior = NormalPrior { mean: 0.5, sd: 0.25 };
        let r = log_integral_m3(&d, &prior, DegreeLikelihood::Density, &QuadratureOptions::default()).unwrap();
        // Integrand: λ^3 e^{-4λ} N(λ; 0.5, 0.25), negligible beyond λ = 4.
        let steps = 1_000_000;
        let h = 4.0 / steps as f64;
        let f = |x: f64| {
            let z = (x - 0.5) / 0.25;
            x.powi(3) * (-4.0 * x).exp() * (-0.5 * z * z).exp() / (0.25 * (2.0 * core::f64::consts::PI).sqrt())
        };
        let mut sum = 0.5 * (f(0.0) + f(4.0));
        for i in 1..steps {
            sum += f(i as f64 * h);
        }
        let trap = (sum * h).ln();
        assert!(((r.quadrature.log_value - trap) / trap).abs() < 1e-8, "{} vs {trap}", r.quadrature.log_value);
    }

    #[test]
    fn geometric_mode_is_normalized_over_degrees() {
        let lambda: f64 = 0.3;
        let total: f64 = (0..2000).map(|k| (likelihood(DegreeLikelihood::Geometric, 1.0, k as f64, lambda).0).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_graph_is_finite() {
        let mut counts = vec![0u64; 60];
        for (k, c) in counts.iter_mut().enumerate() {
            *c = (2000.0 * (-0.08 * k as f64).exp()) as u64;
        }
        let d = DegreeDistribution::from_counts(counts).unwrap();
        let prior = NormalPrior { mean: 0.08, sd: 0.01 };
        for kind in [DegreeLikelihood::Density, DegreeLikelihood::Geometric] {
            let r = log_integral_m3(&d, &prior, kind, &QuadratureOptions::default()).unwrap();
            assert!(r.quadrature.log_value.is_finite());
            assert!(r.quadrature.relative_error <= 1e-8);
        }
    }
}

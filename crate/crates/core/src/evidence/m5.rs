//! Degree-mixing model: the `|E|` edges fall into degree-pair cells `(k, l)`
//! (`k <= l`) as a multinomial draw with probabilities proportional to
//! `sigmoid(beta0 + beta1 k + beta2 l)`, under a multivariate normal prior on
//! `beta`.
//!
//! The cells are every pair of degrees present in the degree distribution
//! (a diagonal cell needs two vertices of that degree), so the normalized
//! weights sum to one over all outcomes that can occur. The parameter
//! integral uses a Laplace approximation around the posterior mode, found by
//! damped Newton ascent with exact derivatives:
//!
//! ```text
//! l(b)      = ln |E|! - sum ln y_c! + sum y_c ln s_c - Y ln S + ln N(b; mu, Sigma)
//! grad      = sum y_c (1 - s_c) x_c - Y sum p_c (1 - s_c) x_c - Sigma^-1 (b - mu)
//! ln I     ~= l(b*) + (3/2) ln 2pi - (1/2) ln det H,   H = -hess l(b*)
//! ```
//!
//! with `x_c = (1, k, l)`, `s_c = sigmoid(b . x_c)`, `S = sum s_c`,
//! `p_c = s_c / S`.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::MvnPrior;
use crate::enumeration::WeightAccumulator;
use crate::error::{Error, NewtonTrace, Result};
use crate::linalg::{add_scaled, dot, sub, Cholesky3, Mat3, Vec3};
use crate::math::{exp, ln, ln_factorial, ln_sigmoid, ln_sum_exp, sigmoid, LN_2PI};
use crate::statistics::{DegreeDistribution, DegreeMixing};

const MAX_ITERATIONS: usize = 200;
/// Proposal covariance inflation for the importance-sampling estimate.
const PROPOSAL_SCALE: f64 = 1.2;

/// Cells, counts and constant term of the multinomial likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingModel {
    cells: Vec<(Vec3, f64)>,
    edges: f64,
    log_coefficient: f64,
}

impl MixingModel {
    pub fn new(dmm: &DegreeMixing, dist: &DegreeDistribution) -> Result<Self> {
        let degrees: Vec<(usize, u64)> = dist.nonzero().filter(|&(k, _)| k > 0).collect();
        let mut cells = Vec::new();
        for (i, &(k, dk)) in degrees.iter().enumerate() {
            for &(l, _) in &degrees[i..] {
                if k == l && dk < 2 {
                    continue;
                }
                let y = dmm.get(k as u32, l as u32);
                cells.push(([1.0, k as f64, l as f64], y as f64));
            }
        }
        let covered: u64 = cells.iter().map(|c| c.1 as u64).sum();
        if covered != dmm.total_edges() {
            return Err(Error::domain(format!(
                "degree mixing has {} edges in cells not realizable under its degree distribution",
                dmm.total_edges() - covered
            )));
        }
        if covered == 0 {
            return Err(Error::domain("m5 needs at least one edge"));
        }
        let log_coefficient = ln_factorial(covered) - dmm.cells().map(|(_, y)| ln_factorial(y)).sum::<f64>();
        Ok(Self { cells, edges: covered as f64, log_coefficient })
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Multinomial log likelihood of the observed cell counts.
    pub fn log_likelihood(&self, beta: &Vec3) -> f64 {
        let log_s: Vec<f64> = self.cells.iter().map(|(x, _)| ln_sigmoid(dot(beta, x))).collect();
        let log_total = ln_sum_exp(&log_s);
        let fit: f64 = self.cells.iter().zip(&log_s).filter(|((_, y), _)| *y > 0.0).map(|((_, y), ls)| y * ls).sum();
        self.log_coefficient + fit - self.edges * log_total
    }

    /// Log likelihood, gradient and Hessian.
    fn derivatives(&self, beta: &Vec3) -> (f64, Vec3, Mat3) {
        let etas: Vec<f64> = self.cells.iter().map(|(x, _)| dot(beta, x)).collect();
        let log_s: Vec<f64> = etas.iter().map(|&e| ln_sigmoid(e)).collect();
        let log_total = ln_sum_exp(&log_s);
        let mut value = self.log_coefficient - self.edges * log_total;
        let mut grad = [0.0; 3];
        let mut hess = [[0.0; 3]; 3];
        let mut g_log_total = [0.0; 3];
        let mut h_log_total = [[0.0; 3]; 3];
        for (((x, y), &eta), &ls) in self.cells.iter().zip(&etas).zip(&log_s) {
            let s = sigmoid(eta);
            let one_minus = sigmoid(-eta);
            let p = exp(ls - log_total);
            let a = p * one_minus;
            let b = a * (one_minus - s);
            let c = y * s * one_minus;
            if *y > 0.0 {
                value += y * ls;
            }
            for i in 0..3 {
                grad[i] += y * one_minus * x[i];
                g_log_total[i] += a * x[i];
                for j in 0..=i {
                    hess[i][j] -= c * x[i] * x[j];
                    h_log_total[i][j] += b * x[i] * x[j];
                }
            }
        }
        for i in 0..3 {
            grad[i] -= self.edges * g_log_total[i];
            for j in 0..=i {
                hess[i][j] -= self.edges * (h_log_total[i][j] - g_log_total[i] * g_log_total[j]);
                hess[j][i] = hess[i][j];
            }
        }
        (value, grad, hess)
    }
}

/// Result of the Laplace approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceFit {
    pub mode: Vec3,
    /// Log likelihood plus log prior density at the mode.
    pub log_posterior: f64,
    /// Negative Hessian of the log posterior at the mode.
    pub precision: Mat3,
    pub log_integral: f64,
    pub iterations: usize,
}

struct Posterior<'a> {
    model: &'a MixingModel,
    mean: Vec3,
    prior: Cholesky3,
    prior_inverse: Mat3,
    log_prior_norm: f64,
}

impl<'a> Posterior<'a> {
    fn new(model: &'a MixingModel, prior: &MvnPrior) -> Result<Self> {
        let chol = prior.cholesky()?;
        Ok(Self {
            model,
            mean: prior.mean,
            prior_inverse: chol.inverse(),
            log_prior_norm: -1.5 * LN_2PI - 0.5 * chol.log_det(),
            prior: chol,
        })
    }

    fn log_prior(&self, beta: &Vec3) -> f64 {
        self.log_prior_norm - 0.5 * self.prior.inverse_quadratic_form(&sub(beta, &self.mean))
    }

    fn value(&self, beta: &Vec3) -> f64 {
        self.model.log_likelihood(beta) + self.log_prior(beta)
    }

    /// Value, gradient and negative Hessian.
    fn derivatives(&self, beta: &Vec3) -> (f64, Vec3, Mat3) {
        let (lik, mut grad, hess) = self.model.derivatives(beta);
        let dev = sub(beta, &self.mean);
        let pull = crate::linalg::mat_vec(&self.prior_inverse, &dev);
        let mut precision = [[0.0; 3]; 3];
        for i in 0..3 {
            grad[i] -= pull[i];
            for j in 0..3 {
                precision[i][j] = -hess[i][j] + 0.5 * (self.prior_inverse[i][j] + self.prior_inverse[j][i]);
            }
        }
        (lik + self.log_prior(beta), grad, precision)
    }
}

/// Factorizes `m`, adding a growing multiple of the identity until it is
/// positive definite.
fn damped_cholesky(m: &Mat3) -> Option<Cholesky3> {
    if let Some(c) = Cholesky3::new(m) {
        return Some(c);
    }
    let scale = (0..3).map(|i| m[i][i].abs()).fold(0.0, f64::max).max(1e-12);
    let mut tau = 1e-8 * scale;
    for _ in 0..40 {
        let mut d = *m;
        for (i, row) in d.iter_mut().enumerate() {
            row[i] += tau;
        }
        if let Some(c) = Cholesky3::new(&d) {
            return Some(c);
        }
        tau *= 10.0;
    }
    None
}

/// Laplace approximation of `ln ∫ P(DMM | b) N(b; mu, Sigma) db`.
pub fn log_integral_m5(model: &MixingModel, prior: &MvnPrior) -> Result<LaplaceFit> {
    let post = Posterior::new(model, prior)?;
    let mut beta = prior.mean;
    let mut trace: Vec<NewtonTrace> = Vec::new();
    let mut iterations = 0;
    loop {
        let (value, grad, precision) = post.derivatives(&beta);
        if !value.is_finite() {
            return Err(Error::Optimization { iterations, trace });
        }
        let chol = damped_cholesky(&precision).ok_or_else(|| Error::Optimization { iterations, trace: trace.clone() })?;
        let step = chol.solve(&grad);
        let decrement = dot(&grad, &step);
        trace.push((iterations, value, decrement));
        if decrement <= 1e-12 * value.abs().max(1.0) {
            break;
        }
        if iterations == MAX_ITERATIONS {
            return Err(Error::Optimization { iterations, trace });
        }
        iterations += 1;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = add_scaled(&beta, t, &step);
            if post.value(&candidate) > value {
                beta = candidate;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No ascent left at floating-point resolution.
            if decrement <= 1e-6 * value.abs().max(1.0) {
                break;
            }
            return Err(Error::Optimization { iterations, trace });
        }
    }
    let (log_posterior, _, precision) = post.derivatives(&beta);
    let chol = Cholesky3::new(&precision).ok_or_else(|| {
        Error::DegeneratePosterior(format!("negative Hessian at the mode {beta:?} is not positive definite"))
    })?;
    Ok(LaplaceFit {
        mode: beta,
        log_posterior,
        precision,
        log_integral: log_posterior + 1.5 * LN_2PI - 0.5 * chol.log_det(),
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub log_integral: f64,
    /// Relative standard error of the integral.
    pub std_error_log: f64,
    pub samples: u64,
}

/// Importance-sampling estimate of the same integral, drawing from the
/// Laplace Gaussian with its covariance inflated by `1.2^2`.
pub fn monte_carlo_m5(
    model: &MixingModel,
    prior: &MvnPrior,
    fit: &LaplaceFit,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::domain("Monte Carlo estimate needs at least 2 samples"));
    }
    let post = Posterior::new(model, prior)?;
    let chol = Cholesky3::new(&fit.precision)
        .ok_or_else(|| Error::DegeneratePosterior("Laplace precision is not positive definite".into()))?;
    let log_q_norm = -1.5 * LN_2PI + 0.5 * chol.log_det() - 3.0 * ln(PROPOSAL_SCALE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = WeightAccumulator::default();
    for _ in 0..samples {
        let z: Vec3 = [
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        ];
        let offset = chol.solve_upper(&z);
        let beta = add_scaled(&fit.mode, PROPOSAL_SCALE, &offset);
        let log_q = log_q_norm - 0.5 * dot(&z, &z);
        let lw = post.value(&beta) - log_q;
        acc.push(if lw.is_finite() { Some(lw) } else { None });
    }
    Ok(MonteCarloEstimate {
        log_integral: acc.log_mean(),
        std_error_log: acc.relative_standard_error(),
        samples,
    })
}

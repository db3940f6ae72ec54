//! Empirical priors from a collection of other networks (typically the other
//! states when one state is analyzed): each network contributes a summary,
//! and prior hyperparameters are fit to the summaries by moments.
//!
//! Summaries are sorted before aggregation, so a fit is bit-for-bit
//! independent of the order of its inputs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evidence::{BetaPrior, DegreeLikelihood, ModelId, ModelPrior, MvnPrior, NormalPrior};
use crate::graph::Graph;
use crate::linalg::{add_scaled, dot, Cholesky3, Vec3};
use crate::math::{ln, ln_1p, ln_sigmoid, sigmoid, sqrt};
use crate::enumeration::type_block_capacities;
use crate::statistics::{degree_distribution, degree_mixing, type_mixing, DegreeDistribution, DegreeMixing};

/// Floor on the fitted standard deviation of `lambda`.
pub const LAMBDA_SD_FLOOR: f64 = 1e-6;
/// Ridge added to the fitted logistic-coefficient covariance.
pub const COVARIANCE_RIDGE: f64 = 1e-8;
/// Largest degree entering the per-network logistic fits.
pub const DEFAULT_MAX_DEGREE: usize = 300;
const IRLS_MAX_ITERATIONS: usize = 100;

/// A fitted prior with the per-network summaries behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorFitReport {
    pub target_state: Option<String>,
    pub model: ModelId,
    pub fitted: ModelPrior,
    /// Summary scalars per network used in the fit.
    pub per_state_summaries: BTreeMap<String, Vec<f64>>,
    /// Networks left out of the fit, with the reason.
    pub excluded: BTreeMap<String, String>,
}

fn sample_mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Method-of-moments beta fit to proportions in `(0, 1)`:
/// `alpha = m (m (1 - m) / v - 1)`, `beta = (1 - m)(m (1 - m) / v - 1)`.
pub fn beta_from_moments(proportions: &[f64]) -> Result<BetaPrior> {
    if proportions.len() < 2 {
        return Err(Error::domain(format!("a beta fit needs at least 2 networks, got {}", proportions.len())));
    }
    if let Some(p) = proportions.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::domain(format!("proportion {p} is outside (0, 1)")));
    }
    let (m, v) = sample_mean_var(&sorted(proportions));
    if !(v > 0.0) {
        return Err(Error::DegeneratePrior(
            "proportions have zero variance; add a variance floor or more networks".into(),
        ));
    }
    let common = m * (1.0 - m) / v - 1.0;
    if !(common > 0.0) {
        return Err(Error::DegeneratePrior(format!(
            "variance {v} is too large for a beta distribution with mean {m}"
        )));
    }
    BetaPrior::new(m * common, (1.0 - m) * common)
}

/// Sample mean and standard deviation, the latter floored at
/// [`LAMBDA_SD_FLOOR`].
pub fn normal_from_moments(values: &[f64]) -> Result<NormalPrior> {
    if values.len() < 2 {
        return Err(Error::domain(format!("a normal fit needs at least 2 networks, got {}", values.len())));
    }
    let (mean, var) = sample_mean_var(&sorted(values));
    Ok(NormalPrior { mean, sd: sqrt(var).max(LAMBDA_SD_FLOOR) })
}

/// Sample mean and covariance plus [`COVARIANCE_RIDGE`] on the diagonal.
pub fn mvn_from_moments(values: &[Vec3]) -> Result<MvnPrior> {
    if values.len() < 2 {
        return Err(Error::domain(format!("an MVN fit needs at least 2 networks, got {}", values.len())));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2])));
    let n = v.len() as f64;
    let mut mean = [0.0; 3];
    for x in &v {
        for i in 0..3 {
            mean[i] += x[i];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = [[0.0; 3]; 3];
    for x in &v {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]);
            }
        }
    }
    for (i, row) in cov.iter_mut().enumerate() {
        for c in row.iter_mut() {
            *c /= n - 1.0;
        }
        row[i] += COVARIANCE_RIDGE;
    }
    let prior = MvnPrior { mean, covariance: cov };
    prior.cholesky().map_err(|_| Error::DegeneratePrior("fitted covariance is not positive definite".into()))?;
    Ok(prior)
}

/// Edge density `E / (n (n - 1) / 2)`.
pub fn density(g: &Graph) -> Result<f64> {
    let pairs = g.pair_count();
    if pairs == 0 {
        return Err(Error::domain("a single vertex has no density"));
    }
    Ok(g.edge_count() as f64 / pairs as f64)
}

/// Maximum-likelihood exponential rate `1 / mean degree = n / 2E`; `None`
/// for a graph without edges.
pub fn lambda_hat(g: &Graph) -> Option<f64> {
    (g.edge_count() > 0).then(|| g.node_count() as f64 / (2.0 * g.edge_count() as f64))
}

/// Cells of the per-network logistic fit: `(x, successes, trials)` with
/// `x = (1, k, l)`, `k <= l <= max_degree`, and trials the number of vertex
/// pairs with those degrees.
pub fn logistic_cells(dmm: &DegreeMixing, dist: &DegreeDistribution, max_degree: usize) -> Vec<(Vec3, f64, f64)> {
    let degrees: Vec<(usize, u64)> = dist.nonzero().filter(|&(k, _)| k > 0 && k <= max_degree).collect();
    let mut cells = Vec::new();
    for (i, &(k, dk)) in degrees.iter().enumerate() {
        for &(l, dl) in &degrees[i..] {
            let trials = if k == l { dk * (dk - 1) / 2 } else { dk * dl };
            if trials == 0 {
                continue;
            }
            let y = dmm.get(k as u32, l as u32);
            cells.push(([1.0, k as f64, l as f64], y as f64, trials as f64));
        }
    }
    cells
}

fn binomial_log_likelihood(cells: &[(Vec3, f64, f64)], beta: &Vec3) -> f64 {
    cells
        .iter()
        .map(|(x, y, t)| {
            let eta = dot(beta, x);
            y * ln_sigmoid(eta) + (t - y) * ln_sigmoid(-eta)
        })
        .sum()
}

/// Binomial logistic regression of cell counts on `(1, k, l)` by Newton
/// (IRLS) with step halving.
pub fn fit_degree_logistic(dmm: &DegreeMixing, dist: &DegreeDistribution, max_degree: usize) -> Result<Vec3> {
    let cells = logistic_cells(dmm, dist, max_degree);
    let (ys, ts) = cells.iter().fold((0.0, 0.0), |(a, b), c| (a + c.1, b + c.2));
    if cells.len() < 3 || ys == 0.0 || ys == ts {
        return Err(Error::domain("too few cells or no variation in the degree-pair counts"));
    }
    let rate = ys / ts;
    let mut beta = [ln(rate) - ln_1p(-rate), 0.0, 0.0];
    let mut value = binomial_log_likelihood(&cells, &beta);
    for iteration in 0..IRLS_MAX_ITERATIONS {
        let mut grad = [0.0; 3];
        let mut info = [[0.0; 3]; 3];
        for (x, y, t) in &cells {
            let p = sigmoid(dot(&beta, x));
            let w = t * p * (1.0 - p);
            for i in 0..3 {
                grad[i] += (y - t * p) * x[i];
                for j in 0..3 {
                    info[i][j] += w * x[i] * x[j];
                }
            }
        }
        let Some(chol) = Cholesky3::new(&info) else {
            return Err(Error::Optimization { iterations: iteration, trace: Vec::new() });
        };
        let step = chol.solve(&grad);
        let decrement = dot(&grad, &step);
        if decrement <= 1e-20 * value.abs().max(1.0) {
            return Ok(beta);
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let candidate = add_scaled(&beta, t, &step);
            let v = binomial_log_likelihood(&cells, &candidate);
            if v > value {
                beta = candidate;
                value = v;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            if decrement <= 1e-6 * value.abs().max(1.0) {
                return Ok(beta);
            }
            return Err(Error::Optimization { iterations: iteration, trace: Vec::new() });
        }
    }
    Err(Error::Optimization { iterations: IRLS_MAX_ITERATIONS, trace: Vec::new() })
}

/// A named network for prior fitting.
#[derive(Debug, Clone, Copy)]
pub struct NamedGraph<'a> {
    pub name: &'a str,
    pub graph: &'a Graph,
}

/// Summary of one network for `model`, or the reason it is excluded.
fn summarize(g: &Graph, model: ModelId, max_degree: usize) -> core::result::Result<Vec<f64>, String> {
    match model {
        ModelId::M1 => Ok(Vec::new()),
        ModelId::M2 => {
            let d = density(g).map_err(|e| format!("{e}"))?;
            if !(d > 0.0 && d < 1.0) {
                return Err(format!("density {d} is outside (0, 1)"));
            }
            Ok(alloc::vec![d])
        }
        ModelId::M3 => lambda_hat(g).map(|l| alloc::vec![l]).ok_or_else(|| "no edges".into()),
        ModelId::M4 => {
            let t = type_mixing(g).map_err(|e| format!("{e}"))?;
            let (p, s, _) = g.type_counts();
            let caps = type_block_capacities(p as u64, s as u64);
            let counts = [t.primary_primary, t.primary_specialty, t.specialty_specialty];
            let mut out = Vec::with_capacity(3);
            for (c, e) in caps.iter().zip(counts) {
                let d = if *c == 0 { f64::NAN } else { e as f64 / *c as f64 };
                if !(d > 0.0 && d < 1.0) {
                    return Err(format!("block density {d} is outside (0, 1)"));
                }
                out.push(d);
            }
            Ok(out)
        }
        ModelId::M5 => fit_degree_logistic(&degree_mixing(g), &degree_distribution(g), max_degree)
            .map(|b| b.to_vec())
            .map_err(|e| format!("logistic fit failed: {e}")),
    }
}

/// Fits `model`'s prior on every network except `target`.
///
/// Networks whose summary is undefined (no edges, failed logistic fit, ...)
/// are listed in `excluded`. The m3 prior keeps the given degree likelihood.
pub fn fit_prior(
    states: &[NamedGraph<'_>],
    target: Option<&str>,
    model: ModelId,
    likelihood: DegreeLikelihood,
    max_degree: usize,
) -> Result<PriorFitReport> {
    let mut summaries = BTreeMap::new();
    let mut excluded = BTreeMap::new();
    for s in states {
        if Some(s.name) == target {
            continue;
        }
        if summaries.contains_key(s.name) || excluded.contains_key(s.name) {
            return Err(Error::domain(format!("network name {} appears twice", s.name)));
        }
        match summarize(s.graph, model, max_degree) {
            Ok(v) => {
                summaries.insert(String::from(s.name), v);
            }
            Err(reason) => {
                excluded.insert(String::from(s.name), reason);
            }
        }
    }
    let column = |i: usize| -> Vec<f64> { summaries.values().map(|v: &Vec<f64>| v[i]).collect() };
    let fitted = match model {
        ModelId::M1 => ModelPrior::M1,
        ModelId::M2 => ModelPrior::M2(beta_from_moments(&column(0))?),
        ModelId::M3 => ModelPrior::M3 { lambda: normal_from_moments(&column(0))?, likelihood },
        ModelId::M4 => ModelPrior::M4([
            beta_from_moments(&column(0))?,
            beta_from_moments(&column(1))?,
            beta_from_moments(&column(2))?,
        ]),
        ModelId::M5 => {
            let v: Vec<Vec3> = summaries.values().map(|s| [s[0], s[1], s[2]]).collect();
            ModelPrior::M5(mvn_from_moments(&v)?)
        }
    };
    Ok(PriorFitReport {
        target_state: target.map(String::from),
        model,
        fitted,
        per_state_summaries: summaries,
        excluded,
    })
}

pub fn fit_beta_density(states: &[&Graph]) -> Result<BetaPrior> {
    let d = states.iter().map(|g| density(g)).collect::<Result<Vec<_>>>()?;
    beta_from_moments(&d)
}

/// Normal prior on `lambda` from networks with at least one edge; returns
/// the prior and the indices of networks skipped for having none.
pub fn fit_lambda_normal(states: &[&Graph]) -> Result<(NormalPrior, Vec<usize>)> {
    let mut values = Vec::new();
    let mut skipped = Vec::new();
    for (i, g) in states.iter().enumerate() {
        match lambda_hat(g) {
            Some(l) => values.push(l),
            None => skipped.push(i),
        }
    }
    Ok((normal_from_moments(&values)?, skipped))
}

/// MVN prior on the logistic coefficients; networks whose fit fails are
/// skipped and their indices returned.
pub fn fit_mvn_degree_logistic(states: &[&Graph], max_degree: usize) -> Result<(MvnPrior, Vec<usize>)> {
    let mut values = Vec::new();
    let mut skipped = Vec::new();
    for (i, g) in states.iter().enumerate() {
        match fit_degree_logistic(&degree_mixing(g), &degree_distribution(g), max_degree) {
            Ok(b) => values.push(b),
            Err(_) => skipped.push(i),
        }
    }
    Ok((mvn_from_moments(&values)?, skipped))
}

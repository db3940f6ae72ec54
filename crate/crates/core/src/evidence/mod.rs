//! Log model evidence for the five congruence class models and posterior
//! model probabilities.
//!
//! Every evidence is split as `ln p(g | m) = ln I - ln |c_phi(phi(g))|`, where
//! `I` is the parameter integral of the statistic likelihood against the
//! prior. [`log_integral`] and [`volume_plan`] compute the two parts
//! separately (volume sampling can be slow and may run on other threads);
//! [`combine`] joins them.
//!
//! | model | statistic            | likelihood                            | prior        |
//! |-------|----------------------|---------------------------------------|--------------|
//! | m1    | edge count           | binomial                              | uniform      |
//! | m2    | edge count           | binomial                              | beta         |
//! | m3    | degree distribution  | exponential degrees, rate `lambda`    | normal       |
//! | m4    | type mixing          | three independent binomial blocks     | beta x 3     |
//! | m5    | degree mixing        | multinomial, logistic cell weights    | MVN          |

mod m3;
mod m5;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use m3::{log_integral_m3, DegreeLikelihood, M3Integral};
pub use m5::{
    log_integral_m5, monte_carlo_m5, LaplaceFit, MixingModel, MonteCarloEstimate,
};

use crate::enumeration::{
    log_volume_edges, log_volume_type_mixing, plan_degree_distribution, plan_degree_mixing,
    type_block_capacities, SamplingConfig, VolumeEstimate, VolumePlan,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{Cholesky3, Mat3, Vec3};
use crate::logvalue::LogValue;
use crate::math::{ln, ln_beta, ln_choose, exp};
use crate::quadrature::QuadratureOptions;
use crate::statistics::{degree_distribution, degree_mixing, type_mixing, StatisticKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4, ModelId::M5];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::M1 => "m1",
            ModelId::M2 => "m2",
            ModelId::M3 => "m3",
            ModelId::M4 => "m4",
            ModelId::M5 => "m5",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(name))
    }

    /// The statistic whose congruence classes the model is built on.
    pub fn statistic(self) -> StatisticKind {
        match self {
            ModelId::M1 | ModelId::M2 => StatisticKind::EdgeCount,
            ModelId::M3 => StatisticKind::DegreeDistribution,
            ModelId::M4 => StatisticKind::TypeMixing,
            ModelId::M5 => StatisticKind::DegreeMixing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    pub const UNIFORM: BetaPrior = BetaPrior { alpha: 1.0, beta: 1.0 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::domain(format!(
                "beta prior needs finite alpha, beta > 0 (got {}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Normal prior on `lambda`, used as a density on `lambda > 0` without
/// renormalizing the truncated mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl NormalPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.sd > 0.0 && self.sd.is_finite() && self.mean.is_finite()) {
            return Err(Error::domain(format!("normal prior needs a finite mean and sd > 0 (got sd {})", self.sd)));
        }
        Ok(())
    }
}

/// Multivariate normal prior on `(beta0, beta1, beta2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvnPrior {
    pub mean: Vec3,
    pub covariance: Mat3,
}

impl MvnPrior {
    pub fn cholesky(&self) -> Result<Cholesky3> {
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::domain("MVN prior mean must be finite"));
        }
        Cholesky3::new(&self.covariance)
            .ok_or_else(|| Error::domain("MVN prior covariance must be symmetric positive definite"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelPrior {
    M1,
    M2(BetaPrior),
    M3 {
        lambda: NormalPrior,
        #[serde(default)]
        likelihood: DegreeLikelihood,
    },
    /// Blocks in the order primary-primary, primary-specialty,
    /// specialty-specialty.
    M4([BetaPrior; 3]),
    M5(MvnPrior),
}

impl ModelPrior {
    pub fn id(&self) -> ModelId {
        match self {
            ModelPrior::M1 => ModelId::M1,
            ModelPrior::M2(_) => ModelId::M2,
            ModelPrior::M3 { .. } => ModelId::M3,
            ModelPrior::M4(_) => ModelId::M4,
            ModelPrior::M5(_) => ModelId::M5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelPrior::M1 => Ok(()),
            ModelPrior::M2(b) => b.validate(),
            ModelPrior::M3 { lambda, .. } => lambda.validate(),
            ModelPrior::M4(bs) => bs.iter().try_for_each(BetaPrior::validate),
            ModelPrior::M5(p) => p.cholesky().map(|_| ()),
        }
    }
}

/// A candidate model: hyperparameters plus its prior probability among the
/// candidates being compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub prior: ModelPrior,
    pub prior_model_prob: f64,
}

impl ModelSpec {
    pub fn new(prior: ModelPrior, prior_model_prob: f64) -> Self {
        Self { prior, prior_model_prob }
    }

    pub fn id(&self) -> ModelId {
        self.prior.id()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvidenceMethod {
    ClosedForm,
    Quadrature,
    Laplace,
    MonteCarlo,
}

/// The parameter integral of one model, before dividing by the volume.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralResult {
    pub model: ModelId,
    pub log_integral: f64,
    pub method: EvidenceMethod,
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceResult {
    pub model: ModelId,
    pub log_evidence: LogValue,
    pub log_volume: LogValue,
    pub log_integral: LogValue,
    pub method: EvidenceMethod,
    pub volume: VolumeEstimate,
    pub diagnostics: BTreeMap<String, f64>,
}

impl EvidenceResult {
    /// Standard error of `ln p(g | m)`, from the volume estimate and any
    /// Monte Carlo integral.
    pub fn std_error_log(&self) -> f64 {
        let mc = self.diagnostics.get("mc_std_error_log").copied().filter(|_| self.method == EvidenceMethod::MonteCarlo);
        let v = self.volume.std_error_log;
        match mc {
            Some(m) => crate::math::sqrt(v * v + m * m),
            None => v,
        }
    }
}

/// Options for integrals that are not closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralOptions {
    pub quadrature: QuadratureOptions,
    /// Replace the m5 Laplace value by an importance-sampling estimate with
    /// this many draws (the Laplace value is kept in the diagnostics).
    pub m5_monte_carlo: Option<(u64, u64)>,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self { quadrature: QuadratureOptions::default(), m5_monte_carlo: None }
    }
}

/// `ln ∫ C(N, E) p^E (1-p)^(N-E) Beta(p; a, b) dp`.
pub fn log_integral_beta_binomial(pairs: u64, edges: u64, prior: &BetaPrior) -> Result<f64> {
    prior.validate()?;
    if edges > pairs {
        return Err(Error::domain(format!("{edges} edges exceed {pairs} possible pairs")));
    }
    let (e, n) = (edges as f64, pairs as f64);
    Ok(ln_choose(pairs, edges) + ln_beta(e + prior.alpha, n - e + prior.beta) - ln_beta(prior.alpha, prior.beta))
}

/// The parameter integral of `prior`'s model for graph `g`.
pub fn log_integral(g: &Graph, prior: &ModelPrior, options: &IntegralOptions) -> Result<IntegralResult> {
    prior.validate()?;
    let model = prior.id();
    let mut diagnostics = BTreeMap::new();
    let closed = |log_integral: f64, diagnostics| IntegralResult {
        model,
        log_integral,
        method: EvidenceMethod::ClosedForm,
        diagnostics,
    };
    match prior {
        ModelPrior::M1 => Ok(closed(
            log_integral_beta_binomial(g.pair_count(), g.edge_count() as u64, &BetaPrior::UNIFORM)?,
            diagnostics,
        )),
        ModelPrior::M2(b) => Ok(closed(log_integral_beta_binomial(g.pair_count(), g.edge_count() as u64, b)?, diagnostics)),
        ModelPrior::M4(blocks) => {
            let t = type_mixing(g)?;
            let (p, s, _) = g.type_counts();
            let caps = type_block_capacities(p as u64, s as u64);
            let counts = [t.primary_primary, t.primary_specialty, t.specialty_specialty];
            let mut total = 0.0;
            for ((name, &cap), (&e, b)) in ["pp", "ps", "ss"].iter().zip(&caps).zip(counts.iter().zip(blocks)) {
                let part = log_integral_beta_binomial(cap, e, b)?;
                diagnostics.insert(format!("log_integral_{name}"), part);
                total += part;
            }
            Ok(closed(total, diagnostics))
        }
        ModelPrior::M3 { lambda, likelihood } => {
            let dist = degree_distribution(g);
            let r = log_integral_m3(&dist, lambda, *likelihood, &options.quadrature)?;
            diagnostics.insert("quadrature_relative_error".into(), r.quadrature.relative_error);
            diagnostics.insert("quadrature_intervals".into(), r.quadrature.intervals as f64);
            diagnostics.insert("lambda_mode".into(), r.mode);
            Ok(IntegralResult {
                model,
                log_integral: r.quadrature.log_value,
                method: EvidenceMethod::Quadrature,
                diagnostics,
            })
        }
        ModelPrior::M5(mvn) => {
            if g.edge_count() == 0 {
                return Err(Error::domain("m5 needs at least one edge"));
            }
            let mm = MixingModel::new(&degree_mixing(g), &degree_distribution(g))?;
            let fit = log_integral_m5(&mm, mvn)?;
            diagnostics.insert("newton_iterations".into(), fit.iterations as f64);
            diagnostics.insert("laplace_log_integral".into(), fit.log_integral);
            for (i, b) in fit.mode.iter().enumerate() {
                diagnostics.insert(format!("beta{i}_map"), *b);
            }
            diagnostics.insert("cells".into(), mm.cell_count() as f64);
            let mut result = IntegralResult {
                model,
                log_integral: fit.log_integral,
                method: EvidenceMethod::Laplace,
                diagnostics,
            };
            if let Some((samples, seed)) = options.m5_monte_carlo {
                let mc = monte_carlo_m5(&mm, mvn, &fit, samples, seed)?;
                result.diagnostics.insert("mc_log_integral".into(), mc.log_integral);
                result.diagnostics.insert("mc_std_error_log".into(), mc.std_error_log);
                result.diagnostics.insert("mc_samples".into(), samples as f64);
                result.log_integral = mc.log_integral;
                result.method = EvidenceMethod::MonteCarlo;
            }
            Ok(result)
        }
    }
}

/// Volume-factor work for `model` on `g`.
pub fn volume_plan(g: &Graph, model: ModelId, config: &SamplingConfig) -> Result<VolumePlan> {
    let n = g.node_count() as u64;
    match model {
        ModelId::M1 | ModelId::M2 => log_volume_edges(n, g.edge_count() as u64).map(VolumePlan::Ready),
        ModelId::M3 => plan_degree_distribution(&degree_distribution(g), config),
        ModelId::M4 => {
            let t = type_mixing(g)?;
            let (p, s, _) = g.type_counts();
            log_volume_type_mixing(p as u64, s as u64, t.primary_primary, t.primary_specialty, t.specialty_specialty)
                .map(VolumePlan::Ready)
        }
        ModelId::M5 => plan_degree_mixing(&degree_mixing(g), n, config),
    }
}

/// `ln p(g | m) = ln I - ln |c|`.
pub fn combine(integral: IntegralResult, volume: VolumeEstimate) -> EvidenceResult {
    let log_integral = LogValue::ln_unchecked(integral.log_integral);
    let log_evidence = LogValue::ln_unchecked(log_integral.ln() - volume.log_count.ln());
    let mut diagnostics = integral.diagnostics;
    diagnostics.insert("volume_std_error_log".into(), volume.std_error_log);
    EvidenceResult {
        model: integral.model,
        log_evidence,
        log_volume: volume.log_count,
        log_integral,
        method: integral.method,
        volume,
        diagnostics,
    }
}

/// Evidence of one model, running any volume sampling on the current thread.
pub fn evidence(g: &Graph, prior: &ModelPrior, config: &SamplingConfig, options: &IntegralOptions) -> Result<EvidenceResult> {
    let integral = log_integral(g, prior, options)?;
    let volume = volume_plan(g, prior.id(), config)?.run()?;
    Ok(combine(integral, volume))
}

pub fn evidence_m1(g: &Graph) -> Result<EvidenceResult> {
    evidence(g, &ModelPrior::M1, &SamplingConfig::default(), &IntegralOptions::default())
}

pub fn evidence_m2(g: &Graph, prior: BetaPrior) -> Result<EvidenceResult> {
    evidence(g, &ModelPrior::M2(prior), &SamplingConfig::default(), &IntegralOptions::default())
}

pub fn evidence_m3(g: &Graph, prior: NormalPrior, config: &SamplingConfig) -> Result<EvidenceResult> {
    let prior = ModelPrior::M3 { lambda: prior, likelihood: DegreeLikelihood::Density };
    evidence(g, &prior, config, &IntegralOptions::default())
}

pub fn evidence_m5(g: &Graph, prior: MvnPrior, config: &SamplingConfig) -> Result<EvidenceResult> {
    evidence(g, &ModelPrior::M5(prior), config, &IntegralOptions::default())
}

pub fn evidence_m4(g: &Graph, priors: [BetaPrior; 3]) -> Result<EvidenceResult> {
    evidence(g, &ModelPrior::M4(priors), &SamplingConfig::default(), &IntegralOptions::default())
}

/// Posterior model probabilities from log evidences and prior model
/// probabilities (which must sum to 1).
pub fn posterior_from_log_evidence(log_evidence: &[f64], prior_probs: &[f64]) -> Result<Vec<f64>> {
    if log_evidence.len() != prior_probs.len() {
        return Err(Error::domain("one prior probability per model is required"));
    }
    if log_evidence.len() < 2 {
        return Err(Error::domain("posterior probabilities need at least two models"));
    }
    for &p in prior_probs {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain(format!("prior model probability {p} is outside (0, 1]")));
        }
    }
    let total: f64 = prior_probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("prior model probabilities sum to {total}, not 1")));
    }
    if log_evidence.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(Error::DegeneratePosterior("log evidence is NaN or +inf".into()));
    }
    let joint: Vec<f64> = log_evidence.iter().zip(prior_probs).map(|(&e, &p)| e + ln(p)).collect();
    let top = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::DegeneratePosterior("every model has zero evidence".into()));
    }
    // Weights relative to the largest term keep the sum exact to rounding.
    let weights: Vec<f64> = joint.iter().map(|&j| exp(j - top)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| w / total).collect())
}

pub fn posterior_probabilities(results: &[(ModelSpec, EvidenceResult)]) -> Result<Vec<f64>> {
    if results.is_empty() {
        return Err(Error::domain("no models to compare"));
    }
    let le: Vec<f64> = results.iter().map(|(_, r)| r.log_evidence.ln()).collect();
    let pp: Vec<f64> = results.iter().map(|(s, _)| s.prior_model_prob).collect();
    posterior_from_log_evidence(&le, &pp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeType;

    fn path3() -> Graph {
        Graph::with_indices(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn m1_examples() {
        let g = Graph::with_indices(2, [(0, 1)]).unwrap();
        let r = evidence_m1(&g).unwrap();
        assert!((r.log_integral.ln() + 2f64.ln()).abs() < 1e-12);
        assert_eq!(r.log_volume.ln(), 0.0);
        assert!((r.log_evidence.ln() + 2f64.ln()).abs() < 1e-12);

        let g = Graph::with_indices(4, [(0, 1), (2, 3)]).unwrap();
        let r = evidence_m1(&g).unwrap();
        assert!((r.log_evidence.ln() + 15f64.ln() + 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn m1_integral_is_minus_log_pairs_plus_one() {
        for (pairs, e) in [(1u64, 0u64), (10, 3), (822_403, 12_749)] {
            let li = log_integral_beta_binomial(pairs, e, &BetaPrior::UNIFORM).unwrap();
            assert!((li + ((pairs + 1) as f64).ln()).abs() < 1e-7 * li.abs().max(1.0));
        }
    }

    #[test]
    fn m2_example_and_uniform_identity() {
        let g = Graph::with_indices(4, [(0, 1), (2, 3)]).unwrap();
        let r = evidence_m2(&g, BetaPrior::new(2.0, 2.0).unwrap()).unwrap();
        let expected = 15f64.ln() + ln_beta(4.0, 6.0) - ln_beta(2.0, 2.0);
        assert!((r.log_integral.ln() - expected).abs() < 1e-12);
        let a = evidence_m1(&g).unwrap();
        let b = evidence_m2(&g, BetaPrior::UNIFORM).unwrap();
        assert_eq!(a.log_evidence, b.log_evidence);
        assert!(BetaPrior::new(0.0, 1.0).is_err());
    }

    #[test]
    fn m4_two_by_two() {
        let g = Graph::with_indices(4, [(0, 1), (2, 3)])
            .unwrap()
            .with_types(alloc::vec![NodeType::Primary, NodeType::Primary, NodeType::Specialty, NodeType::Specialty])
            .unwrap();
        let r = evidence_m4(&g, [BetaPrior::UNIFORM; 3]).unwrap();
        // Blocks of capacity 1, 4, 1 holding 1, 0, 1 edges: 1/2 * 1/5 * 1/2.
        assert!((r.log_integral.ln() + 20f64.ln()).abs() < 1e-12);
        assert_eq!(r.log_volume.ln(), 0.0);
        assert!(matches!(evidence_m4(&path3(), [BetaPrior::UNIFORM; 3]), Err(Error::TypedAttributeMissing { node: 0 })));
    }

    #[test]
    fn m4_without_specialty_matches_m1() {
        let g = Graph::with_indices(4, [(0, 1), (1, 2)]).unwrap().with_types(alloc::vec![NodeType::Primary; 4]).unwrap();
        let a = evidence_m4(&g, [BetaPrior::UNIFORM; 3]).unwrap();
        let b = evidence_m1(&g).unwrap();
        assert!((a.log_evidence.ln() - b.log_evidence.ln()).abs() < 1e-12);
    }

    #[test]
    fn decomposition_is_exact() {
        let r = evidence_m2(&path3(), BetaPrior::new(0.7, 3.0).unwrap()).unwrap();
        assert_eq!(r.log_evidence.ln(), r.log_integral.ln() - r.log_volume.ln());
    }

    #[test]
    fn posterior_examples() {
        let p = posterior_from_log_evidence(&[(1.42f64).ln(), (6.75f64).ln()], &[0.5, 0.5]).unwrap();
        assert!((p[0] - 0.1738).abs() < 5e-4 && (p[1] - 0.8262).abs() < 5e-4);
        let p = posterior_from_log_evidence(&[-7.0; 4], &[0.25; 4]).unwrap();
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let p = posterior_from_log_evidence(&[0.0, 3f64.ln()], &[0.5, 0.5]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        assert!(posterior_from_log_evidence(&[0.0], &[1.0]).is_err());
        assert!(posterior_from_log_evidence(&[0.0, 0.0], &[0.5, 0.6]).is_err());
        assert!(posterior_probabilities(&[]).is_err());
    }

    #[test]
    fn model_names_round_trip() {
        for m in ModelId::ALL {
            assert_eq!(ModelId::from_name(m.name()), Some(m));
        }
    }
}

//! Prior hyperparameter files: one TOML section per model.
//!
//! ```toml
//! [m1]                      # no hyperparameters; the section may be omitted
//! prior_model_prob = 0.5    # optional in every section
//!
//! [m2]
//! alpha = 2.0
//! beta = 40.0
//!
//! [m3]
//! mean = 0.1
//! sd = 0.02
//! likelihood = "density"    # or "geometric"
//!
//! [m4]
//! pp_alpha = 1.0
//! pp_beta = 1.0
//! ps_alpha = 1.0
//! ps_beta = 1.0
//! ss_alpha = 1.0
//! ss_beta = 1.0
//!
//! [m5]
//! mean = [-3.0, 0.01, 0.0]
//! covariance = [[1.0, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.01]]
//! ```

use ccm_core::evidence::{BetaPrior, DegreeLikelihood, MvnPrior, NormalPrior};
use ccm_core::{ModelId, ModelPrior, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct M1Section {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_model_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct M2Section {
    pub alpha: f64,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_model_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct M3Section {
    pub mean: f64,
    pub sd: f64,
    #[serde(default)]
    pub likelihood: DegreeLikelihood,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_model_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct M4Section {
    pub pp_alpha: f64,
    pub pp_beta: f64,
    pub ps_alpha: f64,
    pub ps_beta: f64,
    pub ss_alpha: f64,
    pub ss_beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_model_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct M5Section {
    pub mean: [f64; 3],
    pub covariance: [[f64; 3]; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_model_prob: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<M1Section>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<M2Section>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m3: Option<M3Section>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m4: Option<M4Section>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m5: Option<M5Section>,
}

fn missing(model: ModelId) -> CliError {
    CliError::Config(format!("priors file has no [{}] section", model.name()))
}

impl PriorsFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("priors file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("priors serialize")
    }

    /// The prior for `model`; m1 needs no section.
    pub fn prior(&self, model: ModelId) -> Result<ModelPrior> {
        let prior = match model {
            ModelId::M1 => ModelPrior::M1,
            ModelId::M2 => {
                let s = self.m2.as_ref().ok_or_else(|| missing(model))?;
                ModelPrior::M2(BetaPrior { alpha: s.alpha, beta: s.beta })
            }
            ModelId::M3 => {
                let s = self.m3.as_ref().ok_or_else(|| missing(model))?;
                ModelPrior::M3 { lambda: NormalPrior { mean: s.mean, sd: s.sd }, likelihood: s.likelihood }
            }
            ModelId::M4 => {
                let s = self.m4.as_ref().ok_or_else(|| missing(model))?;
                ModelPrior::M4([
                    BetaPrior { alpha: s.pp_alpha, beta: s.pp_beta },
                    BetaPrior { alpha: s.ps_alpha, beta: s.ps_beta },
                    BetaPrior { alpha: s.ss_alpha, beta: s.ss_beta },
                ])
            }
            ModelId::M5 => {
                let s = self.m5.as_ref().ok_or_else(|| missing(model))?;
                ModelPrior::M5(MvnPrior { mean: s.mean, covariance: s.covariance })
            }
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn prior_model_prob(&self, model: ModelId) -> Option<f64> {
        match model {
            ModelId::M1 => self.m1.as_ref().and_then(|s| s.prior_model_prob),
            ModelId::M2 => self.m2.as_ref().and_then(|s| s.prior_model_prob),
            ModelId::M3 => self.m3.as_ref().and_then(|s| s.prior_model_prob),
            ModelId::M4 => self.m4.as_ref().and_then(|s| s.prior_model_prob),
            ModelId::M5 => self.m5.as_ref().and_then(|s| s.prior_model_prob),
        }
    }

    /// Replaces the section for `prior`'s model, keeping its prior model
    /// probability.
    pub fn set(&mut self, prior: &ModelPrior) {
        let keep = self.prior_model_prob(prior.id());
        match *prior {
            ModelPrior::M1 => self.m1 = Some(M1Section { prior_model_prob: keep }),
            ModelPrior::M2(b) => self.m2 = Some(M2Section { alpha: b.alpha, beta: b.beta, prior_model_prob: keep }),
            ModelPrior::M3 { lambda, likelihood } => {
                self.m3 = Some(M3Section { mean: lambda.mean, sd: lambda.sd, likelihood, prior_model_prob: keep })
            }
            ModelPrior::M4([pp, ps, ss]) => {
                self.m4 = Some(M4Section {
                    pp_alpha: pp.alpha,
                    pp_beta: pp.beta,
                    ps_alpha: ps.alpha,
                    ps_beta: ps.beta,
                    ss_alpha: ss.alpha,
                    ss_beta: ss.beta,
                    prior_model_prob: keep,
                })
            }
            ModelPrior::M5(m) => {
                self.m5 = Some(M5Section { mean: m.mean, covariance: m.covariance, prior_model_prob: keep })
            }
        }
    }

    /// Candidate specs for `models`. Prior model probabilities come from the
    /// file when every candidate has one, and are uniform when none has.
    pub fn specs(&self, models: &[ModelId]) -> Result<Vec<ModelSpec>> {
        let probs: Vec<Option<f64>> = models.iter().map(|&m| self.prior_model_prob(m)).collect();
        let given = probs.iter().filter(|p| p.is_some()).count();
        if given != 0 && given != models.len() {
            return Err(CliError::Config(
                "prior_model_prob must be set for every selected model or for none".into(),
            ));
        }
        models
            .iter()
            .zip(&probs)
            .map(|(&m, p)| Ok(ModelSpec::new(self.prior(m)?, p.unwrap_or(1.0 / models.len() as f64))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_every_model() {
        let mut f = PriorsFile::default();
        let priors = [
            ModelPrior::M1,
            ModelPrior::M2(BetaPrior { alpha: 2.5, beta: 40.0 }),
            ModelPrior::M3 { lambda: NormalPrior { mean: 0.1, sd: 0.02 }, likelihood: DegreeLikelihood::Geometric },
            ModelPrior::M4([BetaPrior { alpha: 1.0, beta: 2.0 }, BetaPrior { alpha: 3.0, beta: 4.0 }, BetaPrior::UNIFORM]),
            ModelPrior::M5(MvnPrior {
                mean: [-3.0, 0.01, -0.002],
                covariance: [[1.0, 0.1, 0.0], [0.1, 0.5, 0.0], [0.0, 0.0, 0.25]],
            }),
        ];
        for p in &priors {
            f.set(p);
        }
        let back = PriorsFile::parse(&f.to_toml()).unwrap();
        assert_eq!(back, f);
        for p in &priors {
            assert_eq!(back.prior(p.id()).unwrap(), *p);
        }
    }

    #[test]
    fn model_probabilities() {
        let f = PriorsFile::parse("[m2]\nalpha = 1.0\nbeta = 1.0\nprior_model_prob = 0.25\n[m3]\nmean = 0.2\nsd = 0.1\nprior_model_prob = 0.75\n").unwrap();
        let specs = f.specs(&[ModelId::M2, ModelId::M3]).unwrap();
        assert_eq!((specs[0].prior_model_prob, specs[1].prior_model_prob), (0.25, 0.75));
        assert!(f.specs(&[ModelId::M1, ModelId::M2]).is_err());
        let g = PriorsFile::parse("[m2]\nalpha = 1.0\nbeta = 1.0\n").unwrap();
        let specs = g.specs(&[ModelId::M1, ModelId::M2]).unwrap();
        assert_eq!(specs[1].prior_model_prob, 0.5);
    }

    #[test]
    fn invalid_or_missing_sections() {
        let f = PriorsFile::parse("[m2]\nalpha = -1.0\nbeta = 1.0\n").unwrap();
        assert!(matches!(f.prior(ModelId::M2), Err(CliError::Core(_))));
        assert!(matches!(f.prior(ModelId::M3), Err(CliError::Config(_))));
        assert!(PriorsFile::parse("[m6]\n").is_err());
    }
}

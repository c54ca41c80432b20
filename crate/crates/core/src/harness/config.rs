use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::environments::{Environment, Scenario};
use crate::error::{Error, Result};
use crate::learners::{
    ConcealedConfig, ConcealedLearner, Exp3, Exp3Config, FullInfoConfig, FullInformationLearner,
    Learner, PartiallyConcealedConfig, PartiallyConcealedLearner, Setting,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    DelayedFtrl,
    Exp3,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::DelayedFtrl => "delayed_ftrl",
            Algorithm::Exp3 => "exp3",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    #[serde(default)]
    pub algorithm: Algorithm,
    /// Prior over arms; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    /// Upper bound on the largest missing count for the bandit learners.
    /// Defaults to `max(1, realized rho_T^max)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub scenario: Scenario,
    #[serde(default)]
    pub learner: LearnerConfig,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.learner.algorithm == Algorithm::Exp3 && !self.setting.is_bandit() {
            return Err(Error::Config("exp3 runs in bandit settings only".into()));
        }
        if let Some(r) = self.learner.rho_star {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(Error::Config(format!("rho_star must be >= 1, got {r}")));
            }
        }
        Ok(())
    }

    /// Prior actually used (uniform when none is configured).
    pub fn prior(&self) -> Vec<f64> {
        let k = self.scenario.num_arms;
        self.learner
            .prior
            .clone()
            .unwrap_or_else(|| vec![1.0 / k as f64; k])
    }

    /// Configured `rho*`, or `max(1, realized)`.
    pub fn rho_star(&self, env: &Environment) -> f64 {
        self.learner
            .rho_star
            .unwrap_or_else(|| env.realized_rho_star().max(1) as f64)
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.setting == Setting::PartiallyConcealed {
            let t = self.scenario.horizon as f64;
            if self.prior().iter().any(|&p| p < 1.0 / (t * t)) {
                out.push(format!(
                    "prior has entries below 1/T^2 = {:e}; the partially concealed bound assumes otherwise",
                    1.0 / (t * t)
                ));
            }
        }
        out
    }

    pub fn build_learner(&self, env: &Environment) -> Result<Box<dyn Learner>> {
        let horizon = self.scenario.horizon;
        let num_arms = self.scenario.num_arms;
        let rho_star = self.rho_star(env);
        let prior = self.learner.prior.clone();
        Ok(match (self.learner.algorithm, self.setting) {
            (Algorithm::Exp3, setting) => Box::new(Exp3::new(Exp3Config {
                horizon,
                num_arms,
                setting,
            })?),
            (Algorithm::DelayedFtrl, Setting::FullInfo) => {
                Box::new(FullInformationLearner::new(FullInfoConfig {
                    horizon,
                    num_arms,
                    prior,
                })?)
            }
            (Algorithm::DelayedFtrl, Setting::PartiallyConcealed) => {
                Box::new(PartiallyConcealedLearner::new(PartiallyConcealedConfig {
                    horizon,
                    num_arms,
                    rho_star,
                    prior,
                })?)
            }
            (Algorithm::DelayedFtrl, Setting::Concealed) => {
                if prior.is_some() {
                    return Err(Error::Config(
                        "the concealed learner uses a uniform prior".into(),
                    ));
                }
                Box::new(ConcealedLearner::new(ConcealedConfig {
                    horizon,
                    num_arms,
                    rho_star,
                })?)
            }
        })
    }
}

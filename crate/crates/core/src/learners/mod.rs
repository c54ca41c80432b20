//! Delayed FTRL with corrections in three feedback models, plus an Exp3 baseline.

mod concealed;
mod exp3;
mod full_info;
pub mod grid;
mod partially_concealed;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

pub use concealed::{ConcealedConfig, ConcealedLearner};
pub use exp3::{Exp3, Exp3Config};
pub use full_info::{FullInfoConfig, FullInformationLearner};
pub use grid::{full_info_grid, grid_size, layered_prior, pc_gamma_grid, RateGrid};
pub use partially_concealed::{PartiallyConcealedConfig, PartiallyConcealedLearner};

use crate::delays::FeedbackEvent;
use crate::error::{Error, Result};
use crate::regularizers::{HybridRegularizer, PseudoIndex};

/// Feedback model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// All K losses of a round are observed, each after its own delay.
    #[serde(alias = "full_information")]
    FullInfo,
    /// Only the played arm's loss is observed, together with its missing count.
    PartiallyConcealed,
    /// Only the played arm's loss is observed.
    Concealed,
}

impl Setting {
    pub fn is_bandit(self) -> bool {
        !matches!(self, Setting::FullInfo)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::FullInfo => "full_info",
            Setting::PartiallyConcealed => "partially_concealed",
            Setting::Concealed => "concealed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub round: usize,
    /// Weights over all pseudo-experts.
    pub distribution: Vec<f64>,
    /// Weights over arms.
    pub marginal: Vec<f64>,
    /// Sampled arm; `None` in the full-information setting.
    pub action: Option<usize>,
}

/// A round-by-round online learner.
///
/// Per round the driver calls [`predict`](Learner::predict) once, then
/// [`absorb`](Learner::absorb) with whatever feedback is delivered at the end
/// of that round.
pub trait Learner: Send {
    fn setting(&self) -> Setting;

    fn name(&self) -> &'static str;

    /// Number of predictions made so far.
    fn round(&self) -> usize;

    fn predict(&mut self, rng: &mut dyn RngCore) -> Result<Prediction>;

    fn absorb(&mut self, events: &[FeedbackEvent]) -> Result<()>;

    /// The regularizer used by the most recent prediction.
    fn regularizer(&self) -> Option<&HybridRegularizer>;

    /// Cumulative corrected loss over delivered feedback.
    fn available_loss(&self) -> &[f64];

    fn layout(&self) -> PseudoIndex;

    /// The increment an event adds to [`available_loss`](Learner::available_loss)
    /// once delivered. Only valid for rounds already predicted.
    fn corrected_loss(&self, event: &FeedbackEvent) -> Result<Vec<f64>>;
}

/// Inverse-CDF draw from `q`.
pub fn sample_index(q: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.gen::<f64>() * q.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in q.iter().enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last
}

/// `1[played = arm] loss / (q + eps)`.
pub fn loss_estimate(played: usize, arm: usize, q: f64, eps: f64, loss: f64) -> Result<f64> {
    if !(q + eps > 0.0) {
        return Err(Error::Domain(format!(
            "importance weight denominator q + eps = {} must be positive",
            q + eps
        )));
    }
    Ok(if played == arm { loss / (q + eps) } else { 0.0 })
}

pub(crate) fn check_prior(prior: Option<Vec<f64>>, num_arms: usize) -> Result<Vec<f64>> {
    match prior {
        None => Ok(vec![1.0 / num_arms as f64; num_arms]),
        Some(p) => {
            if p.len() != num_arms {
                return Err(Error::Config(format!(
                    "prior has {} entries, expected {num_arms}",
                    p.len()
                )));
            }
            if p.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Config("prior entries must be positive".into()));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("prior sums to {s}, expected 1")));
            }
            Ok(p)
        }
    }
}

pub(crate) fn check_dimensions(horizon: usize, num_arms: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if num_arms < 2 {
        return Err(Error::Config("need at least two arms".into()));
    }
    Ok(())
}

pub(crate) fn check_rho_star(rho_star: f64) -> Result<()> {
    if !(rho_star >= 1.0 && rho_star.is_finite()) {
        return Err(Error::Config(format!(
            "rho_star must be a finite value >= 1, got {rho_star}"
        )));
    }
    Ok(())
}

pub(crate) fn check_event(event: &FeedbackEvent, predicted: usize, num_arms: usize) -> Result<()> {
    if event.origin_round == 0 || event.origin_round > predicted {
        return Err(Error::Protocol(format!(
            "feedback for round {} arrived before that round was played",
            event.origin_round
        )));
    }
    if event.arm >= num_arms {
        return Err(Error::Protocol(format!("feedback for unknown arm {}", event.arm)));
    }
    if !(0.0..=1.0).contains(&event.loss) {
        return Err(Error::Protocol(format!("loss {} outside [0, 1]", event.loss)));
    }
    Ok(())
}

use rand::RngCore;

use super::{check_dimensions, check_event, loss_estimate, sample_index, Learner, Prediction, Setting};
use crate::delays::FeedbackEvent;
use crate::error::{Error, Result};
use crate::regularizers::{HybridRegularizer, PseudoIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct Exp3Config {
    pub horizon: usize,
    pub num_arms: usize,
    /// Feedback model the baseline is wired into; must be a bandit setting.
    pub setting: Setting,
}

/// Exp3 with rate `sqrt(2 ln K / (K T))`, folding in feedback whenever it arrives.
#[derive(Debug, Clone)]
pub struct Exp3 {
    horizon: usize,
    setting: Setting,
    rate: f64,
    layout: PseudoIndex,
    available: Vec<f64>,
    plays: Vec<(usize, f64)>,
    regularizer: HybridRegularizer,
}

impl Exp3 {
    pub fn new(config: Exp3Config) -> Result<Self> {
        check_dimensions(config.horizon, config.num_arms)?;
        if !config.setting.is_bandit() {
            return Err(Error::Config("Exp3 needs a bandit setting".into()));
        }
        let k = config.num_arms;
        let rate = (2.0 * (k as f64).ln() / (k as f64 * config.horizon as f64)).sqrt();
        let layout = PseudoIndex::new(k, 1)?;
        Ok(Self {
            horizon: config.horizon,
            setting: config.setting,
            rate,
            layout,
            available: vec![0.0; k],
            plays: Vec::with_capacity(config.horizon),
            regularizer: HybridRegularizer::weighted_entropy(
                layout,
                vec![rate; k],
                vec![1.0 / k as f64; k],
            )?,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Learner for Exp3 {
    fn setting(&self) -> Setting {
        self.setting
    }

    fn name(&self) -> &'static str {
        "exp3"
    }

    fn round(&self) -> usize {
        self.plays.len()
    }

    fn predict(&mut self, rng: &mut dyn RngCore) -> Result<Prediction> {
        let t = self.round() + 1;
        if t > self.horizon {
            return Err(Error::Protocol(format!("horizon {} exhausted", self.horizon)));
        }
        let min = self.available.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self
            .available
            .iter()
            .map(|l| (-self.rate * (l - min)).exp())
            .collect();
        let z: f64 = w.iter().sum();
        let q: Vec<f64> = w.iter().map(|x| x / z).collect();
        let action = sample_index(&q, rng);
        self.plays.push((action, q[action]));
        Ok(Prediction {
            round: t,
            distribution: q.clone(),
            marginal: q,
            action: Some(action),
        })
    }

    fn absorb(&mut self, events: &[FeedbackEvent]) -> Result<()> {
        for event in events {
            let inc = self.corrected_loss(event)?;
            for (a, b) in self.available.iter_mut().zip(inc) {
                *a += b;
            }
        }
        Ok(())
    }

    fn regularizer(&self) -> Option<&HybridRegularizer> {
        (self.round() > 0).then_some(&self.regularizer)
    }

    fn available_loss(&self) -> &[f64] {
        &self.available
    }

    fn layout(&self) -> PseudoIndex {
        self.layout
    }

    fn corrected_loss(&self, event: &FeedbackEvent) -> Result<Vec<f64>> {
        check_event(event, self.round(), self.layout.num_arms())?;
        let (action, q) = self.plays[event.origin_round - 1];
        if action != event.arm {
            return Err(Error::Protocol(format!(
                "feedback for arm {} but arm {action} was played",
                event.arm
            )));
        }
        let mut out = vec![0.0; self.layout.len()];
        out[action] = loss_estimate(action, event.arm, q, 0.0, event.loss)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rate_and_uniform_start() {
        let mut e = Exp3::new(Exp3Config {
            horizon: 100,
            num_arms: 4,
            setting: Setting::Concealed,
        })
        .unwrap();
        assert!((e.rate() - (2.0 * 4f64.ln() / 400.0).sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = e.predict(&mut rng).unwrap();
        assert!(p.marginal.iter().all(|q| (q - 0.25).abs() < 1e-15));
        assert!(Exp3::new(Exp3Config {
            horizon: 100,
            num_arms: 4,
            setting: Setting::FullInfo,
        })
        .is_err());
    }
}

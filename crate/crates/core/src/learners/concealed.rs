use std::collections::BTreeMap;

use rand::RngCore;

use super::{
    check_dimensions, check_event, check_rho_star, loss_estimate, sample_index, Learner,
    Prediction, Setting,
};
use crate::delays::FeedbackEvent;
use crate::error::{Error, Result};
use crate::regularizers::{HybridRegularizer, PseudoIndex};
use crate::solver::Solver;

#[derive(Debug, Clone, PartialEq)]
pub struct ConcealedConfig {
    pub horizon: usize,
    pub num_arms: usize,
    pub rho_star: f64,
}

/// Bandit learner without any delay information.
///
/// Tsallis rate `1/sqrt(4t)`, implicit exploration `1/sqrt(t)`, and an entropy
/// rate that shrinks with the importance-weighted mass of the learner's own
/// undelivered plays.
#[derive(Debug, Clone)]
pub struct ConcealedLearner {
    horizon: usize,
    rho_star: f64,
    layout: PseudoIndex,
    available: Vec<f64>,
    /// `(action, q(action))` per predicted round.
    plays: Vec<(usize, f64)>,
    /// Undelivered own plays per arm: origin round -> `q_origin(arm)`.
    pending: Vec<BTreeMap<usize, f64>>,
    /// `sum_{s < t} sum_{s' in m_s(i_s), i_s' = i_s} 1 / q_s'(i_s)`.
    missing_mass: f64,
    /// Contribution of each round to `missing_mass`.
    mass_terms: Vec<f64>,
    solver: Solver,
    regularizer: Option<HybridRegularizer>,
    rates: (f64, f64),
}

impl ConcealedLearner {
    pub fn new(config: ConcealedConfig) -> Result<Self> {
        check_dimensions(config.horizon, config.num_arms)?;
        check_rho_star(config.rho_star)?;
        let layout = PseudoIndex::new(config.num_arms, 1)?;
        Ok(Self {
            horizon: config.horizon,
            rho_star: config.rho_star,
            layout,
            available: vec![0.0; config.num_arms],
            plays: Vec::with_capacity(config.horizon),
            pending: vec![BTreeMap::new(); config.num_arms],
            missing_mass: 0.0,
            mass_terms: Vec::with_capacity(config.horizon),
            solver: Solver::default(),
            regularizer: None,
            rates: (f64::NAN, f64::NAN),
        })
    }

    /// `(eta_t, gamma_t)` for round `t` given the current missing mass.
    pub fn rates_for(&self, round: usize) -> (f64, f64) {
        let t = round as f64;
        let eta = 1.0 / (4.0 * t).sqrt();
        let eps = exploration(round);
        let k = self.layout.num_arms() as f64;
        let gamma = (k.ln() / (self.rho_star / eps + self.missing_mass)).sqrt();
        (eta, gamma)
    }

    /// `(eta, gamma)` used by the most recent prediction.
    pub fn rates(&self) -> (f64, f64) {
        self.rates
    }

    pub fn missing_mass(&self) -> f64 {
        self.missing_mass
    }

    /// Term added to the missing mass by each predicted round.
    pub fn mass_terms(&self) -> &[f64] {
        &self.mass_terms
    }

    fn estimate(&self, event: &FeedbackEvent) -> Result<f64> {
        if event.missing_count.is_some() {
            return Err(Error::Protocol(
                "concealed feedback must not carry a missing count".into(),
            ));
        }
        let (action, q) = self.plays[event.origin_round - 1];
        if event.arm != action {
            return Err(Error::Protocol(format!(
                "feedback for arm {} but arm {action} was played at round {}",
                event.arm, event.origin_round
            )));
        }
        loss_estimate(action, event.arm, q, exploration(event.origin_round), event.loss)
    }
}

/// `eps_t = 1/sqrt(t)`.
pub fn exploration(round: usize) -> f64 {
    1.0 / (round as f64).sqrt()
}

impl Learner for ConcealedLearner {
    fn setting(&self) -> Setting {
        Setting::Concealed
    }

    fn name(&self) -> &'static str {
        "delayed_ftrl"
    }

    fn round(&self) -> usize {
        self.plays.len()
    }

    fn predict(&mut self, rng: &mut dyn RngCore) -> Result<Prediction> {
        let t = self.round() + 1;
        if t > self.horizon {
            return Err(Error::Protocol(format!("horizon {} exhausted", self.horizon)));
        }
        let (eta, gamma) = self.rates_for(t);
        let reg = HybridRegularizer::tsallis_entropy(self.layout.num_arms(), eta, gamma)?;
        let total: Vec<f64> = self
            .available
            .iter()
            .zip(reg.offset())
            .map(|(l, o)| l + o)
            .collect();
        let res = self.solver.solve(&total, &reg)?;
        let marginal = res.distribution.clone();
        let action = sample_index(&marginal, rng);
        let q = marginal[action];
        // Own plays of this arm still undelivered at the start of round t.
        let term: f64 = self.pending[action].values().map(|q| 1.0 / q).sum();
        self.missing_mass += term;
        self.mass_terms.push(term);
        self.pending[action].insert(t, q);
        self.plays.push((action, q));
        self.regularizer = Some(reg);
        self.rates = (eta, gamma);
        Ok(Prediction {
            round: t,
            distribution: res.distribution,
            marginal,
            action: Some(action),
        })
    }

    fn absorb(&mut self, events: &[FeedbackEvent]) -> Result<()> {
        for event in events {
            check_event(event, self.round(), self.layout.num_arms())?;
            let est = self.estimate(event)?;
            if self.pending[event.arm].remove(&event.origin_round).is_none() {
                return Err(Error::Protocol(format!(
                    "duplicate feedback for round {}",
                    event.origin_round
                )));
            }
            self.available[event.arm] += est;
        }
        Ok(())
    }

    fn regularizer(&self) -> Option<&HybridRegularizer> {
        self.regularizer.as_ref()
    }

    fn available_loss(&self) -> &[f64] {
        &self.available
    }

    fn layout(&self) -> PseudoIndex {
        self.layout
    }

    fn corrected_loss(&self, event: &FeedbackEvent) -> Result<Vec<f64>> {
        check_event(event, self.round(), self.layout.num_arms())?;
        let mut out = vec![0.0; self.layout.len()];
        out[event.arm] = self.estimate(event)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_round_rates() {
        let l = ConcealedLearner::new(ConcealedConfig {
            horizon: 10,
            num_arms: 4,
            rho_star: 2.0,
        })
        .unwrap();
        let (eta, gamma) = l.rates_for(1);
        assert_eq!(eta, 0.5);
        assert!((gamma - (4f64.ln() / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn estimate_is_bounded_by_inverse_exploration() {
        let mut l = ConcealedLearner::new(ConcealedConfig {
            horizon: 10,
            num_arms: 3,
            rho_star: 1.0,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = l.predict(&mut rng).unwrap();
        let a = p.action.unwrap();
        let ev = FeedbackEvent {
            origin_round: 1,
            arm: a,
            loss: 1.0,
            missing_count: None,
        };
        let inc = l.corrected_loss(&ev).unwrap();
        assert!((inc[a] - 1.0 / (p.marginal[a] + 1.0)).abs() < 1e-15);
        assert!(inc[a] <= 1.0);
        let with_rho = FeedbackEvent {
            missing_count: Some(0),
            ..ev.clone()
        };
        assert!(matches!(l.absorb(&[with_rho]), Err(Error::Protocol(_))));
        l.absorb(&[ev.clone()]).unwrap();
        assert!(l.absorb(&[ev]).is_err());
    }

    #[test]
    fn missing_mass_counts_only_own_pending_plays() {
        let mut l = ConcealedLearner::new(ConcealedConfig {
            horizon: 20,
            num_arms: 2,
            rho_star: 1.0,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut history = Vec::new();
        // Nothing is ever delivered: every earlier play of the same arm counts.
        for _ in 0..20 {
            let p = l.predict(&mut rng).unwrap();
            let a = p.action.unwrap();
            history.push((a, p.marginal[a]));
        }
        let mut brute = 0.0;
        for (s, &(a, _)) in history.iter().enumerate() {
            for &(b, q) in &history[..s] {
                if a == b {
                    brute += 1.0 / q;
                }
            }
        }
        assert!((l.missing_mass() - brute).abs() < 1e-9 * brute.max(1.0));
    }
}

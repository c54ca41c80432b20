use rand::RngCore;

use super::grid::{grid_size, layered_prior, pc_gamma_grid};
use super::{
    check_dimensions, check_event, check_prior, check_rho_star, sample_index, Learner, Prediction,
    Setting,
};
use crate::delays::FeedbackEvent;
use crate::error::{Error, Result};
use crate::regularizers::{HybridRegularizer, PseudoIndex};
use crate::solver::Solver;

#[derive(Debug, Clone, PartialEq)]
pub struct PartiallyConcealedConfig {
    pub horizon: usize,
    pub num_arms: usize,
    /// Upper bound on the largest missing count; must be at least one.
    pub rho_star: f64,
    pub prior: Option<Vec<f64>>,
}

/// Bandit learner that sees the missing count of each delivered loss.
/// Log barrier over arm marginals plus entropy over a fixed grid of rates.
#[derive(Debug, Clone)]
pub struct PartiallyConcealedLearner {
    horizon: usize,
    rho_star: f64,
    layout: PseudoIndex,
    gammas: Vec<f64>,
    psi_prior: Vec<f64>,
    phi_prior: Vec<f64>,
    available: Vec<f64>,
    /// Sum of delivered own losses.
    observed_loss: f64,
    /// `(action, q(action))` per predicted round.
    plays: Vec<(usize, f64)>,
    delivered: Vec<bool>,
    solver: Solver,
    regularizer: Option<HybridRegularizer>,
    barrier_rate: f64,
}

impl PartiallyConcealedLearner {
    pub fn new(config: PartiallyConcealedConfig) -> Result<Self> {
        check_dimensions(config.horizon, config.num_arms)?;
        check_rho_star(config.rho_star)?;
        if config.horizon < 2 {
            return Err(Error::Config(
                "the log-barrier rate needs a horizon of at least 2".into(),
            ));
        }
        let prior = check_prior(config.prior, config.num_arms)?;
        let j = grid_size(config.horizon);
        let layout = PseudoIndex::new(config.num_arms, j)?;
        let grid = pc_gamma_grid(config.num_arms, config.horizon, config.rho_star);
        Ok(Self {
            horizon: config.horizon,
            rho_star: config.rho_star,
            layout,
            gammas: grid.rates,
            psi_prior: vec![1.0 / layout.len() as f64; layout.len()],
            phi_prior: layered_prior(&prior, j),
            available: vec![0.0; layout.len()],
            observed_loss: 0.0,
            plays: Vec::with_capacity(config.horizon),
            delivered: Vec::with_capacity(config.horizon),
            solver: Solver::default(),
            regularizer: None,
            barrier_rate: f64::NAN,
        })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `eta_t` for the next prediction.
    pub fn next_barrier_rate(&self) -> f64 {
        let k = self.layout.num_arms() as f64;
        let ln_t = (self.horizon as f64).ln();
        (k * ln_t / (4.0 * (1.0 + self.rho_star) + 4.0 * self.observed_loss)).sqrt()
    }

    /// `eta` used by the most recent prediction.
    pub fn barrier_rate(&self) -> f64 {
        self.barrier_rate
    }

    pub fn observed_loss(&self) -> f64 {
        self.observed_loss
    }

    fn increment(&self, event: &FeedbackEvent) -> Result<Vec<f64>> {
        let rho = event.missing_count.ok_or_else(|| {
            Error::Protocol("partially concealed feedback must carry its missing count".into())
        })?;
        let (action, q) = self.plays[event.origin_round - 1];
        if event.arm != action {
            return Err(Error::Protocol(format!(
                "feedback for arm {} but arm {action} was played at round {}",
                event.arm, event.origin_round
            )));
        }
        let estimate = event.loss / q;
        let mut out = vec![0.0; self.layout.len()];
        for (j, g) in self.gammas.iter().enumerate() {
            out[self.layout.flat(action, j)] = estimate * (1.0 + 4.0 * g * rho as f64);
        }
        Ok(out)
    }
}

impl Learner for PartiallyConcealedLearner {
    fn setting(&self) -> Setting {
        Setting::PartiallyConcealed
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
        let eta = self.next_barrier_rate();
        let reg = HybridRegularizer::log_barrier_hybrid(
            self.layout,
            eta,
            &self.gammas,
            self.psi_prior.clone(),
            self.phi_prior.clone(),
        )?;
        let total: Vec<f64> = self
            .available
            .iter()
            .zip(reg.offset())
            .map(|(l, o)| l + o)
            .collect();
        let res = self.solver.solve(&total, &reg)?;
        let marginal = self.layout.marginals(&res.distribution);
        let action = sample_index(&marginal, rng);
        self.plays.push((action, marginal[action]));
        self.delivered.push(false);
        self.regularizer = Some(reg);
        self.barrier_rate = eta;
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
            let inc = self.increment(event)?;
            let seen = &mut self.delivered[event.origin_round - 1];
            if *seen {
                return Err(Error::Protocol(format!(
                    "duplicate feedback for round {}",
                    event.origin_round
                )));
            }
            *seen = true;
            self.observed_loss += event.loss;
            for (a, b) in self.available.iter_mut().zip(inc) {
                *a += b;
            }
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
        self.increment(event)
    }
}

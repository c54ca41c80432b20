use rand::RngCore;

use super::grid::{full_info_grid, grid_size, layered_prior};
use super::{check_dimensions, check_event, check_prior, Learner, Prediction, Setting};
use crate::delays::{update_rho_max, FeedbackEvent, MissingTracker};
use crate::error::{Error, Result};
use crate::regularizers::{HybridRegularizer, PseudoIndex};
use crate::solver::Solver;

#[derive(Debug, Clone, PartialEq)]
pub struct FullInfoConfig {
    pub horizon: usize,
    pub num_arms: usize,
    /// Prior over experts; uniform when absent.
    pub prior: Option<Vec<f64>>,
}

/// Full-information learner over `K x J` pseudo-experts `(i, eta_j)`.
///
/// The rate grid shrinks as `rho^max` grows; corrections for a delivered loss
/// use the grid of the round the loss was incurred.
#[derive(Debug, Clone)]
pub struct FullInformationLearner {
    horizon: usize,
    layout: PseudoIndex,
    prior: Vec<f64>,
    layered: Vec<f64>,
    available: Vec<f64>,
    tracker: MissingTracker,
    /// `grids[s - 1]` holds the rates used at round `s`.
    grids: Vec<Vec<f64>>,
    /// `rho[s - 1][i]` as seen by the learner at round `s`.
    rho: Vec<Vec<usize>>,
    solver: Solver,
    regularizer: Option<HybridRegularizer>,
}

impl FullInformationLearner {
    pub fn new(config: FullInfoConfig) -> Result<Self> {
        check_dimensions(config.horizon, config.num_arms)?;
        let prior = check_prior(config.prior, config.num_arms)?;
        let j = grid_size(config.horizon);
        let layout = PseudoIndex::new(config.num_arms, j)?;
        Ok(Self {
            horizon: config.horizon,
            layout,
            layered: layered_prior(&prior, j),
            prior,
            available: vec![0.0; layout.len()],
            tracker: MissingTracker::new(config.num_arms),
            grids: Vec::with_capacity(config.horizon),
            rho: Vec::with_capacity(config.horizon),
            solver: Solver::default(),
            regularizer: None,
        })
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// The grid used at `round`.
    pub fn grid_at(&self, round: usize) -> Option<&[f64]> {
        self.grids.get(round.checked_sub(1)?).map(Vec::as_slice)
    }

    pub fn rho_max(&self) -> usize {
        self.tracker.rho_max()
    }

    fn increment(&self, event: &FeedbackEvent) -> Result<Vec<f64>> {
        let rho = event.missing_count.ok_or_else(|| {
            Error::Protocol("full-information feedback must carry its missing count".into())
        })?;
        let own = self.rho[event.origin_round - 1][event.arm];
        if own != rho {
            return Err(Error::Protocol(format!(
                "missing count {rho} for round {} arm {} disagrees with the learner's {own}",
                event.origin_round, event.arm
            )));
        }
        let rates = &self.grids[event.origin_round - 1];
        let mut out = vec![0.0; self.layout.len()];
        for (j, eta) in rates.iter().enumerate() {
            out[self.layout.flat(event.arm, j)] =
                event.loss * (1.0 + 4.0 * eta * (1.0 + rho as f64));
        }
        Ok(out)
    }
}

impl Learner for FullInformationLearner {
    fn setting(&self) -> Setting {
        Setting::FullInfo
    }

    fn name(&self) -> &'static str {
        "delayed_ftrl"
    }

    fn round(&self) -> usize {
        self.grids.len()
    }

    fn predict(&mut self, _rng: &mut dyn RngCore) -> Result<Prediction> {
        let t = self.round() + 1;
        if t > self.horizon {
            return Err(Error::Protocol(format!("horizon {} exhausted", self.horizon)));
        }
        let k = self.layout.num_arms();
        let rho_now: Vec<usize> = (0..k).map(|i| self.tracker.missing(i)).collect();
        let rho_max = update_rho_max(&mut self.tracker, t);
        let grid = full_info_grid(t, rho_max, k, self.horizon);
        let rates: Vec<f64> = (0..k).flat_map(|_| grid.rates.iter().copied()).collect();
        let reg = HybridRegularizer::weighted_entropy(self.layout, rates, self.layered.clone())?;
        let total: Vec<f64> = self
            .available
            .iter()
            .zip(reg.offset())
            .map(|(l, o)| l + o)
            .collect();
        let res = self.solver.solve(&total, &reg)?;
        for i in 0..k {
            self.tracker.incur(i, t);
        }
        self.grids.push(grid.rates);
        self.rho.push(rho_now);
        self.regularizer = Some(reg);
        let marginal = self.layout.marginals(&res.distribution);
        Ok(Prediction {
            round: t,
            distribution: res.distribution,
            marginal,
            action: None,
        })
    }

    fn absorb(&mut self, events: &[FeedbackEvent]) -> Result<()> {
        for event in events {
            check_event(event, self.round(), self.layout.num_arms())?;
            let inc = self.increment(event)?;
            if !self.tracker.deliver(event.arm, event.origin_round) {
                return Err(Error::Protocol(format!(
                    "duplicate feedback for round {} arm {}",
                    event.origin_round, event.arm
                )));
            }
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

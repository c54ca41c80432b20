use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use crate::delays::{DeliveryQueue, FeedbackEvent, LossTable};
use crate::environments::Environment;
use crate::error::{Error, Result};
use crate::learners::{Learner, Prediction, Setting};

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// `q_t` over arms.
    pub marginal: Vec<f64>,
    pub action: Option<usize>,
    /// `<q_t, l_t>` with full information, `l_t(i_t)` otherwise.
    pub incurred: f64,
    /// Events delivered at the end of this round.
    pub delivered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub setting: Setting,
    pub rounds: Vec<RoundRecord>,
    /// `L_T(i)`.
    pub cumulative_loss: Vec<f64>,
    /// `L_T^rho(i) = sum_t l_t(i) rho_t(i)`.
    pub delay_weighted_loss: Vec<f64>,
    /// `sum_t sum_i q_t(i) rho_t(i)`.
    pub delay_mass: f64,
    pub rho_max: usize,
    pub generated: usize,
    pub delivered: usize,
    pub discarded: usize,
}

impl EpisodeTrace {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn total_incurred(&self) -> f64 {
        self.rounds.iter().map(|r| r.incurred).sum()
    }
}

/// What an observer sees right after the learner's prediction at a round.
pub struct RoundView<'a> {
    pub round: usize,
    pub learner: &'a dyn Learner,
    pub prediction: &'a Prediction,
    /// Feedback generated this round.
    pub fresh: &'a [FeedbackEvent],
    /// Feedback from earlier rounds not yet delivered.
    pub pending: &'a [FeedbackEvent],
}

/// Runs one episode. The learner's sampling stream is seeded by `seed`.
pub fn run_episode(config: &ExperimentConfig, env: &Environment, seed: u64) -> Result<EpisodeTrace> {
    run_episode_observed(config, env, seed, |_| Ok(()))
}

/// Like [`run_episode`], calling `observe` after every prediction.
pub fn run_episode_observed(
    config: &ExperimentConfig,
    env: &Environment,
    seed: u64,
    mut observe: impl FnMut(&RoundView<'_>) -> Result<()>,
) -> Result<EpisodeTrace> {
    if env.horizon() != config.scenario.horizon || env.num_arms() != config.scenario.num_arms {
        return Err(Error::Config("environment does not match the scenario".into()));
    }
    let mut learner = config.build_learner(env)?;
    let setting = config.setting;
    let horizon = env.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queue = DeliveryQueue::new(horizon);
    let mut rounds = Vec::with_capacity(horizon);
    let mut delay_mass = 0.0;
    let mut delivered_total = 0;
    let mut pending_buf: Vec<FeedbackEvent> = Vec::new();

    for t in 1..=horizon {
        let prediction = learner.predict(&mut rng).map_err(|e| annotate(e, t))?;
        let row = env.losses.row(t);
        let incurred = match (setting, prediction.action) {
            (Setting::FullInfo, _) => dot(&prediction.marginal, row),
            (_, Some(a)) => row[a],
            (_, None) => {
                return Err(Error::Protocol(format!("no action at round {t}")));
            }
        };
        let rho = env.missing.row(t);
        delay_mass += prediction
            .marginal
            .iter()
            .zip(rho)
            .map(|(q, r)| q * *r as f64)
            .sum::<f64>();
        let action = if setting.is_bandit() { prediction.action } else { None };
        let routed = env.route(setting, t, action)?;

        pending_buf.clear();
        pending_buf.extend(queue.pending().map(|(_, e)| e.clone()));
        let fresh: Vec<FeedbackEvent> = routed.iter().map(|(_, e)| e.clone()).collect();
        observe(&RoundView {
            round: t,
            learner: learner.as_ref(),
            prediction: &prediction,
            fresh: &fresh,
            pending: &pending_buf,
        })?;

        for (delivery, event) in routed {
            queue.push(delivery, event);
        }
        let deliveries = queue.deliveries_at(t);
        learner.absorb(&deliveries).map_err(|e| annotate(e, t))?;
        delivered_total += deliveries.len();
        rounds.push(RoundRecord {
            round: t,
            marginal: prediction.marginal,
            action,
            incurred,
            delivered: deliveries.len(),
        });
    }
    let generated = queue.generated();
    let discarded = queue.discard_remaining();
    Ok(EpisodeTrace {
        seed,
        setting,
        rounds,
        cumulative_loss: env.losses.cumulative(),
        delay_weighted_loss: env.missing.delay_weighted_losses(&env.losses),
        delay_mass,
        rho_max: env.realized_rho_star(),
        generated,
        delivered: delivered_total,
        discarded,
    })
}

fn annotate(e: Error, round: usize) -> Error {
    match e {
        Error::Solver {
            message,
            best_residual,
        } => Error::Solver {
            message: format!("round {round}: {message}"),
            best_residual,
        },
        Error::Protocol(m) => Error::Protocol(format!("round {round}: {m}")),
        other => other,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Comparator {
    /// `argmin_i L_T(i)`, lowest index on ties.
    BestArm,
    Arm(usize),
    Distribution(Vec<f64>),
}

impl Comparator {
    /// The comparator as a distribution over arms.
    pub fn resolve(&self, losses: &LossTable) -> Result<Vec<f64>> {
        let k = losses.num_arms();
        match self {
            Comparator::BestArm => {
                let mut u = vec![0.0; k];
                u[best_arm(&losses.cumulative())] = 1.0;
                Ok(u)
            }
            Comparator::Arm(i) => {
                if *i >= k {
                    return Err(Error::Argument(format!("comparator arm {i} out of range")));
                }
                let mut u = vec![0.0; k];
                u[*i] = 1.0;
                Ok(u)
            }
            Comparator::Distribution(u) => {
                if u.len() != k || u.iter().any(|&x| !(x >= 0.0)) {
                    return Err(Error::Argument("comparator must be a distribution".into()));
                }
                Ok(u.clone())
            }
        }
    }
}

pub fn best_arm(cumulative: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in cumulative.iter().enumerate() {
        if l < cumulative[best] {
            best = i;
        }
    }
    best
}

/// Realized regret against `comparator`, recomputed from the loss table.
pub fn regret(trace: &EpisodeTrace, losses: &LossTable, comparator: &Comparator) -> Result<f64> {
    let u = comparator.resolve(losses)?;
    if trace.horizon() != losses.horizon() {
        return Err(Error::Argument("trace and loss table lengths differ".into()));
    }
    let mut incurred = 0.0;
    for r in &trace.rounds {
        let row = losses.row(r.round);
        incurred += match (trace.setting, r.action) {
            (Setting::FullInfo, _) => dot(&r.marginal, row),
            (_, Some(a)) => row[a],
            (_, None) => return Err(Error::Argument("bandit trace without actions".into())),
        };
    }
    Ok(incurred - dot(&u, &losses.cumulative()))
}

/// Regret accumulated up to each round against a fixed comparator.
pub fn cumulative_regret(trace: &EpisodeTrace, losses: &LossTable, u: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    trace
        .rounds
        .iter()
        .map(|r| {
            acc += r.incurred - dot(u, losses.row(r.round));
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{DelayKind, LossKind, Scenario};
    use crate::harness::config::LearnerConfig;

    fn config(setting: Setting, horizon: usize, loss: LossKind, delay: DelayKind) -> ExperimentConfig {
        ExperimentConfig {
            setting,
            scenario: Scenario {
                horizon,
                num_arms: 2,
                seed: 3,
                loss,
                delay,
            },
            learner: LearnerConfig::default(),
            seeds: vec![0],
            output: None,
        }
    }

    #[test]
    fn single_round_predicts_prior() {
        let c = config(
            Setting::FullInfo,
            1,
            LossKind::Constant { values: vec![0.0, 1.0] },
            DelayKind::Zero,
        );
        let env = Environment::generate(&c.scenario).unwrap();
        let tr = run_episode(&c, &env, 0).unwrap();
        assert_eq!(tr.rounds.len(), 1);
        assert!((tr.rounds[0].marginal[0] - 0.5).abs() < 1e-12);
        assert_eq!(tr.generated, 2);
    }

    #[test]
    fn full_info_shifts_to_better_arm() {
        let c = config(
            Setting::FullInfo,
            50,
            LossKind::Constant { values: vec![0.0, 1.0] },
            DelayKind::Zero,
        );
        let env = Environment::generate(&c.scenario).unwrap();
        let tr = run_episode(&c, &env, 0).unwrap();
        for w in tr.rounds.windows(2) {
            assert!(w[1].marginal[0] > w[0].marginal[0]);
        }
    }

    #[test]
    fn deterministic_traces() {
        let c = config(
            Setting::Concealed,
            80,
            LossKind::BernoulliGap {
                gap: 0.3,
                best_mean: 0.2,
                best_arm: 1,
            },
            DelayKind::RandomBounded { d_max: 5 },
        );
        let env = Environment::generate(&c.scenario).unwrap();
        assert_eq!(run_episode(&c, &env, 9).unwrap(), run_episode(&c, &env, 9).unwrap());
    }

    #[test]
    fn delivery_accounting() {
        let c = config(
            Setting::PartiallyConcealed,
            30,
            LossKind::BernoulliGap {
                gap: 0.3,
                best_mean: 0.2,
                best_arm: 0,
            },
            DelayKind::Constant { delay: 4 },
        );
        let env = Environment::generate(&c.scenario).unwrap();
        let tr = run_episode(&c, &env, 1).unwrap();
        assert_eq!(tr.generated, 30);
        assert_eq!(tr.discarded, 4);
        assert_eq!(tr.delivered, 26);
        let r = regret(&tr, &env.losses, &Comparator::BestArm).unwrap();
        assert!((r - (tr.total_incurred() - env.losses.cumulative()[best_arm(&env.losses.cumulative())])).abs() < 1e-12);
    }

    #[test]
    fn hand_regret() {
        let losses = LossTable::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let trace = EpisodeTrace {
            seed: 0,
            setting: Setting::FullInfo,
            rounds: (1..=2)
                .map(|t| RoundRecord {
                    round: t,
                    marginal: vec![0.5, 0.5],
                    action: None,
                    incurred: 0.5,
                    delivered: 2,
                })
                .collect(),
            cumulative_loss: vec![0.0, 2.0],
            delay_weighted_loss: vec![0.0, 0.0],
            delay_mass: 0.0,
            rho_max: 0,
            generated: 4,
            delivered: 4,
            discarded: 0,
        };
        assert_eq!(regret(&trace, &losses, &Comparator::Arm(0)).unwrap(), 1.0);
        assert_eq!(
            regret(&trace, &losses, &Comparator::Distribution(vec![0.5, 0.5])).unwrap(),
            0.0
        );
        assert_eq!(cumulative_regret(&trace, &losses, &[1.0, 0.0]), vec![0.5, 1.0]);
    }
}

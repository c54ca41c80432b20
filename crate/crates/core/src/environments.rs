//! Oblivious loss and delay generators, and feedback routing per setting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::delays::{DelaySchedule, FeedbackEvent, LossTable, MissingCounts};
use crate::error::{Error, Result};
use crate::learners::Setting;

fn default_gap() -> f64 {
    0.3
}

fn default_best_mean() -> f64 {
    0.2
}

fn default_phases() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossKind {
    /// Bernoulli losses; `best_arm` has mean `best_mean`, the rest `best_mean + gap`.
    BernoulliGap {
        #[serde(default = "default_gap")]
        gap: f64,
        #[serde(default = "default_best_mean")]
        best_mean: f64,
        #[serde(default)]
        best_arm: usize,
    },
    /// Like `bernoulli_gap`, but the best arm moves to `phase mod K` in each of
    /// `phases` equal blocks of rounds.
    AdversarialDrift {
        #[serde(default = "default_gap")]
        gap: f64,
        #[serde(default = "default_best_mean")]
        best_mean: f64,
        #[serde(default = "default_phases")]
        phases: usize,
    },
    /// Deterministic losses: one value for every arm, or one per arm.
    Constant { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayKind {
    Zero,
    Constant {
        delay: usize,
    },
    ArmConstant {
        delays: Vec<usize>,
    },
    /// Arm with mean loss `mu` waits `ceil(d_max (1 - mu))` rounds.
    InverseLoss {
        d_max: usize,
    },
    /// Independent uniform delays on `0..=d_max`.
    RandomBounded {
        d_max: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub horizon: usize,
    pub num_arms: usize,
    #[serde(default)]
    pub seed: u64,
    pub loss: LossKind,
    pub delay: DelayKind,
}

const LOSS_STREAM: u64 = 1;
const DELAY_STREAM: u64 = 2;

fn check_mean(mu: f64) -> Result<()> {
    if (0.0..=1.0).contains(&mu) {
        Ok(())
    } else {
        Err(Error::Config(format!("mean loss {mu} outside [0, 1]")))
    }
}

impl LossKind {
    /// Mean loss of `arm` at `round`.
    fn mean(&self, horizon: usize, num_arms: usize, round: usize, arm: usize) -> f64 {
        match self {
            LossKind::BernoulliGap {
                gap,
                best_mean,
                best_arm,
            } => {
                if arm == *best_arm {
                    *best_mean
                } else {
                    best_mean + gap
                }
            }
            LossKind::AdversarialDrift {
                gap,
                best_mean,
                phases,
            } => {
                let len = horizon.div_ceil(*phases).max(1);
                let best = ((round - 1) / len) % num_arms;
                if arm == best {
                    *best_mean
                } else {
                    best_mean + gap
                }
            }
            LossKind::Constant { values } => {
                if values.len() == 1 {
                    values[0]
                } else {
                    values[arm]
                }
            }
        }
    }

    /// Per-arm mean loss averaged over rounds.
    pub fn nominal_means(&self, horizon: usize, num_arms: usize) -> Vec<f64> {
        (0..num_arms)
            .map(|arm| match self {
                LossKind::AdversarialDrift { .. } => {
                    (1..=horizon)
                        .map(|t| self.mean(horizon, num_arms, t, arm))
                        .sum::<f64>()
                        / horizon as f64
                }
                _ => self.mean(horizon, num_arms, 1, arm),
            })
            .collect()
    }

    fn validate(&self, num_arms: usize) -> Result<()> {
        match self {
            LossKind::BernoulliGap {
                gap,
                best_mean,
                best_arm,
            } => {
                if *best_arm >= num_arms {
                    return Err(Error::Config(format!("best_arm {best_arm} out of range")));
                }
                check_mean(*best_mean)?;
                check_mean(best_mean + gap)
            }
            LossKind::AdversarialDrift {
                gap,
                best_mean,
                phases,
            } => {
                if *phases == 0 {
                    return Err(Error::Config("phases must be positive".into()));
                }
                check_mean(*best_mean)?;
                check_mean(best_mean + gap)
            }
            LossKind::Constant { values } => {
                if values.len() != 1 && values.len() != num_arms {
                    return Err(Error::Config(format!(
                        "constant losses need 1 or {num_arms} values, got {}",
                        values.len()
                    )));
                }
                values.iter().try_for_each(|&v| check_mean(v))
            }
        }
    }
}

impl Scenario {
    /// Builds the loss table and delay schedule. Pure in `self`.
    pub fn generate(&self) -> Result<(LossTable, DelaySchedule)> {
        let (t_max, k) = (self.horizon, self.num_arms);
        if t_max == 0 || k == 0 {
            return Err(Error::Config("horizon and num_arms must be positive".into()));
        }
        self.loss.validate(k)?;

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(LOSS_STREAM);
        let mut values = Vec::with_capacity(t_max * k);
        for t in 1..=t_max {
            for i in 0..k {
                let v = match &self.loss {
                    LossKind::Constant { .. } => self.loss.mean(t_max, k, t, i),
                    _ => {
                        let mu = self.loss.mean(t_max, k, t, i);
                        if rng.gen::<f64>() < mu {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                values.push(v);
            }
        }
        let losses = LossTable::new(t_max, k, values)?;

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(DELAY_STREAM);
        let per_arm: Option<Vec<usize>> = match &self.delay {
            DelayKind::Zero => Some(vec![0; k]),
            DelayKind::Constant { delay } => Some(vec![*delay; k]),
            DelayKind::ArmConstant { delays } => {
                if delays.len() != k {
                    return Err(Error::Config(format!(
                        "arm_constant needs {k} delays, got {}",
                        delays.len()
                    )));
                }
                Some(delays.clone())
            }
            DelayKind::InverseLoss { d_max } => Some(
                self.loss
                    .nominal_means(t_max, k)
                    .into_iter()
                    .map(|mu| inverse_loss_delay(*d_max, mu))
                    .collect(),
            ),
            DelayKind::RandomBounded { .. } => None,
        };
        let delays = match (per_arm, &self.delay) {
            (Some(d), _) => (0..t_max).flat_map(|_| d.iter().copied()).collect(),
            (None, DelayKind::RandomBounded { d_max }) => {
                (0..t_max * k).map(|_| rng.gen_range(0..=*d_max)).collect()
            }
            (None, _) => unreachable!(),
        };
        Ok((losses, DelaySchedule::new(t_max, k, delays)?))
    }
}

/// `ceil(d_max (1 - mu))`, robust to rounding just above an integer.
pub fn inverse_loss_delay(d_max: usize, mean: f64) -> usize {
    let x = d_max as f64 * (1.0 - mean);
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Generated tables plus the missing-count table derived from them.
#[derive(Debug, Clone)]
pub struct Environment {
    pub losses: LossTable,
    pub delays: DelaySchedule,
    pub missing: MissingCounts,
}

impl Environment {
    pub fn new(losses: LossTable, delays: DelaySchedule) -> Result<Self> {
        if losses.horizon() != delays.horizon() || losses.num_arms() != delays.num_arms() {
            return Err(Error::Argument(
                "loss table and delay schedule dimensions differ".into(),
            ));
        }
        let missing = MissingCounts::from_schedule(&delays);
        Ok(Self {
            losses,
            delays,
            missing,
        })
    }

    pub fn generate(scenario: &Scenario) -> Result<Self> {
        let (losses, delays) = scenario.generate()?;
        Self::new(losses, delays)
    }

    pub fn horizon(&self) -> usize {
        self.losses.horizon()
    }

    pub fn num_arms(&self) -> usize {
        self.losses.num_arms()
    }

    /// `rho_T^max` of the schedule.
    pub fn realized_rho_star(&self) -> usize {
        self.missing.max()
    }

    /// Feedback produced by playing `action` at `round`, with delivery rounds.
    pub fn route(
        &self,
        setting: Setting,
        round: usize,
        action: Option<usize>,
    ) -> Result<Vec<(usize, FeedbackEvent)>> {
        if round == 0 || round > self.horizon() {
            return Err(Error::Argument(format!("round {round} out of range")));
        }
        let event = |arm: usize, with_rho: bool| {
            (
                self.delays.delivery_round(round, arm),
                FeedbackEvent {
                    origin_round: round,
                    arm,
                    loss: self.losses.loss(round, arm),
                    missing_count: with_rho.then(|| self.missing.get(round, arm)),
                },
            )
        };
        match (setting, action) {
            (Setting::FullInfo, None) => Ok((0..self.num_arms()).map(|i| event(i, true)).collect()),
            (Setting::FullInfo, Some(_)) => Err(Error::Protocol(
                "full-information rounds take no action".into(),
            )),
            (_, None) => Err(Error::Protocol("bandit rounds need an action".into())),
            (_, Some(a)) if a >= self.num_arms() => {
                Err(Error::Protocol(format!("action {a} out of range")))
            }
            (Setting::PartiallyConcealed, Some(a)) => Ok(vec![event(a, true)]),
            (Setting::Concealed, Some(a)) => Ok(vec![event(a, false)]),
        }
    }
}

/// `rho_T^max` by direct enumeration over every `(t, i)`.
pub fn realized_rho_star(schedule: &DelaySchedule) -> usize {
    let mut best = 0;
    for i in 0..schedule.num_arms() {
        for t in 1..=schedule.horizon() {
            let count = (1..t)
                .filter(|&s| s + schedule.delay(s, i) >= t)
                .count();
            best = best.max(count);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delays::missing_count;

    fn scenario(loss: LossKind, delay: DelayKind) -> Scenario {
        Scenario {
            horizon: 60,
            num_arms: 3,
            seed: 42,
            loss,
            delay,
        }
    }

    fn gap() -> LossKind {
        LossKind::BernoulliGap {
            gap: 0.3,
            best_mean: 0.2,
            best_arm: 0,
        }
    }

    #[test]
    fn zero_and_constant() {
        let s = scenario(
            LossKind::Constant { values: vec![0.3] },
            DelayKind::Zero,
        );
        let (l, d) = s.generate().unwrap();
        assert!((1..=60).all(|t| (0..3).all(|i| l.loss(t, i) == 0.3 && d.delay(t, i) == 0)));
        let env = Environment::new(l, d).unwrap();
        assert_eq!(env.realized_rho_star(), 0);
    }

    #[test]
    fn deterministic_generation() {
        let s = scenario(gap(), DelayKind::RandomBounded { d_max: 4 });
        let (l1, d1) = s.generate().unwrap();
        let (l2, d2) = s.generate().unwrap();
        assert_eq!(l1, l2);
        assert_eq!(d1, d2);
        let rho = realized_rho_star(&d1);
        assert!(rho <= 4);
        assert_eq!(rho, MissingCounts::from_schedule(&d1).max());
    }

    #[test]
    fn constant_delay_rho() {
        for d in [0, 1, 3, 100] {
            let s = scenario(gap(), DelayKind::Constant { delay: d });
            let env = Environment::generate(&s).unwrap();
            assert_eq!(env.realized_rho_star(), d.min(59));
        }
    }

    #[test]
    fn inverse_loss_is_monotone() {
        let s = Scenario {
            num_arms: 4,
            ..scenario(
                LossKind::Constant {
                    values: vec![0.1, 0.9, 0.5, 0.2],
                },
                DelayKind::InverseLoss { d_max: 10 },
            )
        };
        let (_, d) = s.generate().unwrap();
        assert_eq!(
            (0..4).map(|i| d.delay(1, i)).collect::<Vec<_>>(),
            vec![9, 1, 5, 8]
        );
        let means = s.loss.nominal_means(60, 4);
        for a in 0..4 {
            for b in 0..4 {
                if means[a] < means[b] {
                    assert!(d.delay(1, a) >= d.delay(1, b));
                }
            }
        }
    }

    #[test]
    fn drift_moves_best_arm() {
        let s = scenario(
            LossKind::AdversarialDrift {
                gap: 0.5,
                best_mean: 0.0,
                phases: 3,
            },
            DelayKind::Zero,
        );
        let (l, _) = s.generate().unwrap();
        assert_eq!(l.loss(1, 0), 0.0);
        assert_eq!(l.loss(21, 1), 0.0);
        assert_eq!(l.loss(60, 2), 0.0);
    }

    #[test]
    fn routing() {
        let s = scenario(
            gap(),
            DelayKind::ArmConstant {
                delays: vec![0, 4, 2],
            },
        );
        let env = Environment::generate(&s).unwrap();
        assert_eq!(env.route(Setting::FullInfo, 2, None).unwrap().len(), 3);
        let r = env.route(Setting::Concealed, 2, Some(1)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].0, 6);
        assert_eq!(r[0].1.missing_count, None);
        for t in 1..=60 {
            for a in 0..3 {
                let r = env.route(Setting::PartiallyConcealed, t, Some(a)).unwrap();
                assert_eq!(
                    r[0].1.missing_count,
                    Some(missing_count(&env.delays, a, t).unwrap())
                );
            }
        }
        assert!(env.route(Setting::FullInfo, 2, Some(0)).is_err());
        assert!(env.route(Setting::Concealed, 2, None).is_err());
        assert!(env.route(Setting::Concealed, 2, Some(3)).is_err());
        assert!(env.route(Setting::Concealed, 61, Some(0)).is_err());
    }

    #[test]
    fn config_parsing() {
        let s: Scenario = serde_json::from_str(
            r#"{"horizon": 5, "num_arms": 2, "seed": 1,
                "loss": {"kind": "bernoulli_gap"},
                "delay": {"kind": "constant", "delay": 2}}"#,
        )
        .unwrap();
        assert_eq!(s.loss, gap());
        assert!(serde_json::from_str::<Scenario>(
            r#"{"horizon": 5, "num_arms": 2, "loss": {"kind": "bogus"}, "delay": {"kind": "zero"}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<Scenario>(
            r#"{"horizon": 5, "num_arms": 2, "loss": {"kind": "constant", "values": [0.1], "x": 1}, "delay": {"kind": "zero"}}"#
        )
        .is_err());
    }
}

//! Delay bookkeeping shared by the learners and the simulator.
//!
//! Rounds are 1-indexed (`1..=horizon`), arms are 0-indexed (`0..num_arms`).
//! The loss of arm `i` incurred at round `s` is revealed at the end of round
//! `s + d_s(i)`; at the start of round `t` it is *missing* when
//! `s < t <= s + d_s(i)` and *available* when `s + d_s(i) < t`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

fn check_dims(horizon: usize, num_arms: usize, len: usize, what: &str) -> Result<()> {
    if horizon == 0 || num_arms == 0 {
        return Err(Error::Argument(format!(
            "{what}: horizon and num_arms must be positive (got T={horizon}, K={num_arms})"
        )));
    }
    if len != horizon * num_arms {
        return Err(Error::Argument(format!(
            "{what}: expected {} entries for T={horizon}, K={num_arms}, got {len}",
            horizon * num_arms
        )));
    }
    Ok(())
}

/// The adversary's `T x K` table of losses in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    horizon: usize,
    num_arms: usize,
    values: Vec<f64>,
}

impl LossTable {
    /// Builds a table from row-major values (`values[(t - 1) * K + i]`).
    pub fn new(horizon: usize, num_arms: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(horizon, num_arms, values.len(), "loss table")?;
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Argument(format!("loss {bad} outside [0, 1]")));
        }
        Ok(Self {
            horizon,
            num_arms,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_arms = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_arms) {
            return Err(Error::Argument("ragged loss rows".into()));
        }
        Self::new(rows.len(), num_arms, rows.concat())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    /// Loss `l_t(i)`. Panics on out-of-range indices.
    pub fn loss(&self, round: usize, arm: usize) -> f64 {
        assert!(round >= 1 && round <= self.horizon && arm < self.num_arms);
        self.values[(round - 1) * self.num_arms + arm]
    }

    /// All K losses of one round.
    pub fn row(&self, round: usize) -> &[f64] {
        assert!(round >= 1 && round <= self.horizon);
        let start = (round - 1) * self.num_arms;
        &self.values[start..start + self.num_arms]
    }

    /// Cumulative losses `L_T(i)`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_arms];
        for row in self.values.chunks(self.num_arms) {
            for (acc, v) in out.iter_mut().zip(row) {
                *acc += v;
            }
        }
        out
    }

    /// Column means, used by the inverse-loss delay generator.
    pub fn arm_means(&self) -> Vec<f64> {
        self.cumulative()
            .into_iter()
            .map(|l| l / self.horizon as f64)
            .collect()
    }
}

/// The adversary's `T x K` table of delays `d_t(i)`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelaySchedule {
    horizon: usize,
    num_arms: usize,
    delays: Vec<usize>,
}

impl DelaySchedule {
    pub fn new(horizon: usize, num_arms: usize, delays: Vec<usize>) -> Result<Self> {
        check_dims(horizon, num_arms, delays.len(), "delay schedule")?;
        Ok(Self {
            horizon,
            num_arms,
            delays,
        })
    }

    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self> {
        let num_arms = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_arms) {
            return Err(Error::Argument("ragged delay rows".into()));
        }
        Self::new(rows.len(), num_arms, rows.concat())
    }

    pub fn zeros(horizon: usize, num_arms: usize) -> Result<Self> {
        Self::new(horizon, num_arms, vec![0; horizon * num_arms])
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    /// Delay `d_s(i)`. Panics on out-of-range indices.
    pub fn delay(&self, round: usize, arm: usize) -> usize {
        assert!(round >= 1 && round <= self.horizon && arm < self.num_arms);
        self.delays[(round - 1) * self.num_arms + arm]
    }

    /// Round at whose end `l_s(i)` is revealed.
    pub fn delivery_round(&self, round: usize, arm: usize) -> usize {
        round + self.delay(round, arm)
    }

    fn check_query(&self, arm: usize, round: usize) -> Result<()> {
        if arm >= self.num_arms {
            return Err(Error::Argument(format!(
                "arm {arm} out of range for K={}",
                self.num_arms
            )));
        }
        if round == 0 || round > self.horizon + 1 {
            return Err(Error::Argument(format!(
                "round {round} outside 1..={}",
                self.horizon + 1
            )));
        }
        Ok(())
    }
}

/// A delivered observation of the loss incurred by `arm` at `origin_round`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackEvent {
    pub origin_round: usize,
    pub arm: usize,
    pub loss: f64,
    /// `rho_s(i)`; attached in the full-information and partially concealed settings only.
    pub missing_count: Option<usize>,
}

/// `rho_round(arm) = |{s : s < round, s + d_s(arm) >= round}|`, by direct enumeration.
pub fn missing_count(schedule: &DelaySchedule, arm: usize, round: usize) -> Result<usize> {
    schedule.check_query(arm, round)?;
    Ok((1..round)
        .filter(|&s| s + schedule.delay(s, arm) >= round)
        .count())
}

/// `S_round(arm) = {s : s + d_s(arm) < round}`.
pub fn available_set(
    schedule: &DelaySchedule,
    arm: usize,
    round: usize,
) -> Result<BTreeSet<usize>> {
    schedule.check_query(arm, round)?;
    Ok((1..round)
        .filter(|&s| s + schedule.delay(s, arm) < round)
        .collect())
}

/// The full `rho_t(i)` table for `t = 1..=T`, built in `O(TK)` with a
/// difference array: round `s` is missing for arm `i` on `s+1..=s+d_s(i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingCounts {
    horizon: usize,
    num_arms: usize,
    counts: Vec<usize>,
    max: usize,
}

impl MissingCounts {
    pub fn from_schedule(schedule: &DelaySchedule) -> Self {
        let (horizon, k) = (schedule.horizon(), schedule.num_arms());
        let mut diff = vec![0i64; (horizon + 2) * k];
        for s in 1..=horizon {
            for i in 0..k {
                let d = schedule.delay(s, i);
                if d == 0 {
                    continue;
                }
                let start = s + 1;
                if start > horizon {
                    continue;
                }
                let end = (s + d).min(horizon);
                diff[start * k + i] += 1;
                diff[(end + 1) * k + i] -= 1;
            }
        }
        let mut counts = vec![0usize; horizon * k];
        let mut running = vec![0i64; k];
        let mut max = 0;
        for t in 1..=horizon {
            for i in 0..k {
                running[i] += diff[t * k + i];
                let c = running[i] as usize;
                counts[(t - 1) * k + i] = c;
                max = max.max(c);
            }
        }
        Self {
            horizon,
            num_arms: k,
            counts,
            max,
        }
    }

    pub fn get(&self, round: usize, arm: usize) -> usize {
        assert!(round >= 1 && round <= self.horizon && arm < self.num_arms);
        self.counts[(round - 1) * self.num_arms + arm]
    }

    pub fn row(&self, round: usize) -> &[usize] {
        let start = (round - 1) * self.num_arms;
        &self.counts[start..start + self.num_arms]
    }

    /// `rho_T^max = max_{i, t <= T} rho_t(i)`.
    pub fn max(&self) -> usize {
        self.max
    }

    /// `L_T^rho(i) = sum_t l_t(i) rho_t(i)`.
    pub fn delay_weighted_losses(&self, losses: &LossTable) -> Vec<f64> {
        let mut out = vec![0.0; self.num_arms];
        for t in 1..=self.horizon {
            for (i, acc) in out.iter_mut().enumerate() {
                *acc += losses.loss(t, i) * self.get(t, i) as f64;
            }
        }
        out
    }
}

/// Pending feedback keyed by delivery round.
///
/// Events scheduled past the horizon stay queued (so look-ahead diagnostics
/// can still see them as missing) but are never returned by
/// [`DeliveryQueue::deliveries_at`]; [`DeliveryQueue::discard_remaining`]
/// drops them when the episode ends.
#[derive(Debug, Clone, Default)]
pub struct DeliveryQueue {
    horizon: usize,
    pending: BTreeMap<usize, Vec<FeedbackEvent>>,
    generated: usize,
    delivered: usize,
}

impl DeliveryQueue {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }

    pub fn push(&mut self, delivery_round: usize, event: FeedbackEvent) {
        debug_assert!(delivery_round >= event.origin_round);
        self.generated += 1;
        self.pending.entry(delivery_round).or_default().push(event);
    }

    /// Removes and returns the events due at the end of `round`, ordered by
    /// origin round, then arm.
    pub fn deliveries_at(&mut self, round: usize) -> Vec<FeedbackEvent> {
        if round > self.horizon {
            return Vec::new();
        }
        let mut out = self.pending.remove(&round).unwrap_or_default();
        out.sort_by_key(|e| (e.origin_round, e.arm));
        self.delivered += out.len();
        out
    }

    /// Events not yet delivered, in delivery order.
    pub fn pending(&self) -> impl Iterator<Item = (usize, &FeedbackEvent)> {
        self.pending
            .iter()
            .flat_map(|(&round, events)| events.iter().map(move |e| (round, e)))
    }

    pub fn len(&self) -> usize {
        self.pending.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Drops everything still queued and returns how many events were dropped.
    pub fn discard_remaining(&mut self) -> usize {
        let n = self.len();
        self.pending.clear();
        n
    }

    pub fn generated(&self) -> usize {
        self.generated
    }

    pub fn delivered(&self) -> usize {
        self.delivered
    }
}

/// Per-arm sets `m_t(i)` of undelivered origin rounds, maintained from what
/// has been delivered so far, plus the running maximum `rho_t^max`.
#[derive(Debug, Clone)]
pub struct MissingTracker {
    missing: Vec<BTreeSet<usize>>,
    rho_max: usize,
    last_round: usize,
}

impl MissingTracker {
    pub fn new(num_arms: usize) -> Self {
        Self {
            missing: vec![BTreeSet::new(); num_arms],
            rho_max: 0,
            last_round: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.missing.len()
    }

    /// Marks the loss of `arm` at `round` as outstanding.
    pub fn incur(&mut self, arm: usize, round: usize) {
        self.missing[arm].insert(round);
    }

    /// Marks `(arm, origin)` as delivered. Returns false if it was not outstanding.
    pub fn deliver(&mut self, arm: usize, origin: usize) -> bool {
        self.missing.get_mut(arm).is_some_and(|m| m.remove(&origin))
    }

    /// `|m(arm)|` for the current state.
    pub fn missing(&self, arm: usize) -> usize {
        self.missing[arm].len()
    }

    pub fn missing_set(&self, arm: usize) -> &BTreeSet<usize> {
        &self.missing[arm]
    }

    pub fn rho_max(&self) -> usize {
        self.rho_max
    }
}

/// Folds the current missing counts into the running maximum and returns
/// `rho_round^max`. The tracker must reflect all deliveries up to the end of
/// `round - 1` and no incursions at or after `round`.
pub fn update_rho_max(tracker: &mut MissingTracker, round: usize) -> usize {
    debug_assert!(round >= tracker.last_round, "rounds must not go backwards");
    tracker.last_round = round;
    let current = (0..tracker.num_arms())
        .map(|i| tracker.missing(i))
        .max()
        .unwrap_or(0);
    tracker.rho_max = tracker.rho_max.max(current);
    tracker.rho_max
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_arm(delays: &[usize]) -> DelaySchedule {
        DelaySchedule::new(delays.len(), 1, delays.to_vec()).unwrap()
    }

    #[test]
    fn missing_count_examples() {
        let zero = DelaySchedule::zeros(10, 3).unwrap();
        assert_eq!(missing_count(&zero, 1, 5).unwrap(), 0);

        let twos = single_arm(&[2; 10]);
        for t in 1..=11 {
            assert_eq!(missing_count(&twos, 0, t).unwrap(), (t - 1).min(2));
        }

        let s = single_arm(&[5, 0, 1]);
        assert_eq!(missing_count(&s, 0, 4).unwrap(), 2);
    }

    #[test]
    fn out_of_range_queries_fail() {
        let s = single_arm(&[0, 0]);
        assert!(matches!(missing_count(&s, 1, 1), Err(Error::Argument(_))));
        assert!(matches!(missing_count(&s, 0, 0), Err(Error::Argument(_))));
        assert!(matches!(available_set(&s, 0, 4), Err(Error::Argument(_))));
        assert!(missing_count(&s, 0, 3).is_ok());
    }

    #[test]
    fn available_set_examples() {
        let zero = DelaySchedule::zeros(5, 2).unwrap();
        assert_eq!(
            available_set(&zero, 0, 4).unwrap(),
            BTreeSet::from([1, 2, 3])
        );
        assert!(available_set(&zero, 1, 1).unwrap().is_empty());
        let s = single_arm(&[5, 0, 1]);
        assert_eq!(available_set(&s, 0, 4).unwrap(), BTreeSet::from([2]));
    }

    #[test]
    fn queue_orders_and_removes() {
        let mut q = DeliveryQueue::new(10);
        assert!(q.deliveries_at(1).is_empty());
        let ev = |origin, arm| FeedbackEvent {
            origin_round: origin,
            arm,
            loss: 0.5,
            missing_count: None,
        };
        q.push(3, ev(1, 0));
        assert!(q.deliveries_at(2).is_empty());
        assert_eq!(q.deliveries_at(3), vec![ev(1, 0)]);
        assert!(q.deliveries_at(3).is_empty());

        q.push(7, ev(5, 1));
        q.push(7, ev(2, 0));
        q.push(7, ev(5, 0));
        let got: Vec<_> = q
            .deliveries_at(7)
            .iter()
            .map(|e| (e.origin_round, e.arm))
            .collect();
        assert_eq!(got, vec![(2, 0), (5, 0), (5, 1)]);
    }

    #[test]
    fn queue_never_delivers_past_horizon() {
        let mut q = DeliveryQueue::new(4);
        q.push(
            6,
            FeedbackEvent {
                origin_round: 3,
                arm: 0,
                loss: 1.0,
                missing_count: None,
            },
        );
        for t in 1..=10 {
            assert!(q.deliveries_at(t).is_empty());
        }
        assert_eq!(q.discard_remaining(), 1);
        assert_eq!(q.generated(), 1);
        assert_eq!(q.delivered(), 0);
    }

    #[test]
    fn rho_max_single_arm_constant_delay() {
        let schedule = single_arm(&[2; 8]);
        let mut tracker = MissingTracker::new(1);
        let mut queue = DeliveryQueue::new(8);
        let mut seen = Vec::new();
        for t in 1..=8 {
            seen.push(update_rho_max(&mut tracker, t));
            tracker.incur(0, t);
            queue.push(
                schedule.delivery_round(t, 0),
                FeedbackEvent {
                    origin_round: t,
                    arm: 0,
                    loss: 0.0,
                    missing_count: None,
                },
            );
            for e in queue.deliveries_at(t) {
                assert!(tracker.deliver(e.arm, e.origin_round));
            }
        }
        assert_eq!(seen, vec![0, 1, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn zero_delays_never_miss() {
        let schedule = DelaySchedule::zeros(6, 2).unwrap();
        let counts = MissingCounts::from_schedule(&schedule);
        assert_eq!(counts.max(), 0);
        let mut tracker = MissingTracker::new(2);
        for t in 1..=6 {
            assert_eq!(update_rho_max(&mut tracker, t), 0);
            for i in 0..2 {
                tracker.incur(i, t);
                tracker.deliver(i, t);
            }
        }
    }

    #[test]
    fn tables_reject_bad_input() {
        assert!(LossTable::new(2, 2, vec![0.0, 0.5, 1.0, 1.5]).is_err());
        assert!(LossTable::new(2, 2, vec![0.0; 3]).is_err());
        assert!(DelaySchedule::new(0, 2, vec![]).is_err());
    }
}

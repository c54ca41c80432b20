//! Independent reference computations used to certify the learners and solver.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::delays::LossTable;
use crate::error::{Error, Result};
use crate::harness::EpisodeTrace;
use crate::learners::Setting;
use crate::regularizers::HybridRegularizer;
use crate::solver::solve;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub instances: usize,
    pub skipped: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    /// `violations` are signed; anything at or below `tolerance` passes.
    pub fn from_violations(
        name: impl Into<String>,
        violations: impl IntoIterator<Item = f64>,
        skipped: usize,
        tolerance: f64,
    ) -> Self {
        let mut instances = 0;
        let mut max_violation = f64::NEG_INFINITY;
        for v in violations {
            instances += 1;
            max_violation = if v.is_nan() { f64::INFINITY } else { max_violation.max(v) };
        }
        Self {
            name: name.into(),
            instances,
            skipped,
            max_violation,
            tolerance,
            passed: max_violation <= tolerance,
        }
    }
}

/// `p(i) ∝ pi(i) exp(-rate L(i))`.
pub fn hedge_closed_form(prior: &[f64], rate: f64, cumulative_loss: &[f64]) -> Vec<f64> {
    let min = cumulative_loss.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = prior
        .iter()
        .zip(cumulative_loss)
        .map(|(p, l)| p * (-rate * (l - min)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// One drift question: the regularizer of a round, the available cumulative
/// loss, the round's own increment and the increments still in flight.
#[derive(Debug, Clone)]
pub struct DriftInstance {
    pub regularizer: HybridRegularizer,
    pub available: Vec<f64>,
    pub fresh: Vec<f64>,
    pub missing: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftTerms {
    /// `<p_av - p_next, fresh>`.
    pub lhs: f64,
    /// `(fresh + missing)^T H(p_av)^{-1} fresh`.
    pub rhs: f64,
    pub multiplier_available: f64,
    pub multiplier_next: f64,
}

fn shifted(reg: &HybridRegularizer, loss: &[f64]) -> Vec<f64> {
    loss.iter().zip(reg.offset()).map(|(l, o)| l + o).collect()
}

pub fn drift_terms(instance: &DriftInstance) -> Result<DriftTerms> {
    let reg = &instance.regularizer;
    let av = solve(&shifted(reg, &instance.available), reg)?;
    let full: Vec<f64> = instance
        .available
        .iter()
        .zip(&instance.fresh)
        .zip(&instance.missing)
        .map(|((a, f), m)| a + f + m)
        .collect();
    let next = solve(&shifted(reg, &full), reg)?;
    let lhs: f64 = av
        .distribution
        .iter()
        .zip(&next.distribution)
        .zip(&instance.fresh)
        .map(|((a, b), l)| (a - b) * l)
        .sum();
    let scaled = reg.hessian_inverse_apply(&av.distribution, &instance.fresh)?;
    let rhs: f64 = instance
        .fresh
        .iter()
        .zip(&instance.missing)
        .zip(&scaled)
        .map(|((f, m), s)| (f + m) * s)
        .sum();
    Ok(DriftTerms {
        lhs,
        rhs,
        multiplier_available: av.multiplier,
        multiplier_next: next.multiplier,
    })
}

/// Checks the drift inequality and multiplier ordering over `instances`.
/// Returns `(drift report, multiplier report)`.
pub fn drift_check(
    name: &str,
    instances: &[DriftInstance],
    tolerance: f64,
) -> (OracleReport, OracleReport) {
    let terms: Vec<Option<DriftTerms>> = instances
        .par_iter()
        .map(|inst| drift_terms(inst).ok())
        .collect();
    let skipped = terms.iter().filter(|t| t.is_none()).count();
    let ok: Vec<DriftTerms> = terms.into_iter().flatten().collect();
    let drift = OracleReport::from_violations(
        format!("{name}: drift"),
        ok.iter().map(|t| t.lhs - t.rhs),
        skipped,
        tolerance,
    );
    let multiplier = OracleReport::from_violations(
        format!("{name}: multiplier order"),
        ok.iter().map(|t| t.multiplier_available - t.multiplier_next),
        skipped,
        tolerance,
    );
    (drift, multiplier)
}

/// Best arm by exhaustive search and the regret against it.
pub fn brute_force_regret(losses: &LossTable, trace: &EpisodeTrace) -> (usize, f64) {
    let k = losses.num_arms();
    let mut incurred = 0.0;
    for r in &trace.rounds {
        incurred += match (trace.setting, r.action) {
            (Setting::FullInfo, _) => (0..k).map(|i| r.marginal[i] * losses.loss(r.round, i)).sum(),
            (_, Some(a)) => losses.loss(r.round, a),
            (_, None) => f64::NAN,
        };
    }
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..k {
        let total: f64 = (1..=losses.horizon()).map(|t| losses.loss(t, i)).sum();
        let regret = incurred - total;
        if regret > best.1 {
            best = (i, regret);
        }
    }
    best
}

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h` with `h = step * max(|x_k|, 1e-3)`.
pub fn finite_difference(
    f: impl Fn(&[f64]) -> Result<f64>,
    point: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    let mut x = point.to_vec();
    let mut out = Vec::with_capacity(point.len());
    for k in 0..point.len() {
        let h = step * point[k].abs().max(1e-3);
        if !(h > 0.0) || point[k] + h == point[k] {
            return Err(Error::Argument(format!(
                "finite-difference step {h:e} underflows at coordinate {k}"
            )));
        }
        x[k] = point[k] + h;
        let up = f(&x)?;
        x[k] = point[k] - h;
        let down = f(&x)?;
        x[k] = point[k];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Dense Hessian of `-(1/eta) sum_i ln q_i + sum_k p_k ln p_k / gamma_k`,
/// coordinates grouped in consecutive blocks of `block` entries per arm.
pub fn dense_log_barrier_hessian(p: &[f64], eta: f64, gammas: &[f64], block: usize) -> DMatrix<f64> {
    let n = p.len();
    let mut h = DMatrix::zeros(n, n);
    for arm in 0..n / block {
        let range = arm * block..(arm + 1) * block;
        let q: f64 = p[range.clone()].iter().sum();
        for a in range.clone() {
            for b in range.clone() {
                h[(a, b)] += 1.0 / (eta * q * q);
            }
        }
    }
    for k in 0..n {
        h[(k, k)] += 1.0 / (gammas[k] * p[k]);
    }
    h
}

/// `H^{-1} v` by dense LU.
pub fn dense_solve(h: DMatrix<f64>, v: &[f64]) -> Result<Vec<f64>> {
    let rhs = nalgebra::DVector::from_column_slice(v);
    h.lu()
        .solve(&rhs)
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| Error::Argument("dense matrix is singular".into()))
}

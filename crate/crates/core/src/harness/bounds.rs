//! Closed-form regret upper bounds for the three learners.

use serde::Serialize;

/// Inputs shared by the bounds. `comparator` and `prior` are distributions over arms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStatistics {
    pub horizon: usize,
    pub num_arms: usize,
    pub comparator: Vec<f64>,
    pub prior: Vec<f64>,
    /// `L_T`.
    pub cumulative_loss: Vec<f64>,
    /// `L_T^rho`.
    pub delay_weighted_loss: Vec<f64>,
    /// Realized `rho_T^max`.
    pub rho_max: usize,
    /// Configured `rho*`.
    pub rho_star: f64,
    /// Mean over episodes of `sum_t sum_i q_t(i) rho_t(i)`.
    pub delay_mass: f64,
}

/// `KL(u, pi)` with `0 ln 0 = 0`.
pub fn kl(u: &[f64], pi: &[f64]) -> f64 {
    u.iter()
        .zip(pi)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full information.
pub fn full_info_bound(s: &BoundStatistics) -> f64 {
    let one_rho = 1.0 + s.rho_max as f64;
    let ln_t = (s.horizon as f64).ln();
    let ln_k = (s.num_arms as f64).ln();
    let complexity = kl(&s.comparator, &s.prior) + 2.0 * (ln_t + 1.0);
    let exposure = dot(&s.comparator, &s.cumulative_loss) + dot(&s.comparator, &s.delay_weighted_loss);
    4.0 * one_rho
        + 12.0 * one_rho.sqrt()
        + 8.0 * (complexity * exposure).sqrt()
        + 8.0 * complexity * one_rho
        + 16.0 * (one_rho * (ln_k + 2.0 * (1.0 + ln_t))).sqrt()
}

/// Partially concealed bandit.
pub fn partially_concealed_bound(s: &BoundStatistics) -> f64 {
    let k = s.num_arms as f64;
    let ln_t = (s.horizon as f64).ln();
    let kl = kl(&s.comparator, &s.prior);
    12.0 * (k * ln_t * dot(&s.comparator, &s.cumulative_loss)).sqrt()
        + 16.0 * ((kl + ln_t + 1.0) * dot(&s.comparator, &s.delay_weighted_loss)).sqrt()
        + 48.0 * (5.0 + ln_t + kl) * s.rho_star
        + 42.0 * k * ln_t
}

/// Concealed bandit.
pub fn concealed_bound(s: &BoundStatistics) -> f64 {
    let k = s.num_arms as f64;
    let t = s.horizon as f64;
    9.0 * (k * t).sqrt() + 3.0 * (k.ln() * s.delay_mass).sqrt() + 0.5 * s.rho_star
}

/// `argmin_i L_T(i) + sqrt(KL(e_i, pi) (L_T(i) + L_T^rho(i)))` over vertices.
pub fn tradeoff_vertex(cumulative: &[f64], delay_weighted: &[f64], prior: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for i in 0..cumulative.len() {
        let v = cumulative[i] + (-(prior[i].ln()) * (cumulative[i] + delay_weighted[i])).sqrt();
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

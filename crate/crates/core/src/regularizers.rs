//! Legendre regularizers over the enlarged simplex of pseudo-experts.
//!
//! Every regularizer is a hybrid `F = Psi + Phi` and enters FTRL through the
//! Bregman form `R(p) = B_Psi(p, p1_psi) + B_Phi(p, p1_phi)`. Minimizing
//! `<p, L> + R(p)` is the same as minimizing `<p, L + offset> + F(p)` with
//! `offset = -(grad Psi(p1_psi) + grad Phi(p1_phi))`; see [`HybridRegularizer::offset`].

use crate::error::{Error, Result};

/// Values below this are raised to it before taking logarithms or roots.
/// Only used during evaluation, never applied to stored iterates.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Flat codec for pseudo-expert indices `(arm, j) <-> arm * J + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PseudoIndex {
    num_arms: usize,
    rates_per_arm: usize,
}

impl PseudoIndex {
    pub fn new(num_arms: usize, rates_per_arm: usize) -> Result<Self> {
        if num_arms == 0 || rates_per_arm == 0 {
            return Err(Error::Argument(format!(
                "pseudo-expert layout needs K, J >= 1 (got K={num_arms}, J={rates_per_arm})"
            )));
        }
        Ok(Self {
            num_arms,
            rates_per_arm,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn rates_per_arm(&self) -> usize {
        self.rates_per_arm
    }

    pub fn len(&self) -> usize {
        self.num_arms * self.rates_per_arm
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn flat(&self, arm: usize, j: usize) -> usize {
        debug_assert!(arm < self.num_arms && j < self.rates_per_arm);
        arm * self.rates_per_arm + j
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.rates_per_arm, idx % self.rates_per_arm)
    }

    #[inline]
    pub fn arm_of(&self, idx: usize) -> usize {
        idx / self.rates_per_arm
    }

    /// The coordinates belonging to one arm.
    #[inline]
    pub fn block(&self, arm: usize) -> std::ops::Range<usize> {
        arm * self.rates_per_arm..(arm + 1) * self.rates_per_arm
    }

    /// Sums each arm's pseudo-expert weights.
    pub fn marginals(&self, p: &[f64]) -> Vec<f64> {
        debug_assert_eq!(p.len(), self.len());
        p.chunks(self.rates_per_arm)
            .map(|block| block.iter().sum())
            .collect()
    }
}

fn check_rate(rate: f64, what: &str) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "{what} must be positive and finite, got {rate}"
        )))
    }
}

/// `sum_i p(i) ln p(i) / rate(i)` with one learning rate per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNegEntropy {
    rates: Vec<f64>,
}

impl WeightedNegEntropy {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        for &r in &rates {
            check_rate(r, "entropy learning rate")?;
        }
        Ok(Self { rates })
    }

    /// A single rate shared by `dim` coordinates.
    pub fn uniform(rate: f64, dim: usize) -> Result<Self> {
        Self::new(vec![rate; dim])
    }

    /// One rate per pseudo-expert column: coordinate `(i, j)` gets `rates[j]`.
    pub fn per_rate(layout: PseudoIndex, rates: &[f64]) -> Result<Self> {
        if rates.len() != layout.rates_per_arm() {
            return Err(Error::Argument(format!(
                "expected {} column rates, got {}",
                layout.rates_per_arm(),
                rates.len()
            )));
        }
        Self::new(
            (0..layout.num_arms())
                .flat_map(|_| rates.iter().copied())
                .collect(),
        )
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}

/// `-(1/rate) sum_i ln(sum_j p(i, j))`: a log barrier on the arm marginals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBarrierOverMarginals {
    rate: f64,
    layout: PseudoIndex,
}

impl LogBarrierOverMarginals {
    pub fn new(rate: f64, layout: PseudoIndex) -> Result<Self> {
        check_rate(rate, "log-barrier learning rate")?;
        Ok(Self { rate, layout })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn layout(&self) -> PseudoIndex {
        self.layout
    }
}

/// `-(1/rate) sum_i sqrt(p(i))`, the 1/2-Tsallis entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsallisHalf {
    rate: f64,
}

impl TsallisHalf {
    pub fn new(rate: f64) -> Result<Self> {
        check_rate(rate, "Tsallis learning rate")?;
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Psi {
    Entropy(WeightedNegEntropy),
    LogBarrier(LogBarrierOverMarginals),
    Tsallis(TsallisHalf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Phi {
    Zero,
    Entropy(WeightedNegEntropy),
}

/// Per-coordinate shape of `grad F`, consumed by the solver:
/// `grad_k F(p) = entropy[k] (ln p_k + 1) - tsallis / (2 sqrt p_k) - barrier_k(p)`
/// where `barrier_k = 1 / (eta q_arm(k))` when a log barrier is present.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Shape {
    pub entropy: Vec<f64>,
    pub tsallis: f64,
    pub barrier: Option<(f64, PseudoIndex)>,
}

/// `R(p) = B_Psi(p, psi_prior) + B_Phi(p, phi_prior)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridRegularizer {
    psi: Psi,
    phi: Phi,
    psi_prior: Vec<f64>,
    phi_prior: Vec<f64>,
    layout: PseudoIndex,
    shape: Shape,
}

fn check_prior(prior: &[f64], dim: usize, what: &str) -> Result<()> {
    if prior.len() != dim {
        return Err(Error::Argument(format!(
            "{what} has {} coordinates, expected {dim}",
            prior.len()
        )));
    }
    if prior.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
        return Err(Error::Argument(format!("{what} must be strictly positive")));
    }
    Ok(())
}

#[inline]
fn floored(p: f64) -> f64 {
    p.max(PROBABILITY_FLOOR)
}

impl HybridRegularizer {
    pub fn new(
        psi: Psi,
        phi: Phi,
        layout: PseudoIndex,
        psi_prior: Vec<f64>,
        phi_prior: Vec<f64>,
    ) -> Result<Self> {
        let dim = layout.len();
        check_prior(&psi_prior, dim, "Psi prior")?;
        check_prior(&phi_prior, dim, "Phi prior")?;

        let mut entropy = vec![0.0; dim];
        let mut tsallis = 0.0;
        let mut barrier = None;
        match &psi {
            Psi::Entropy(e) => {
                if e.rates.len() != dim {
                    return Err(Error::Argument("Psi rate count mismatch".into()));
                }
                for (w, r) in entropy.iter_mut().zip(&e.rates) {
                    *w += 1.0 / r;
                }
            }
            Psi::LogBarrier(lb) => {
                if lb.layout != layout {
                    return Err(Error::Argument("log-barrier layout mismatch".into()));
                }
                barrier = Some((lb.rate, layout));
            }
            Psi::Tsallis(ts) => tsallis = 1.0 / ts.rate,
        }
        match &phi {
            Phi::Zero => {}
            Phi::Entropy(e) => {
                if e.rates.len() != dim {
                    return Err(Error::Argument("Phi rate count mismatch".into()));
                }
                for (w, r) in entropy.iter_mut().zip(&e.rates) {
                    *w += 1.0 / r;
                }
            }
        }
        if barrier.is_some() && entropy.iter().any(|&w| w <= 0.0) {
            return Err(Error::Argument(
                "a log barrier over marginals needs an entropy term on every coordinate".into(),
            ));
        }
        Ok(Self {
            psi,
            phi,
            psi_prior,
            phi_prior,
            layout,
            shape: Shape {
                entropy,
                tsallis,
                barrier,
            },
        })
    }

    /// Full information: weighted negative entropy with one rate per
    /// pseudo-expert, `Phi = 0`.
    pub fn weighted_entropy(
        layout: PseudoIndex,
        rates: Vec<f64>,
        prior: Vec<f64>,
    ) -> Result<Self> {
        let dim = layout.len();
        Self::new(
            Psi::Entropy(WeightedNegEntropy::new(rates)?),
            Phi::Zero,
            layout,
            prior,
            vec![1.0 / dim as f64; dim],
        )
    }

    /// Partially concealed bandit: log barrier on marginals plus per-column
    /// negative entropy.
    pub fn log_barrier_hybrid(
        layout: PseudoIndex,
        barrier_rate: f64,
        column_rates: &[f64],
        psi_prior: Vec<f64>,
        phi_prior: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            Psi::LogBarrier(LogBarrierOverMarginals::new(barrier_rate, layout)?),
            Phi::Entropy(WeightedNegEntropy::per_rate(layout, column_rates)?),
            layout,
            psi_prior,
            phi_prior,
        )
    }

    /// Concealed bandit: 1/2-Tsallis plus negative entropy, both with uniform priors.
    pub fn tsallis_entropy(num_arms: usize, tsallis_rate: f64, entropy_rate: f64) -> Result<Self> {
        let layout = PseudoIndex::new(num_arms, 1)?;
        let uniform = vec![1.0 / num_arms as f64; num_arms];
        Self::new(
            Psi::Tsallis(TsallisHalf::new(tsallis_rate)?),
            Phi::Entropy(WeightedNegEntropy::uniform(entropy_rate, num_arms)?),
            layout,
            uniform.clone(),
            uniform,
        )
    }

    /// 1/2-Tsallis alone (uniform prior).
    pub fn tsallis(num_arms: usize, rate: f64) -> Result<Self> {
        let layout = PseudoIndex::new(num_arms, 1)?;
        let uniform = vec![1.0 / num_arms as f64; num_arms];
        Self::new(
            Psi::Tsallis(TsallisHalf::new(rate)?),
            Phi::Zero,
            layout,
            uniform.clone(),
            uniform,
        )
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    pub fn layout(&self) -> PseudoIndex {
        self.layout
    }

    pub fn psi(&self) -> &Psi {
        &self.psi
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    pub fn psi_prior(&self) -> &[f64] {
        &self.psi_prior
    }

    pub fn phi_prior(&self) -> &[f64] {
        &self.phi_prior
    }

    pub(crate) fn shape(&self) -> &Shape {
        &self.shape
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Argument(format!(
                "point has {} coordinates, expected {}",
                p.len(),
                self.dim()
            )));
        }
        if let Some(bad) = p.iter().find(|&&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::Domain(format!(
                "coordinate {bad} is not strictly positive"
            )));
        }
        Ok(())
    }

    /// `F(p) = Psi(p) + Phi(p)`.
    pub fn potential(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        Ok(psi_value(&self.psi, p) + phi_value(&self.phi, p))
    }

    /// `R(p)`; zero at the priors and nonnegative everywhere.
    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        Ok(psi_bregman(&self.psi, p, &self.psi_prior) + phi_bregman(&self.phi, p, &self.phi_prior))
    }

    /// `grad F(p)`.
    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        Ok(self.gradient_unchecked(p))
    }

    fn gradient_unchecked(&self, p: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = p
            .iter()
            .zip(&self.shape.entropy)
            .map(|(&x, &w)| {
                let x = floored(x);
                let mut v = 0.0;
                if w > 0.0 {
                    v += w * (x.ln() + 1.0);
                }
                if self.shape.tsallis > 0.0 {
                    v -= self.shape.tsallis / (2.0 * x.sqrt());
                }
                v
            })
            .collect();
        if let Some((eta, layout)) = self.shape.barrier {
            for (arm, q) in layout.marginals(p).into_iter().enumerate() {
                let push = 1.0 / (eta * floored(q));
                for k in layout.block(arm) {
                    g[k] -= push;
                }
            }
        }
        g
    }

    /// The linear term `-(grad Psi(p1_psi) + grad Phi(p1_phi))` that turns the
    /// Bregman objective into `<p, L + offset> + F(p)`.
    pub fn offset(&self) -> Vec<f64> {
        let mut out = psi_gradient(&self.psi, &self.psi_prior);
        for (o, g) in out.iter_mut().zip(phi_gradient(&self.phi, &self.phi_prior)) {
            *o += g;
        }
        out.iter_mut().for_each(|o| *o = -*o);
        out
    }

    /// Diagonal part of the Hessian (everything except the log-barrier blocks).
    fn hessian_diagonal(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.shape.entropy)
            .map(|(&x, &w)| {
                let x = floored(x);
                w / x + self.shape.tsallis / (4.0 * x * x.sqrt())
            })
            .collect()
    }

    /// `grad^2 F(p) v`.
    pub fn hessian_apply(&self, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        if v.len() != self.dim() {
            return Err(Error::Argument("vector dimension mismatch".into()));
        }
        let d = self.hessian_diagonal(p);
        let mut out: Vec<f64> = d.iter().zip(v).map(|(a, b)| a * b).collect();
        if let Some((eta, layout)) = self.shape.barrier {
            for (arm, q) in layout.marginals(p).into_iter().enumerate() {
                let block = layout.block(arm);
                let s: f64 = v[block.clone()].iter().sum();
                let c = s / (eta * floored(q) * floored(q));
                for k in block {
                    out[k] += c;
                }
            }
        }
        Ok(out)
    }

    /// `(grad^2 F(p))^{-1} v`.
    ///
    /// Diagonal families invert coordinate-wise. With the log barrier each
    /// arm's block is `diag(1/v) + 11^T / (eta q^2)`, inverted by
    /// Sherman-Morrison: `V - v v^T / (eta q^2 + <v, 1>)`, `V = diag(v)`.
    pub fn hessian_inverse_apply(&self, p: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        if x.len() != self.dim() {
            return Err(Error::Argument("vector dimension mismatch".into()));
        }
        let d = self.hessian_diagonal(p);
        if d.iter().any(|&di| !(di > 0.0 && di.is_finite())) {
            return Err(Error::solver(
                "Hessian diagonal is not positive definite",
                f64::NAN,
            ));
        }
        let v: Vec<f64> = d.iter().map(|di| 1.0 / di).collect();
        let mut out: Vec<f64> = v.iter().zip(x).map(|(a, b)| a * b).collect();
        if let Some((eta, layout)) = self.shape.barrier {
            for (arm, q) in layout.marginals(p).into_iter().enumerate() {
                let block = layout.block(arm);
                let vb = &v[block.clone()];
                let sum_v: f64 = vb.iter().sum();
                let denom = eta * q * q + sum_v;
                if !(denom > 0.0) {
                    return Err(Error::solver(
                        "Sherman-Morrison denominator is not positive",
                        denom,
                    ));
                }
                let vx: f64 = vb.iter().zip(&x[block.clone()]).map(|(a, b)| a * b).sum();
                let scale = vx / denom;
                for (k, vk) in block.zip(vb) {
                    out[k] -= vk * scale;
                }
            }
        }
        Ok(out)
    }
}

fn psi_value(psi: &Psi, p: &[f64]) -> f64 {
    match psi {
        Psi::Entropy(e) => entropy_value(&e.rates, p),
        Psi::LogBarrier(lb) => {
            -lb.layout
                .marginals(p)
                .into_iter()
                .map(|q| floored(q).ln())
                .sum::<f64>()
                / lb.rate
        }
        Psi::Tsallis(ts) => -p.iter().map(|&x| floored(x).sqrt()).sum::<f64>() / ts.rate,
    }
}

fn phi_value(phi: &Phi, p: &[f64]) -> f64 {
    match phi {
        Phi::Zero => 0.0,
        Phi::Entropy(e) => entropy_value(&e.rates, p),
    }
}

fn entropy_value(rates: &[f64], p: &[f64]) -> f64 {
    p.iter()
        .zip(rates)
        .map(|(&x, r)| {
            let x = floored(x);
            x * x.ln() / r
        })
        .sum()
}

fn entropy_bregman(rates: &[f64], p: &[f64], prior: &[f64]) -> f64 {
    p.iter()
        .zip(prior)
        .zip(rates)
        .map(|((&x, &y), r)| {
            let x = floored(x);
            (x * (x / y).ln() - x + y) / r
        })
        .sum()
}

fn psi_bregman(psi: &Psi, p: &[f64], prior: &[f64]) -> f64 {
    match psi {
        Psi::Entropy(e) => entropy_bregman(&e.rates, p, prior),
        Psi::LogBarrier(lb) => {
            let q = lb.layout.marginals(p);
            let q1 = lb.layout.marginals(prior);
            q.iter()
                .zip(&q1)
                .map(|(&a, &b)| {
                    let a = floored(a);
                    ((b / a).ln() + (a - b) / b) / lb.rate
                })
                .sum()
        }
        Psi::Tsallis(ts) => p
            .iter()
            .zip(prior)
            .map(|(&x, &y)| {
                let x = floored(x);
                (-x.sqrt() + y.sqrt() + (x - y) / (2.0 * y.sqrt())) / ts.rate
            })
            .sum(),
    }
}

fn phi_bregman(phi: &Phi, p: &[f64], prior: &[f64]) -> f64 {
    match phi {
        Phi::Zero => 0.0,
        Phi::Entropy(e) => entropy_bregman(&e.rates, p, prior),
    }
}

fn psi_gradient(psi: &Psi, p: &[f64]) -> Vec<f64> {
    match psi {
        Psi::Entropy(e) => p
            .iter()
            .zip(&e.rates)
            .map(|(&x, r)| (floored(x).ln() + 1.0) / r)
            .collect(),
        Psi::LogBarrier(lb) => {
            let q = lb.layout.marginals(p);
            (0..p.len())
                .map(|k| -1.0 / (lb.rate * floored(q[lb.layout.arm_of(k)])))
                .collect()
        }
        Psi::Tsallis(ts) => p
            .iter()
            .map(|&x| -1.0 / (2.0 * ts.rate * floored(x).sqrt()))
            .collect(),
    }
}

fn phi_gradient(phi: &Phi, p: &[f64]) -> Vec<f64> {
    match phi {
        Phi::Zero => vec![0.0; p.len()],
        Phi::Entropy(e) => p
            .iter()
            .zip(&e.rates)
            .map(|(&x, r)| (floored(x).ln() + 1.0) / r)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_rate(k: usize, eta: f64) -> HybridRegularizer {
        let layout = PseudoIndex::new(k, 1).unwrap();
        HybridRegularizer::weighted_entropy(layout, vec![eta; k], vec![1.0 / k as f64; k]).unwrap()
    }

    #[test]
    fn codec_roundtrip() {
        let layout = PseudoIndex::new(3, 4).unwrap();
        for arm in 0..3 {
            for j in 0..4 {
                assert_eq!(layout.split(layout.flat(arm, j)), (arm, j));
            }
        }
        assert_eq!(layout.block(1), 4..8);
    }

    #[test]
    fn value_vanishes_at_prior_and_matches_kl() {
        let reg = single_rate(2, 1.0);
        assert_eq!(reg.value(&[0.5, 0.5]).unwrap(), 0.0);
        // KL((0.8, 0.2), (0.5, 0.5)) evaluated independently.
        assert_relative_eq!(
            reg.value(&[0.8, 0.2]).unwrap(),
            0.192_744_757_021_757_5,
            epsilon = 1e-12
        );
        assert!(reg.value(&[0.6, 0.4]).unwrap() > 0.0);
    }

    #[test]
    fn gradient_examples() {
        let reg = single_rate(2, 1.0);
        let e_inv = (-1.0f64).exp();
        let g = reg.gradient(&[e_inv, 1.0 - e_inv]).unwrap();
        assert!(g[0].abs() < 1e-15);

        let ts = HybridRegularizer::tsallis_entropy(2, 1.0, 1.0).unwrap();
        let g = ts.gradient(&[1.0, 0.5]).unwrap();
        assert_relative_eq!(g[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn nonpositive_coordinates_are_domain_errors() {
        let reg = single_rate(2, 1.0);
        assert!(matches!(reg.value(&[1.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(reg.gradient(&[-0.1, 1.1]), Err(Error::Domain(_))));
        assert!(matches!(
            reg.hessian_inverse_apply(&[f64::NAN, 0.5], &[1.0, 1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hessian_inverse_examples() {
        let layout = PseudoIndex::new(2, 1).unwrap();
        let reg = HybridRegularizer::weighted_entropy(layout, vec![2.0, 2.0], vec![0.5, 0.5])
            .unwrap();
        let out = reg.hessian_inverse_apply(&[0.25, 0.75], &[1.0, 0.0]).unwrap();
        assert_relative_eq!(out[0], 0.5, epsilon = 1e-15);
        assert_eq!(out[1], 0.0);
        assert_eq!(
            reg.hessian_inverse_apply(&[0.25, 0.75], &[0.0, 0.0]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn log_barrier_requires_entropy() {
        let layout = PseudoIndex::new(2, 2).unwrap();
        let err = HybridRegularizer::new(
            Psi::LogBarrier(LogBarrierOverMarginals::new(0.5, layout).unwrap()),
            Phi::Zero,
            layout,
            vec![0.25; 4],
            vec![0.25; 4],
        );
        assert!(err.is_err());
    }

    #[test]
    fn offset_at_prior_cancels_gradient() {
        let layout = PseudoIndex::new(2, 3).unwrap();
        let prior = vec![0.1, 0.2, 0.2, 0.15, 0.15, 0.2];
        let reg = HybridRegularizer::log_barrier_hybrid(
            layout,
            0.7,
            &[0.25, 0.12, 0.06],
            prior.clone(),
            prior.clone(),
        )
        .unwrap();
        let g = reg.gradient(&prior).unwrap();
        for (a, b) in g.iter().zip(reg.offset()) {
            assert_relative_eq!(*a, -b, epsilon = 1e-12);
        }
    }
}

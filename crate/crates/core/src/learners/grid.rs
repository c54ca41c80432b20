//! Learning-rate grids and the matching priors over pseudo-experts.

/// `J`: the smallest `j >= 1` with `4^j >= T`, i.e. `ceil(log2 sqrt T)` clamped to one.
pub fn grid_size(horizon: usize) -> usize {
    let mut j = 1usize;
    let mut power: u128 = 4;
    while power < horizon as u128 {
        power *= 4;
        j += 1;
    }
    j
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateGrid {
    /// Rate for `j = 1..=J`, stored at index `j - 1`.
    pub rates: Vec<f64>,
    /// Round the grid was computed for; `None` for time-invariant grids.
    pub snapshot_round: Option<usize>,
}

impl RateGrid {
    pub fn count(&self) -> usize {
        self.rates.len()
    }
}

/// `min{1/(4(1+rho)), sqrt(ln K + 2(ln T + 1)) / (4 sqrt(1+rho) 2^j)}`.
pub fn full_info_grid(round: usize, rho_max: usize, num_arms: usize, horizon: usize) -> RateGrid {
    let j_max = grid_size(horizon);
    let one_rho = 1.0 + rho_max as f64;
    let cap = 1.0 / (4.0 * one_rho);
    let numerator = ((num_arms as f64).ln() + 2.0 * ((horizon as f64).ln() + 1.0)).sqrt();
    let rates = (1..=j_max)
        .map(|j| cap.min(numerator / (4.0 * one_rho.sqrt() * 2f64.powi(j as i32))))
        .collect();
    RateGrid {
        rates,
        snapshot_round: Some(round),
    }
}

/// `min{1/(4 rho*), sqrt(ln K + ln T + 1) / (4 sqrt(rho*) 2^j)}`.
pub fn pc_gamma_grid(num_arms: usize, horizon: usize, rho_star: f64) -> RateGrid {
    let j_max = grid_size(horizon);
    let cap = 1.0 / (4.0 * rho_star);
    let numerator = ((num_arms as f64).ln() + (horizon as f64).ln() + 1.0).sqrt();
    let rates = (1..=j_max)
        .map(|j| cap.min(numerator / (4.0 * rho_star.sqrt() * 2f64.powi(j as i32))))
        .collect();
    RateGrid {
        rates,
        snapshot_round: None,
    }
}

/// `p1(i, j) = pi(i) 4^{-j} / sum_{j'} 4^{-j'}`, flattened as `i * J + (j - 1)`.
pub fn layered_prior(prior: &[f64], rates_per_arm: usize) -> Vec<f64> {
    let weights: Vec<f64> = (1..=rates_per_arm)
        .map(|j| 4f64.powi(-(j as i32)))
        .collect();
    let total: f64 = weights.iter().sum();
    prior
        .iter()
        .flat_map(|&pi| weights.iter().map(move |w| pi * w / total))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_sizes() {
        assert_eq!(grid_size(1), 1);
        assert_eq!(grid_size(4), 1);
        assert_eq!(grid_size(5), 2);
        assert_eq!(grid_size(16), 2);
        assert_eq!(grid_size(100), 4);
        assert_eq!(grid_size(20_000), 8);
    }

    #[test]
    fn full_info_values() {
        let g = full_info_grid(1, 0, 2, 16);
        assert_eq!(g.count(), 2);
        assert_eq!(g.rates[0], 0.25);
        // sqrt(ln 2 + 2 (ln 16 + 1)) / 16
        assert_relative_eq!(g.rates[1], 0.179_390_5, epsilon = 1e-6);
    }

    #[test]
    fn pc_values() {
        let g = pc_gamma_grid(2, 16, 1.0);
        assert_eq!(g.rates[0], 0.25);
        // sqrt(ln 2 + ln 16 + 1) / 16
        assert_relative_eq!(g.rates[1], 0.132_076_8, epsilon = 1e-6);
        for w in g.rates.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn layered_prior_marginalizes_to_prior() {
        let pi = [0.2, 0.5, 0.3];
        let p = layered_prior(&pi, 4);
        for (i, chunk) in p.chunks(4).enumerate() {
            assert_relative_eq!(chunk.iter().sum::<f64>(), pi[i], epsilon = 1e-15);
        }
    }
}

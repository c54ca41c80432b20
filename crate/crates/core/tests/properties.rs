use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use delayed_ftrl::delays::{DelaySchedule, MissingCounts};
use delayed_ftrl::environments::realized_rho_star;
use delayed_ftrl::harness::checks::{random_regularizer, Family, FAMILIES};
use delayed_ftrl::learners::{full_info_grid, pc_gamma_grid};
use delayed_ftrl::regularizers::{HybridRegularizer, PseudoIndex};
use delayed_ftrl::solver::{
    arm_block_residual, arm_block_solve, coordinate_solve_tsallis_entropy, solve, Q_CEIL, Q_FLOOR,
};

fn family() -> impl Strategy<Value = Family> {
    (0..FAMILIES.len()).prop_map(|i| FAMILIES[i])
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| 0.02 + rng.gen::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn shifted(reg: &HybridRegularizer, loss: &[f64]) -> Vec<f64> {
    loss.iter().zip(reg.offset()).map(|(l, o)| l + o).collect()
}

fn objective(reg: &HybridRegularizer, total: &[f64], p: &[f64]) -> f64 {
    let linear: f64 = p.iter().zip(total).map(|(a, b)| a * b).sum();
    linear + reg.potential(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gradient_is_monotone(f in family(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, _) = random_regularizer(f, &mut rng).unwrap();
        let p = simplex(&mut rng, reg.dim());
        let q = simplex(&mut rng, reg.dim());
        let gp = reg.gradient(&p).unwrap();
        let gq = reg.gradient(&q).unwrap();
        let inner: f64 = (0..p.len()).map(|k| (gp[k] - gq[k]) * (p[k] - q[k])).sum();
        prop_assert!(inner >= 0.0, "inner product {inner}");
    }

    #[test]
    fn hessian_round_trip(f in family(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, _) = random_regularizer(f, &mut rng).unwrap();
        let p = simplex(&mut rng, reg.dim());
        let v: Vec<f64> = (0..reg.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = reg.hessian_apply(&p, &reg.hessian_inverse_apply(&p, &v).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn constant_shift_leaves_solution(f in family(), seed in any::<u64>(), shift in -50.0..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, scale) = random_regularizer(f, &mut rng).unwrap();
        let loss: Vec<f64> = (0..reg.dim()).map(|_| scale * rng.gen::<f64>()).collect();
        let moved: Vec<f64> = loss.iter().map(|l| l + shift).collect();
        let a = solve(&shifted(&reg, &loss), &reg).unwrap();
        let b = solve(&shifted(&reg, &moved), &reg).unwrap();
        for (x, y) in a.distribution.iter().zip(&b.distribution) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn solution_minimizes_objective(f in family(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, scale) = random_regularizer(f, &mut rng).unwrap();
        let loss: Vec<f64> = (0..reg.dim()).map(|_| scale * rng.gen::<f64>()).collect();
        let total = shifted(&reg, &loss);
        let best = solve(&total, &reg).unwrap().distribution;
        let at_best = objective(&reg, &total, &best);
        for _ in 0..20 {
            let x = simplex(&mut rng, reg.dim());
            let mix: f64 = rng.gen_range(0.0..1.0);
            let y: Vec<f64> = best.iter().zip(&x).map(|(b, x)| (1.0 - mix) * b + mix * x).collect();
            prop_assert!(objective(&reg, &total, &y) >= at_best - 1e-9 * (1.0 + at_best.abs()));
        }
    }

    #[test]
    fn multiplier_grows_with_loss(f in family(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, scale) = random_regularizer(f, &mut rng).unwrap();
        let loss: Vec<f64> = (0..reg.dim()).map(|_| scale * rng.gen::<f64>()).collect();
        let more: Vec<f64> = loss.iter().map(|l| l + rng.gen_range(0.0..2.0)).collect();
        let c_av = solve(&shifted(&reg, &loss), &reg).unwrap().multiplier;
        let c = solve(&shifted(&reg, &more), &reg).unwrap().multiplier;
        prop_assert!(c_av <= c + 1e-9, "{c_av} > {c}");
    }

    #[test]
    fn tsallis_coordinate_is_monotone(
        eta in 0.01..1.0f64,
        gamma in 0.01..1.0f64,
        z in 0.0..50.0f64,
        c1 in -30.0..30.0f64,
        dc in 1e-3..10.0f64,
    ) {
        let a = coordinate_solve_tsallis_entropy(eta, gamma, z, c1).unwrap();
        let b = coordinate_solve_tsallis_entropy(eta, gamma, z, c1 + dc).unwrap();
        prop_assert!(a < b);
    }

    #[test]
    fn arm_block_root_is_bracketed(
        c in -10.0..10.0f64,
        eta in 0.05..5.0f64,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = rng.gen_range(1..=4);
        let gammas: Vec<f64> = (0..j).map(|_| rng.gen_range(0.01..0.5)).collect();
        let z: Vec<f64> = (0..j).map(|_| rng.gen_range(0.0..20.0)).collect();
        prop_assert!(arm_block_residual(Q_FLOOR, c, eta, &gammas, &z) > 0.0);
        let block = arm_block_solve(c, eta, &gammas, &z, None).unwrap();
        let q = block.marginal;
        prop_assert!(q > 0.0);
        if q < Q_CEIL {
            prop_assert!(arm_block_residual(Q_CEIL, c, eta, &gammas, &z) < 0.0);
        }
        prop_assert!(arm_block_residual(q * 0.5, c, eta, &gammas, &z) > 0.0);
        prop_assert!(arm_block_residual(q * 2.0, c, eta, &gammas, &z) < 0.0);
        prop_assert!(arm_block_residual(q, c, eta, &gammas, &z).abs() <= 1e-10 * (1.0 + q));
    }

    #[test]
    fn regularizer_grows_as_rates_shrink(seed in any::<u64>(), shrink in 0.05..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(2..=5);
        let j = rng.gen_range(1..=3);
        let layout = PseudoIndex::new(k, j).unwrap();
        let n = k * j;
        let prior = simplex(&mut rng, n);
        let gammas: Vec<f64> = (0..j).map(|_| rng.gen_range(0.01..0.3)).collect();
        let smaller: Vec<f64> = gammas.iter().map(|g| g * shrink).collect();
        let eta = rng.gen_range(0.1..2.0);
        let p = simplex(&mut rng, n);
        let at = |g: &[f64], e: f64| {
            HybridRegularizer::log_barrier_hybrid(layout, e, g, vec![1.0 / n as f64; n], prior.clone())
                .unwrap()
                .value(&p)
                .unwrap()
        };
        prop_assert!(at(&smaller, eta * shrink) >= at(&gammas, eta) - 1e-12);

        let te = |e: f64, g: f64| HybridRegularizer::tsallis_entropy(k, e, g).unwrap().value(&simplex(&mut ChaCha8Rng::seed_from_u64(seed), k)).unwrap();
        prop_assert!(te(eta * shrink, gammas[0] * shrink) >= te(eta, gammas[0]) - 1e-12);

        let column: Vec<f64> = (0..k).flat_map(|_| gammas.iter().copied()).collect();
        let shrunk: Vec<f64> = column.iter().map(|g| g * shrink).collect();
        let we = |r: Vec<f64>| HybridRegularizer::weighted_entropy(layout, r, prior.clone()).unwrap().value(&p).unwrap();
        prop_assert!(we(shrunk) >= we(column) - 1e-12);
    }

    #[test]
    fn grid_rates_are_capped(k in 2usize..12, t in 2usize..100_000, rho in 0usize..50, rho_star in 1.0..60.0f64) {
        let g = full_info_grid(1, rho, k, t);
        prop_assert!(g.rates.iter().all(|&r| r > 0.0 && r <= 1.0 / (4.0 * (1.0 + rho as f64))));
        let pc = pc_gamma_grid(k, t, rho_star);
        prop_assert!(pc.rates.iter().all(|&r| r > 0.0 && r <= 1.0 / (4.0 * rho_star)));
        prop_assert!(pc.rates.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn missing_counts_match_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rng.gen_range(1..40);
        let k = rng.gen_range(1..5);
        let delays: Vec<usize> = (0..t * k).map(|_| rng.gen_range(0..8)).collect();
        let schedule = DelaySchedule::new(t, k, delays).unwrap();
        let counts = MissingCounts::from_schedule(&schedule);
        prop_assert_eq!(counts.max(), realized_rho_star(&schedule));
        for round in 1..=t {
            for arm in 0..k {
                let direct = (1..round)
                    .filter(|&s| schedule.delivery_round(s, arm) >= round)
                    .count();
                prop_assert_eq!(counts.get(round, arm), direct);
            }
        }
    }
}

use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use delayed_ftrl::delays::DeliveryQueue;
use delayed_ftrl::environments::{DelayKind, Environment, LossKind, Scenario};
use delayed_ftrl::harness::checks::{drift_instances, run_suite, Suite};
use delayed_ftrl::harness::episode::{regret, run_episode, Comparator};
use delayed_ftrl::harness::{emit, monte_carlo, ExperimentConfig, LearnerConfig};
use delayed_ftrl::learners::{ConcealedConfig, ConcealedLearner, Learner, Setting};
use delayed_ftrl::oracle::{brute_force_regret, drift_terms};
use delayed_ftrl::solver::{coordinate_solve_tsallis_entropy, tsallis_entropy_residual};

const BIN: &str = env!("CARGO_BIN_EXE_delayed-ftrl");

fn small_config(setting: Setting, rng: &mut ChaCha8Rng, seed: u64) -> ExperimentConfig {
    let k = rng.gen_range(2..=4);
    ExperimentConfig {
        setting,
        scenario: Scenario {
            horizon: rng.gen_range(5..=60),
            num_arms: k,
            seed,
            loss: LossKind::BernoulliGap {
                gap: rng.gen_range(0.0..0.5),
                best_mean: rng.gen_range(0.0..0.5),
                best_arm: rng.gen_range(0..k),
            },
            delay: DelayKind::RandomBounded {
                d_max: rng.gen_range(0..6),
            },
        },
        learner: LearnerConfig::default(),
        seeds: vec![seed],
        output: None,
    }
}

#[test]
fn harness_regret_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let settings = [Setting::FullInfo, Setting::PartiallyConcealed, Setting::Concealed];
    for n in 0..100u64 {
        let config = small_config(settings[n as usize % 3], &mut rng, n);
        let env = Environment::generate(&config.scenario).unwrap();
        let trace = run_episode(&config, &env, n).unwrap();
        let (_, brute) = brute_force_regret(&env.losses, &trace);
        let harness = regret(&trace, &env.losses, &Comparator::BestArm).unwrap();
        assert!((brute - harness).abs() <= 1e-9, "instance {n}: {brute} vs {harness}");
    }
}

#[test]
fn tsallis_coordinate_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let eta = rng.gen_range(0.02..1.0);
        let gamma = rng.gen_range(0.02..1.0);
        let z = rng.gen_range(0.0..10.0);
        let c = rng.gen_range(-10.0..5.0);
        let p = coordinate_solve_tsallis_entropy(eta, gamma, z, c).unwrap();
        // Sign change of the residual on a 1e6-point log grid over [1e-12, 10].
        let n = 1_000_000;
        let (lo, hi) = (1e-12f64.ln(), 10f64.ln());
        let step = (hi - lo) / n as f64;
        let mut found = None;
        let mut prev = tsallis_entropy_residual(eta, gamma, z, c, lo.exp());
        for i in 1..=n {
            let x = (lo + step * i as f64).exp();
            let r = tsallis_entropy_residual(eta, gamma, z, c, x);
            if prev < 0.0 && r >= 0.0 {
                found = Some(x);
                break;
            }
            prev = r;
        }
        let scan = found.expect("residual changes sign inside the scan range");
        assert!(
            (scan.ln() - p.ln()).abs() <= step * 1.0001,
            "scan {scan} vs solver {p}"
        );
    }
}

#[test]
fn concealed_missing_mass_matches_trace() {
    let scenario = Scenario {
        horizon: 300,
        num_arms: 3,
        seed: 4,
        loss: LossKind::BernoulliGap {
            gap: 0.2,
            best_mean: 0.3,
            best_arm: 1,
        },
        delay: DelayKind::RandomBounded { d_max: 9 },
    };
    let env = Environment::generate(&scenario).unwrap();
    let mut learner = ConcealedLearner::new(ConcealedConfig {
        horizon: 300,
        num_arms: 3,
        rho_star: env.realized_rho_star().max(1) as f64,
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut queue = DeliveryQueue::new(300);
    let mut plays = Vec::new();
    for t in 1..=300 {
        let p = learner.predict(&mut rng).unwrap();
        let a = p.action.unwrap();
        plays.push((a, p.marginal[a]));
        for (d, e) in env.route(Setting::Concealed, t, Some(a)).unwrap() {
            queue.push(d, e);
        }
        learner.absorb(&queue.deliveries_at(t)).unwrap();
    }
    let mut total = 0.0;
    for (s, &(a, _)) in plays.iter().enumerate() {
        let round = s + 1;
        let expected: f64 = plays[..s]
            .iter()
            .enumerate()
            .filter(|&(o, &(b, _))| b == a && env.delays.delivery_round(o + 1, b) >= round)
            .map(|(_, &(_, q))| 1.0 / q)
            .sum();
        let got = learner.mass_terms()[s];
        assert!((got - expected).abs() <= 1e-9 * (1.0 + expected), "round {round}");
        total += expected;
    }
    assert!((learner.missing_mass() - total).abs() <= 1e-9 * (1.0 + total));
    assert!(total > 0.0);
}

#[test]
fn drift_identity_on_reachable_states() {
    for setting in [Setting::FullInfo, Setting::PartiallyConcealed, Setting::Concealed] {
        for inst in drift_instances(setting, 200).unwrap() {
            let t = drift_terms(&inst).unwrap();
            assert!(t.lhs <= t.rhs + 1e-8, "{setting:?}: {} > {}", t.lhs, t.rhs);
            assert!(t.multiplier_available <= t.multiplier_next + 1e-8);
        }
    }
}

#[test]
fn solver_suite_passes() {
    for outcome in run_suite(Suite::Solver) {
        assert!(outcome.passed, "{outcome}");
    }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_runs_write_identical_csv() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut config = small_config(Setting::PartiallyConcealed, &mut rng, 3);
    config.seeds = vec![3, 4, 5];
    let tmp = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        emit(&monte_carlo(&config).unwrap(), &tmp.path().join(run), true).unwrap();
    }
    let a = read_dir_sorted(&tmp.path().join("a"));
    assert_eq!(a.len(), 3);
    assert_eq!(a, read_dir_sorted(&tmp.path().join("b")));
    assert_ne!(a[0].1, a[1].1);
    let header = String::from_utf8(a[0].1.clone()).unwrap();
    assert!(header.starts_with("round,action,loss,cum_regret,q_0,q_1"));
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = ExperimentConfig::load(&path).unwrap();
        config.validate().unwrap();
        n += 1;
    }
    assert!(n >= 3);
}

#[test]
fn cli_run_and_check() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
  "setting": "concealed",
  "scenario": {
    "horizon": 200,
    "num_arms": 3,
    "loss": { "kind": "bernoulli_gap" },
    "delay": { "kind": "constant", "delay": 3 }
  },
  "seeds": [0]
}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let status = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--seeds", "2"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert!(stdout.contains("certificate Pass"), "{stdout}");
    assert_eq!(read_dir_sorted(&out).len(), 2);
    assert!(out.join("summary.json").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seeds"].as_array().unwrap().len(), 2);

    let check = Command::new(BIN).args(["check", "--suite", "solver"]).output().unwrap();
    assert!(check.status.success());
    assert_eq!(String::from_utf8(check.stdout).unwrap().lines().count(), 3);

    std::fs::write(&config, r#"{"setting": "concealed", "bogus": 1}"#).unwrap();
    let bad = Command::new(BIN).args(["run", "--config"]).arg(&config).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

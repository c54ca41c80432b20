//! Acceptance suites: solver, drift and bound certificates.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Algorithm, ExperimentConfig, LearnerConfig};
use super::episode::run_episode_observed;
use super::report::{emit, monte_carlo, CertificateStatus};
use crate::delays::FeedbackEvent;
use crate::environments::{DelayKind, Environment, LossKind, Scenario};
use crate::error::{Error, Result};
use crate::learners::{
    layered_prior, loss_estimate, sample_index, ConcealedConfig, ConcealedLearner, Learner,
    Setting,
};
use crate::oracle::{
    dense_log_barrier_hessian, dense_solve, drift_check, drift_terms, finite_difference, hedge_closed_form,
    DriftInstance, OracleReport,
};
use crate::regularizers::{HybridRegularizer, PseudoIndex};
use crate::solver::{solve, solve_with_hint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Solver,
    Drift,
    Bounds,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Solver => &[1, 2, 3],
            Suite::Drift => &[4, 5],
            Suite::Bounds => &[6, 7, 8, 9, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {:>2} [{}] {} ({:.1}s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.detail
        )
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "solver correctness",
        2 => "exponential-weights equivalence",
        3 => "derivative checks",
        4 => "drift certificate",
        5 => "estimator unbiasedness and range",
        6 => "full-information bound certificate",
        7 => "partially concealed bound certificate",
        8 => "concealed bound certificate",
        9 => "zero-delay reduction against Exp3",
        10 => "deterministic CSV output",
        _ => "unknown",
    }
}

/// Runs one criterion, turning errors into failures.
pub fn run_criterion(id: u8) -> CriterionOutcome {
    let start = Instant::now();
    let outcome: Result<(bool, String)> = match id {
        1 => solver_correctness(),
        2 => hedge_equivalence(),
        3 => derivative_checks(),
        4 => drift_certificate(),
        5 => estimator_checks(),
        6 => full_info_certificate(),
        7 => partially_concealed_certificate(),
        8 => concealed_certificate(),
        9 => zero_delay_reduction(),
        10 => deterministic_output(),
        _ => Err(Error::Argument(format!("no criterion {id}"))),
    };
    let mut seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if id == 1 && seconds >= 30.0 {
        passed = false;
        detail.push_str("; exceeded 30 s");
    }
    if id == 7 && seconds >= 600.0 {
        passed = false;
        detail.push_str("; exceeded 10 min");
    }
    seconds = (seconds * 10.0).round() / 10.0;
    CriterionOutcome {
        id,
        title: title(id),
        passed,
        detail,
        seconds,
    }
}

pub fn run_suite(suite: Suite) -> Vec<CriterionOutcome> {
    suite.criteria().iter().map(|&id| run_criterion(id)).collect()
}

fn summarize(reports: &[OracleReport]) -> (bool, String) {
    let passed = reports.iter().all(|r| r.passed);
    let detail = reports
        .iter()
        .map(|r| {
            format!(
                "{}: n={} skipped={} max={:.2e} tol={:.0e}",
                r.name, r.instances, r.skipped, r.max_violation, r.tolerance
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    (passed, detail)
}

fn random_simplex(rng: &mut impl Rng, n: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| floor + rng.gen::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    WeightedEntropy,
    LogBarrier,
    TsallisEntropy,
    Tsallis,
}

pub const FAMILIES: [Family; 4] = [
    Family::WeightedEntropy,
    Family::LogBarrier,
    Family::TsallisEntropy,
    Family::Tsallis,
];

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::WeightedEntropy => "weighted entropy",
            Family::LogBarrier => "log barrier + entropy",
            Family::TsallisEntropy => "Tsallis + entropy",
            Family::Tsallis => "Tsallis",
        }
    }
}

/// A random regularizer of `family` and a loss scale that keeps the
/// minimizer away from the exponent clamp.
pub fn random_regularizer(family: Family, rng: &mut impl Rng) -> Result<(HybridRegularizer, f64)> {
    match family {
        Family::WeightedEntropy => {
            let k = rng.gen_range(2..=6);
            let j = rng.gen_range(1..=4);
            let layout = PseudoIndex::new(k, j)?;
            let column: Vec<f64> = (0..j).map(|_| rng.gen_range(0.01..0.3)).collect();
            let rates = (0..k).flat_map(|_| column.iter().copied()).collect();
            let pi = random_simplex(rng, k, 0.05);
            let reg = HybridRegularizer::weighted_entropy(layout, rates, layered_prior(&pi, j))?;
            Ok((reg, 100.0))
        }
        Family::LogBarrier => {
            let k = rng.gen_range(2..=5);
            let j = rng.gen_range(1..=4);
            let layout = PseudoIndex::new(k, j)?;
            let gammas: Vec<f64> = (0..j).map(|_| rng.gen_range(0.01..0.25)).collect();
            let eta = rng.gen_range(0.2..3.0);
            let pi = random_simplex(rng, k, 0.05);
            let reg = HybridRegularizer::log_barrier_hybrid(
                layout,
                eta,
                &gammas,
                vec![1.0 / (k * j) as f64; k * j],
                layered_prior(&pi, j),
            )?;
            Ok((reg, 40.0))
        }
        Family::TsallisEntropy => {
            let k = rng.gen_range(2..=8);
            let eta = rng.gen_range(0.01..0.5);
            let gamma = rng.gen_range(0.01..1.0);
            Ok((HybridRegularizer::tsallis_entropy(k, eta, gamma)?, 100.0))
        }
        Family::Tsallis => {
            let k = rng.gen_range(2..=8);
            Ok((HybridRegularizer::tsallis(k, rng.gen_range(0.01..0.5))?, 100.0))
        }
    }
}

fn with_offset(reg: &HybridRegularizer, loss: &[f64]) -> Vec<f64> {
    loss.iter().zip(reg.offset()).map(|(l, o)| l + o).collect()
}

fn solver_correctness() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x501);
    let mut reports = Vec::new();
    for family in FAMILIES {
        let mut kkt = Vec::new();
        let mut mass = Vec::new();
        let mut agree = Vec::new();
        for _ in 0..500 {
            let (reg, scale) = random_regularizer(family, &mut rng)?;
            let loss: Vec<f64> = (0..reg.dim()).map(|_| scale * rng.gen::<f64>()).collect();
            let total = with_offset(&reg, &loss);
            let a = solve(&total, &reg)?;
            let hint = a.multiplier + rng.gen_range(-20.0..20.0);
            let b = solve_with_hint(&total, &reg, Some(hint))?;
            kkt.push(a.residual.max(b.residual));
            mass.push(
                (a.distribution.iter().sum::<f64>() - 1.0)
                    .abs()
                    .max((b.distribution.iter().sum::<f64>() - 1.0).abs()),
            );
            agree.push(
                a.distribution
                    .iter()
                    .zip(&b.distribution)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max),
            );
        }
        reports.push(OracleReport::from_violations(
            format!("{} KKT", family.name()),
            kkt,
            0,
            1e-8,
        ));
        reports.push(OracleReport::from_violations(
            format!("{} mass", family.name()),
            mass,
            0,
            1e-10,
        ));
        reports.push(OracleReport::from_violations(
            format!("{} warm starts", family.name()),
            agree,
            0,
            1e-9,
        ));
    }
    Ok(summarize(&reports))
}

fn hedge_equivalence() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x502);
    let mut worst = Vec::new();
    for _ in 0..200 {
        let k = rng.gen_range(2..=10);
        let pi = random_simplex(&mut rng, k, 0.01);
        let eta = rng.gen_range(0.01..2.0);
        let loss: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..20.0)).collect();
        let layout = PseudoIndex::new(k, 1)?;
        let reg = HybridRegularizer::weighted_entropy(layout, vec![eta; k], pi.clone())?;
        let p = solve(&with_offset(&reg, &loss), &reg)?.distribution;
        let h = hedge_closed_form(&pi, eta, &loss);
        worst.push(
            p.iter()
                .zip(&h)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    Ok(summarize(&[OracleReport::from_violations(
        "solver vs closed form",
        worst,
        0,
        1e-8,
    )]))
}

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn derivative_checks() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x503);
    let mut reports = Vec::new();
    for family in FAMILIES {
        let mut grad = Vec::new();
        let mut inverse = Vec::new();
        for _ in 0..100 {
            let (reg, _) = random_regularizer(family, &mut rng)?;
            let p = random_simplex(&mut rng, reg.dim(), 0.1);
            let offset = reg.offset();
            let analytic: Vec<f64> = reg
                .gradient(&p)?
                .iter()
                .zip(&offset)
                .map(|(g, o)| g + o)
                .collect();
            let numeric = finite_difference(|x| reg.value(x), &p, 1e-5)?;
            grad.push(relative_gap(&numeric, &analytic));

            let v: Vec<f64> = (0..reg.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let hv = reg.hessian_apply(&p, &v)?;
            let back = reg.hessian_inverse_apply(&p, &hv)?;
            let norm = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
            inverse.push(
                back.iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
                    / norm,
            );
        }
        reports.push(OracleReport::from_violations(
            format!("{} gradient", family.name()),
            grad,
            0,
            1e-5,
        ));
        reports.push(OracleReport::from_violations(
            format!("{} inverse Hessian", family.name()),
            inverse,
            0,
            1e-8,
        ));
    }
    let mut blocks = Vec::new();
    for _ in 0..200 {
        let k = rng.gen_range(1..=3);
        let j = rng.gen_range(1..=4);
        let layout = PseudoIndex::new(k, j)?;
        let gammas: Vec<f64> = (0..j).map(|_| rng.gen_range(0.01..0.5)).collect();
        let eta = rng.gen_range(0.05..5.0);
        let n = k * j;
        let reg = HybridRegularizer::log_barrier_hybrid(
            layout,
            eta,
            &gammas,
            vec![1.0 / n as f64; n],
            vec![1.0 / n as f64; n],
        )?;
        let p = random_simplex(&mut rng, n, 0.05);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = reg.hessian_inverse_apply(&p, &v)?;
        let per_coordinate: Vec<f64> = (0..k).flat_map(|_| gammas.iter().copied()).collect();
        let dense = dense_solve(dense_log_barrier_hessian(&p, eta, &per_coordinate, j), &v)?;
        let norm = dense.iter().map(|x| x.abs()).fold(0.0, f64::max);
        blocks.push(
            fast.iter()
                .zip(&dense)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / norm,
        );
    }
    reports.push(OracleReport::from_violations(
        "Sherman-Morrison vs dense",
        blocks,
        0,
        1e-8,
    ));
    Ok(summarize(&reports))
}

fn sum_increments(learner: &dyn Learner, events: &[FeedbackEvent]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; learner.layout().len()];
    for e in events {
        for (o, v) in out.iter_mut().zip(learner.corrected_loss(e)?) {
            *o += v;
        }
    }
    Ok(out)
}

/// Reachable learner states from small episodes (`K <= 4`, `T <= 50`).
pub fn drift_instances(setting: Setting, minimum: usize) -> Result<Vec<DriftInstance>> {
    let mut out = Vec::new();
    let mut episode = 0u64;
    while out.len() < minimum {
        let mut rng = ChaCha8Rng::seed_from_u64(0xD41F7 + episode);
        let k = rng.gen_range(2..=4);
        let horizon = rng.gen_range(16..=50);
        let loss = match episode % 3 {
            0 => LossKind::BernoulliGap {
                gap: rng.gen_range(0.1..0.5),
                best_mean: rng.gen_range(0.0..0.5),
                best_arm: rng.gen_range(0..k),
            },
            1 => LossKind::AdversarialDrift {
                gap: rng.gen_range(0.1..0.6),
                best_mean: rng.gen_range(0.0..0.4),
                phases: rng.gen_range(2..=6),
            },
            _ => LossKind::Constant {
                values: (0..k).map(|_| rng.gen::<f64>()).collect(),
            },
        };
        let delay = match episode % 4 {
            0 => DelayKind::Zero,
            1 => DelayKind::Constant {
                delay: rng.gen_range(1..=6),
            },
            2 => DelayKind::RandomBounded {
                d_max: rng.gen_range(1..=8),
            },
            _ => DelayKind::InverseLoss {
                d_max: rng.gen_range(2..=10),
            },
        };
        let config = ExperimentConfig {
            setting,
            scenario: Scenario {
                horizon,
                num_arms: k,
                seed: episode,
                loss,
                delay,
            },
            learner: LearnerConfig {
                prior: (setting != Setting::Concealed && episode % 2 == 1)
                    .then(|| random_simplex(&mut rng, k, 0.2)),
                ..LearnerConfig::default()
            },
            seeds: vec![episode],
            output: None,
        };
        let env = Environment::generate(&config.scenario)?;
        run_episode_observed(&config, &env, episode, |view| {
            let reg = view
                .learner
                .regularizer()
                .ok_or_else(|| Error::Protocol("no regularizer after predicting".into()))?;
            out.push(DriftInstance {
                regularizer: reg.clone(),
                available: view.learner.available_loss().to_vec(),
                fresh: sum_increments(view.learner, view.fresh)?,
                missing: sum_increments(view.learner, view.pending)?,
            });
            Ok(())
        })?;
        episode += 1;
    }
    Ok(out)
}

fn drift_certificate() -> Result<(bool, String)> {
    let mut reports = Vec::new();
    let mut ratios = Vec::new();
    for setting in [Setting::FullInfo, Setting::PartiallyConcealed, Setting::Concealed] {
        let instances = drift_instances(setting, 1000)?;
        let (drift, multiplier) = drift_check(setting.as_str(), &instances, 1e-8);
        let skipped = drift.skipped;
        let mut tight: f64 = 0.0;
        let mut active = 0;
        for inst in &instances {
            if let Ok(t) = drift_terms(inst) {
                if t.rhs > 1e-12 {
                    active += 1;
                    tight = tight.max(t.lhs / t.rhs);
                }
            }
        }
        ratios.push(format!("{}: max lhs/rhs {tight:.3} over {active}", setting.as_str()));
        reports.push(drift);
        reports.push(multiplier);
        if skipped > 0 {
            return Ok((false, format!("{skipped} solver failures in {}", setting.as_str())));
        }
    }
    let (passed, detail) = summarize(&reports);
    Ok((passed, format!("{detail}; {}", ratios.join("; "))))
}

fn estimator_checks() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x505);
    let n = 100_000;
    let mut details = Vec::new();
    let mut passed = true;
    let mut pairs = 0;
    for (q, loss) in [
        (vec![0.2, 0.5, 0.3], vec![0.9, 0.4, 0.7]),
        (vec![0.05, 0.95], vec![1.0, 0.3]),
        (vec![0.25; 4], vec![0.6, 0.0, 1.0, 0.5]),
    ] {
        for arm in 0..q.len() {
            let draws: Vec<f64> = (0..n)
                .map(|_| {
                    let played = sample_index(&q, &mut rng);
                    loss_estimate(played, arm, q[arm], 0.0, loss[arm])
                })
                .collect::<Result<_>>()?;
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var =
                draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            let z = if se > 0.0 { (mean - loss[arm]) / se } else { 0.0 };
            pairs += 1;
            if z.abs() > 3.0 {
                passed = false;
                details.push(format!("arm {arm} of {q:?}: z = {z:.2}"));
            }
        }
    }
    // Range under implicit exploration along a real episode.
    let mut learner = ConcealedLearner::new(ConcealedConfig {
        horizon: 2000,
        num_arms: 5,
        rho_star: 3.0,
    })?;
    let mut worst: f64 = 0.0;
    for t in 1..=2000usize {
        let p = learner.predict(&mut rng)?;
        let arm = p.action.unwrap_or_default();
        let event = FeedbackEvent {
            origin_round: t,
            arm,
            loss: 1.0,
            missing_count: None,
        };
        let est = learner.corrected_loss(&event)?[arm];
        worst = worst.max(est / (t as f64).sqrt());
        learner.absorb(&[event])?;
    }
    if worst > 1.0 {
        passed = false;
    }
    details.push(format!(
        "{pairs} arm estimates within 3 SE over {n} draws; max estimate * eps_t = {worst:.4}"
    ));
    Ok((passed, details.join("; ")))
}

fn bandit_config(
    setting: Setting,
    horizon: usize,
    delay: DelayKind,
    seeds: std::ops::Range<u64>,
    algorithm: Algorithm,
) -> ExperimentConfig {
    ExperimentConfig {
        setting,
        scenario: Scenario {
            horizon,
            num_arms: 5,
            seed: 2024,
            loss: LossKind::BernoulliGap {
                gap: 0.3,
                best_mean: 0.2,
                best_arm: 0,
            },
            delay,
        },
        learner: LearnerConfig {
            algorithm,
            ..LearnerConfig::default()
        },
        seeds: seeds.collect(),
        output: None,
    }
}

fn full_info_certificate() -> Result<(bool, String)> {
    let mut passed = true;
    let mut details = Vec::new();
    for (label, delay) in [
        ("zero", DelayKind::Zero),
        ("constant(5)", DelayKind::Constant { delay: 5 }),
        ("inverse_loss(10)", DelayKind::InverseLoss { d_max: 10 }),
    ] {
        let config = ExperimentConfig {
            setting: Setting::FullInfo,
            scenario: Scenario {
                horizon: 10_000,
                num_arms: 10,
                seed: 77,
                loss: LossKind::BernoulliGap {
                    gap: 0.3,
                    best_mean: 0.2,
                    best_arm: 3,
                },
                delay,
            },
            learner: LearnerConfig::default(),
            seeds: vec![1, 2, 3],
            output: None,
        };
        let report = monte_carlo(&config)?.report;
        let ok = report.passed()
            && report.certificate.status == CertificateStatus::Pass
            && report.per_seed.len() == 3;
        passed &= ok;
        details.push(format!(
            "{label}: max regret {:.1} <= {:.1}",
            report.certificate.value, report.certificate.bound
        ));
    }
    Ok((passed, details.join("; ")))
}

fn partially_concealed_certificate() -> Result<(bool, String)> {
    let config = bandit_config(
        Setting::PartiallyConcealed,
        20_000,
        DelayKind::InverseLoss { d_max: 10 },
        0..50,
        Algorithm::DelayedFtrl,
    );
    let report = monte_carlo(&config)?.report;
    let worst_rate = report
        .per_seed
        .iter()
        .map(|s| s.regret / config.scenario.horizon as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst = worst_rate * config.scenario.horizon as f64;
    let ok = report.passed()
        && report.certificate.status == CertificateStatus::Pass
        && report.per_seed.len() == 50
        && worst <= report.certificate.bound
        && worst_rate <= 0.2;
    Ok((
        ok,
        format!(
            "rho* = {} (realized {}), mean regret {:.1} +- {:.1} (max {worst:.1}) <= {:.1}; max regret/T {:.4} <= 0.2",
            report.rho_star,
            report.realized_rho_max,
            report.mean_regret,
            report.stderr_regret.unwrap_or(f64::NAN),
            report.certificate.bound,
            worst_rate
        ),
    ))
}

fn concealed_certificate() -> Result<(bool, String)> {
    let config = bandit_config(
        Setting::Concealed,
        20_000,
        DelayKind::Constant { delay: 10 },
        0..50,
        Algorithm::DelayedFtrl,
    );
    let report = monte_carlo(&config)?.report;
    let ok = report.passed()
        && report.certificate.status == CertificateStatus::Pass
        && report.per_seed.len() == 50;
    Ok((
        ok,
        format!(
            "mean regret {:.1} +- {:.1} <= {:.1} (mean delay mass {:.1}, rho* = {})",
            report.mean_regret,
            report.stderr_regret.unwrap_or(f64::NAN),
            report.certificate.bound,
            report.mean_delay_mass,
            report.rho_star
        ),
    ))
}

fn zero_delay_reduction() -> Result<(bool, String)> {
    let ours = monte_carlo(&bandit_config(
        Setting::PartiallyConcealed,
        20_000,
        DelayKind::Zero,
        0..20,
        Algorithm::DelayedFtrl,
    ))?
    .report;
    let baseline = monte_carlo(&bandit_config(
        Setting::PartiallyConcealed,
        20_000,
        DelayKind::Zero,
        0..20,
        Algorithm::Exp3,
    ))?
    .report;
    let ratio = ours.mean_regret / baseline.mean_regret;
    let ok = ours.passed() && baseline.passed() && (1.0 / 3.0..=3.0).contains(&ratio);
    Ok((
        ok,
        format!(
            "mean regret {:.1} vs Exp3 {:.1}, ratio {ratio:.3} within [1/3, 3]",
            ours.mean_regret, baseline.mean_regret
        ),
    ))
}

fn deterministic_output() -> Result<(bool, String)> {
    let config = bandit_config(
        Setting::Concealed,
        2_000,
        DelayKind::RandomBounded { d_max: 7 },
        5..7,
        Algorithm::DelayedFtrl,
    );
    let root = std::env::temp_dir().join(format!(
        "delayed-ftrl-determinism-{}-{}",
        std::process::id(),
        ChaCha8Rng::from_entropy().next_u64()
    ));
    let mut contents = Vec::new();
    for run in 0..2 {
        let dir = root.join(format!("run{run}"));
        let experiment = monte_carlo(&config)?;
        emit(&experiment, &dir, true)?;
        let mut files = Vec::new();
        for seed in &config.seeds {
            let path = dir.join(super::report::trace_file_name(*seed));
            files.push(std::fs::read(&path).map_err(|source| Error::Io { path, source })?);
        }
        contents.push(files);
    }
    let _ = std::fs::remove_dir_all(&root);
    let identical = contents[0] == contents[1];
    let bytes: usize = contents[0].iter().map(Vec::len).sum();
    Ok((
        identical,
        format!("{} CSV files, {bytes} bytes, identical = {identical}", config.seeds.len()),
    ))
}

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::bounds::{
    concealed_bound, full_info_bound, partially_concealed_bound, tradeoff_vertex, BoundStatistics,
};
use super::config::{Algorithm, ExperimentConfig};
use super::episode::{best_arm, cumulative_regret, regret, run_episode, Comparator, EpisodeTrace};
use crate::environments::Environment;
use crate::error::{Error, Result};
use crate::learners::Setting;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Pass,
    Fail,
    /// The configured `rho*` is below the realized maximum; the bound does not apply.
    AssumptionViolated,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateScope {
    /// Every seed's regret is compared with the bound.
    PerSeed,
    /// The mean regret over seeds is compared with the bound.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub scope: CertificateScope,
    pub bound: f64,
    /// Largest per-seed regret or the mean regret, depending on `scope`.
    pub value: f64,
    pub status: CertificateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub regret: f64,
    pub incurred: f64,
    pub delay_mass: f64,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub setting: Setting,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<SeedSummary>,
    pub failures: Vec<SeedFailure>,
    pub mean_regret: f64,
    /// `None` with fewer than two successful seeds.
    pub stderr_regret: Option<f64>,
    pub mean_delay_mass: f64,
    pub best_arm: usize,
    pub best_arm_loss: f64,
    /// Vertex minimizing the first-order trade-off; a diagnostic only.
    pub tradeoff_arm: usize,
    pub tradeoff_value: f64,
    pub realized_rho_max: usize,
    pub rho_star: f64,
    pub statistics: BoundStatistics,
    pub certificate: Certificate,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.certificate.status != CertificateStatus::Fail
    }
}

/// Output of [`monte_carlo`].
#[derive(Debug, Clone)]
pub struct Experiment {
    pub environment: Environment,
    pub traces: Vec<EpisodeTrace>,
    pub report: Report,
}

/// Runs every seed in parallel and aggregates regret and certificates.
pub fn monte_carlo(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let env = Environment::generate(&config.scenario)?;
    let outcomes: Vec<(u64, Result<EpisodeTrace>)> = config
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_episode(config, &env, seed)))
        .collect();
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(t) => traces.push(t),
            Err(e) => failures.push(SeedFailure {
                seed,
                error: e.to_string(),
            }),
        }
    }
    let report = aggregate(config, &env, &traces, failures)?;
    Ok(Experiment {
        environment: env,
        traces,
        report,
    })
}

fn aggregate(
    config: &ExperimentConfig,
    env: &Environment,
    traces: &[EpisodeTrace],
    failures: Vec<SeedFailure>,
) -> Result<Report> {
    let cumulative = env.losses.cumulative();
    let best = best_arm(&cumulative);
    let prior = config.prior();
    let delay_weighted = env.missing.delay_weighted_losses(&env.losses);
    let mut per_seed = Vec::with_capacity(traces.len());
    for t in traces {
        per_seed.push(SeedSummary {
            seed: t.seed,
            regret: regret(t, &env.losses, &Comparator::BestArm)?,
            incurred: t.total_incurred(),
            delay_mass: t.delay_mass,
            discarded: t.discarded,
        });
    }
    let n = per_seed.len() as f64;
    let mean = |f: &dyn Fn(&SeedSummary) -> f64| -> f64 {
        if per_seed.is_empty() {
            f64::NAN
        } else {
            per_seed.iter().map(f).sum::<f64>() / n
        }
    };
    let mean_regret = mean(&|s| s.regret);
    let mean_delay_mass = mean(&|s| s.delay_mass);
    let stderr_regret = (per_seed.len() >= 2).then(|| {
        let var = per_seed
            .iter()
            .map(|s| (s.regret - mean_regret).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    });

    let realized = env.realized_rho_star();
    let rho_star = config.rho_star(env);
    let mut u = vec![0.0; env.num_arms()];
    u[best] = 1.0;
    let statistics = BoundStatistics {
        horizon: env.horizon(),
        num_arms: env.num_arms(),
        comparator: u,
        prior: prior.clone(),
        cumulative_loss: cumulative.clone(),
        delay_weighted_loss: delay_weighted.clone(),
        rho_max: realized,
        rho_star,
        delay_mass: mean_delay_mass,
    };
    let max_regret = per_seed
        .iter()
        .map(|s| s.regret)
        .fold(f64::NEG_INFINITY, f64::max);
    let judge = |value: f64, bound: f64| {
        if value <= bound {
            CertificateStatus::Pass
        } else {
            CertificateStatus::Fail
        }
    };
    let assumption_ok = rho_star >= realized as f64;
    let certificate = match (config.learner.algorithm, config.setting) {
        (Algorithm::Exp3, _) => Certificate {
            scope: CertificateScope::Mean,
            bound: f64::NAN,
            value: mean_regret,
            status: CertificateStatus::NotApplicable,
        },
        (Algorithm::DelayedFtrl, Setting::FullInfo) => {
            let bound = full_info_bound(&statistics);
            Certificate {
                scope: CertificateScope::PerSeed,
                bound,
                value: max_regret,
                status: judge(max_regret, bound),
            }
        }
        (Algorithm::DelayedFtrl, setting) => {
            let bound = if setting == Setting::PartiallyConcealed {
                partially_concealed_bound(&statistics)
            } else {
                concealed_bound(&statistics)
            };
            Certificate {
                scope: CertificateScope::Mean,
                bound,
                value: mean_regret,
                status: if assumption_ok {
                    judge(mean_regret, bound)
                } else {
                    CertificateStatus::AssumptionViolated
                },
            }
        }
    };
    let certificate = if per_seed.is_empty() {
        Certificate {
            status: CertificateStatus::Fail,
            ..certificate
        }
    } else {
        certificate
    };
    let (tradeoff_arm, tradeoff_value) = tradeoff_vertex(&cumulative, &delay_weighted, &prior);
    let mut warnings = config.warnings();
    if !assumption_ok {
        warnings.push(format!(
            "rho_star = {rho_star} is below the realized maximum missing count {realized}"
        ));
    }
    Ok(Report {
        config: config.clone(),
        setting: config.setting,
        algorithm: config.learner.algorithm,
        seeds: config.seeds.clone(),
        per_seed,
        failures,
        mean_regret,
        stderr_regret,
        mean_delay_mass,
        best_arm: best,
        best_arm_loss: cumulative[best],
        tradeoff_arm,
        tradeoff_value,
        realized_rho_max: realized,
        rho_star,
        statistics,
        certificate,
        warnings,
    })
}

/// CSV file name for a seed.
pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed_{seed}.csv")
}

/// Writes one trace as CSV: `round,action,loss,cum_regret[,q_0..]`.
pub fn write_trace_csv(
    path: &Path,
    trace: &EpisodeTrace,
    env: &Environment,
    full_distribution: bool,
) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let k = env.num_arms();
    let mut header = vec![
        "round".to_string(),
        "action".into(),
        "loss".into(),
        "cum_regret".into(),
    ];
    if full_distribution {
        header.extend((0..k).map(|i| format!("q_{i}")));
    }
    w.write_record(&header).map_err(csv_err)?;
    let mut u = vec![0.0; k];
    u[best_arm(&env.losses.cumulative())] = 1.0;
    let cum = cumulative_regret(trace, &env.losses, &u);
    for (r, c) in trace.rounds.iter().zip(cum) {
        let mut rec = vec![
            r.round.to_string(),
            r.action.map(|a| a.to_string()).unwrap_or_default(),
            r.incurred.to_string(),
            c.to_string(),
        ];
        if full_distribution {
            rec.extend(r.marginal.iter().map(|q| q.to_string()));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes per-seed CSVs and `summary.json` under `dir`; returns the paths written.
pub fn emit(experiment: &Experiment, dir: &Path, full_distribution: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for trace in &experiment.traces {
        let path = dir.join(trace_file_name(trace.seed));
        write_trace_csv(&path, trace, &experiment.environment, full_distribution)?;
        written.push(path);
    }
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&experiment.report).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, text + "\n").map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(written)
}

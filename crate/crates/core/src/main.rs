use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use delayed_ftrl::harness::checks::{run_suite, Suite};
use delayed_ftrl::harness::{emit, monte_carlo, CertificateStatus, ExperimentConfig};

#[derive(Parser)]
#[command(name = "delayed-ftrl", version, about = "Delayed FTRL simulator and certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use seeds 0..N instead of the configured list.
        #[arg(long)]
        seeds: Option<u64>,
        /// Add q_i columns to the trace CSVs.
        #[arg(long)]
        csv_full_dist: bool,
    },
    /// Run an acceptance suite.
    Check {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Solver,
    Drift,
    Bounds,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Solver => Suite::Solver,
            SuiteArg::Drift => Suite::Drift,
            SuiteArg::Bounds => Suite::Bounds,
        }
    }
}

fn run(
    config: PathBuf,
    out: Option<PathBuf>,
    seeds: Option<u64>,
    full: bool,
) -> delayed_ftrl::Result<bool> {
    let mut config = ExperimentConfig::load(&config)?;
    if let Some(n) = seeds {
        config.seeds = (0..n).collect();
    }
    if out.is_some() {
        config.output = out;
    }
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    let experiment = monte_carlo(&config)?;
    let r = &experiment.report;
    if let Some(dir) = &config.output {
        let files = emit(&experiment, dir, full)?;
        println!("wrote {} files to {}", files.len(), dir.display());
    }
    println!(
        "{} / {}: {} seeds, {} failed",
        r.setting.as_str(),
        r.algorithm.as_str(),
        r.per_seed.len(),
        r.failures.len()
    );
    for f in &r.failures {
        println!("  seed {}: {}", f.seed, f.error);
    }
    match r.stderr_regret {
        Some(se) => println!("mean regret {:.3} (stderr {:.3})", r.mean_regret, se),
        None => println!("mean regret {:.3}", r.mean_regret),
    }
    println!(
        "best arm {} (loss {:.1}); rho_max {}; rho* {}",
        r.best_arm, r.best_arm_loss, r.realized_rho_max, r.rho_star
    );
    match r.certificate.status {
        CertificateStatus::NotApplicable => println!("no certificate for this algorithm"),
        status => println!(
            "certificate {:?}/{:?}: {:.3} <= {:.3}",
            status, r.certificate.scope, r.certificate.value, r.certificate.bound
        ),
    }
    Ok(r.passed()
        && matches!(
            r.certificate.status,
            CertificateStatus::Pass | CertificateStatus::NotApplicable
        ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ok = match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            csv_full_dist,
        } => match run(config, out, seeds, csv_full_dist) {
            Ok(ok) => ok,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        Command::Check { suite } => {
            let outcomes = run_suite(suite.into());
            for o in &outcomes {
                println!("{o}");
            }
            outcomes.iter().all(|o| o.passed)
        }
    };
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

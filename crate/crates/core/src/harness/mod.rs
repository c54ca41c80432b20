//! Episode simulation, regret accounting, bound certificates and file output.

pub mod bounds;
pub mod config;
pub mod episode;
pub mod checks;
pub mod report;

pub use bounds::BoundStatistics;
pub use config::{Algorithm, ExperimentConfig, LearnerConfig};
pub use episode::{
    best_arm, cumulative_regret, regret, run_episode, run_episode_observed, Comparator,
    EpisodeTrace, RoundRecord, RoundView,
};
pub use report::{emit, monte_carlo, Certificate, CertificateScope, CertificateStatus, Experiment, Report};

//! Scenario generation, the round loop, and the experiment drivers.

mod config;
mod episode;
mod experiments;
mod scenario;

pub use config::{PrivacyConfig, ScenarioConfig, TaskStreamConfig};
pub use episode::{run_episode, run_episode_full, EpisodeOutput, ReleaseOutcome, RoundRecord, RunMetrics};
pub use experiments::{
    adaptation_experiment, balanced_partition, fit_log_log, privacy_sweep, privacy_variant, recovery_rounds,
    scaling_experiment, AdaptationParams as RecoveryParams, AdaptationReport, AdaptationRow, LogLogFit, PrivacyRow,
    ScalingParams, ScalingReport, ScalingRow,
};
pub use scenario::{generate_scenario, Scenario};

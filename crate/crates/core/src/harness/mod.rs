//! Scenario configuration, Monte Carlo campaigns, metrics and result files.

pub mod config;
pub mod metrics;
pub mod output;
pub mod presets;
pub mod run;
pub mod scenario;

pub use config::ScenarioConfig;
pub use metrics::{summarize, StepRow, Summary};
pub use run::{evaluate_run, run_campaign, run_tracking, track, RunRecord, RunSeeds, StepRecord, TrackStep};
pub use scenario::Scenario;

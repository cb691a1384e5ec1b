//! Seeded Monte Carlo campaigns over synthetic sensor pairs.

mod campaign;
mod config;
pub mod output;
mod run;

pub use campaign::{
    ensemble_made_curve, learning_rate_sweep, made_curve, run_campaign, summarize, time_avg_made,
    CampaignSummary, Curve, SweepPoint, UNSTABLE_FRACTION,
};
pub use config::{Algorithm, ExperimentConfig, Scenario};
pub use run::{realization_seed, run_on_pair, run_realization, RunTrace};

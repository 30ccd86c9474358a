//! Experiment configuration, seeded Monte-Carlo campaigns and multi-seed studies.

mod campaign;
mod config;
mod studies;

pub use campaign::{
    limiting_edge, run_campaign, run_trials, summarize, CampaignOutcome, CampaignSummary, ExperimentSpec,
    Thresholds,
};
pub use config::{Check, DensitySettings, ExperimentConfig, LocalLawSettings, RadialSpec, SpectrumSpec};
pub use studies::{local_law_study, omega_frequency, LocalLawSeed, LocalLawStudy, OmegaRate};

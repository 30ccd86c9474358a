use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Check, ExperimentConfig};
use crate::edge::{limiting_edge_report, EdgeReport};
use crate::ensemble::{run_trial, trial_seed, write_ledger, EnsembleKind, OmegaCheck, TrialRecord};
use crate::model::ModelConfig;
use crate::selfconsistent::{SelfConsistentSystem, SolverOptions};
use crate::stats;
use crate::tracy_widom::{default_table, TW1Table};
use crate::{Error, Result};

/// Finite-sample acceptance thresholds, stored with every summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub ks: f64,
    pub max_exclusion_rate: f64,
    pub min_omega_rate: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { ks: 0.05, max_exclusion_rate: 0.05, min_omega_rate: 0.9 }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub model: ModelConfig,
    pub trials: usize,
    pub k_top: usize,
    pub seed_base: u64,
    pub ensembles: Vec<EnsembleKind>,
    pub outputs: PathBuf,
    pub checks: Vec<Check>,
    pub omega: crate::ensemble::OmegaThresholds,
    pub tol: f64,
}

impl ExperimentSpec {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            model: config.model()?,
            trials: config.trials,
            k_top: config.k_top.max(1),
            seed_base: config.seed_base,
            ensembles: config.ensembles.clone(),
            outputs: config.outputs.clone(),
            checks: config.checks.clone(),
            omega: config.omega,
            tol: config.tol,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub n_trials: usize,
    pub n_excluded: usize,
    pub ks_elliptical: Option<f64>,
    pub ks_gaussian: Option<f64>,
    pub ks_two_sample: Option<f64>,
    pub mean_stat: f64,
    pub var_stat: f64,
    pub gamma0: f64,
    pub lambda_plus_limiting: f64,
    pub omega_pass_rate: f64,
    pub flagged: bool,
    pub thresholds: Thresholds,
    /// Outcome of each requested check.
    pub checks: BTreeMap<String, bool>,
}

impl CampaignSummary {
    pub fn all_checks_pass(&self) -> bool {
        !self.flagged && self.checks.values().all(|&v| v)
    }
}

/// Everything produced by a campaign, kept in memory for callers that want the raw trials.
#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub summary: CampaignSummary,
    pub records: Vec<TrialRecord>,
    pub edge: EdgeReport,
}

fn ensure_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let nonempty = std::fs::read_dir(dir)?.next().is_some();
        if nonempty && !force {
            return Err(Error::Config(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    } else {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Limiting edge, with refusal if the regularity check fails.
pub fn limiting_edge(model: &ModelConfig, tol: f64) -> Result<EdgeReport> {
    let opts = SolverOptions { tol, ..SolverOptions::default() };
    let sys = SelfConsistentSystem::limiting(model)?.with_options(opts);
    let report = limiting_edge_report(model, &sys, false)?;
    let regularity = report.regularity.clone().expect("limiting report carries regularity");
    if !regularity.passes() {
        return Err(Error::Refused(Box::new(regularity)));
    }
    if report.gamma0.is_none() {
        return Err(Error::Degenerate("γ₀ could not be evaluated at the limiting edge".into()));
    }
    Ok(report)
}

/// Runs the trials (in parallel on `threads` workers) and aggregates them.
/// Results depend only on the spec, never on the thread count.
pub fn run_trials(spec: &ExperimentSpec, edge: &EdgeReport, threads: usize) -> Result<Vec<TrialRecord>> {
    let mut omega = OmegaCheck::for_config(&spec.model, edge.edge)?;
    omega.thresholds = spec.omega;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                run_trial(
                    &spec.model,
                    edge,
                    Some(&omega),
                    &spec.ensembles,
                    spec.k_top,
                    trial_seed(spec.seed_base, t as u64),
                )
            })
            .collect()
    })
}

pub fn summarize(
    spec: &ExperimentSpec,
    edge: &EdgeReport,
    records: &[TrialRecord],
    table: &TW1Table,
    thresholds: Thresholds,
) -> CampaignSummary {
    let kept: Vec<&TrialRecord> = records.iter().filter(|r| r.excluded.is_none()).collect();
    let n_excluded = records.len() - kept.len();
    let ell: Vec<f64> = kept.iter().map(|r| r.rescaled_stat).filter(|v| v.is_finite()).collect();
    let gau: Vec<f64> = kept.iter().map(|r| r.rescaled_stat_gaussian).filter(|v| v.is_finite()).collect();
    let ks = |v: &[f64]| (!v.is_empty()).then(|| table.ks_distance(v));
    let ks_elliptical = ks(&ell);
    let ks_gaussian = ks(&gau);
    let ks_two_sample = (!ell.is_empty() && !gau.is_empty()).then(|| stats::ks_two_sample(&ell, &gau));
    let primary = if ell.is_empty() { &gau } else { &ell };
    let omega_pass_rate = if kept.is_empty() {
        0.0
    } else {
        kept.iter().filter(|r| r.omega_pass).count() as f64 / kept.len() as f64
    };
    let flagged = n_excluded as f64 / records.len().max(1) as f64 > thresholds.max_exclusion_rate;
    let regularity_pass = edge.regularity.as_ref().is_some_and(|r| r.passes());

    let mut checks = BTreeMap::new();
    for check in &spec.checks {
        let pass = match check {
            Check::Edge => regularity_pass,
            Check::Tw => ks_elliptical.or(ks_gaussian).is_some_and(|k| k <= thresholds.ks),
            Check::Comparison => ks_two_sample.is_some_and(|k| k <= thresholds.ks),
            Check::Omega => omega_pass_rate >= thresholds.min_omega_rate,
            // Local laws run from their own subcommand.
            Check::Locallaw => continue,
        };
        checks.insert(format!("{check:?}").to_lowercase(), pass);
    }

    CampaignSummary {
        n_trials: records.len(),
        n_excluded,
        ks_elliptical,
        ks_gaussian,
        ks_two_sample,
        mean_stat: if primary.is_empty() { 0.0 } else { stats::mean(primary) },
        var_stat: stats::variance(primary),
        gamma0: edge.gamma0.unwrap_or(f64::NAN),
        lambda_plus_limiting: edge.edge,
        omega_pass_rate,
        flagged,
        thresholds,
        checks,
    }
}

/// Full campaign: refuses irregular configs, runs the trials, writes
/// `ledger.csv` and `summary.json` into the output directory.
pub fn run_campaign(spec: &ExperimentSpec, threads: usize, force: bool) -> Result<CampaignOutcome> {
    let edge = limiting_edge(&spec.model, spec.tol)?;
    ensure_output_dir(&spec.outputs, force)?;
    let table = default_table()?;
    let records = run_trials(spec, &edge, threads)?;
    let summary = summarize(spec, &edge, &records, &table, Thresholds::default());

    write_ledger(&records, std::fs::File::create(spec.outputs.join("ledger.csv"))?)?;
    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(spec.outputs.join("summary.json"), json + "\n")?;
    Ok(CampaignOutcome { summary, records, edge })
}

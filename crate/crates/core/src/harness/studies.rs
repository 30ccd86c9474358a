//! Multi-seed studies behind the `locallaw` and `omega` subcommands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge::find_edge;
use crate::ensemble::{sample_realization, trial_seed, EnsembleKind, OmegaCheck, OmegaThresholds};
use crate::locallaw::{
    identity_defects, resolvent_pair, sample_data, spectrum, verify_averaged, verify_entrywise, CheckRow,
    DomainKind, SpectralDomain,
};
use crate::model::ModelConfig;
use crate::selfconsistent::SelfConsistentSystem;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLawSeed {
    pub seed: u64,
    pub lambda_plus: f64,
    pub entrywise: Vec<CheckRow>,
    pub averaged: Vec<CheckRow>,
    /// Largest Ward-identity defect over all grid points.
    pub worst_ward: f64,
    /// Largest relative defect of the Frobenius-norm identity.
    pub worst_frobenius: f64,
}

impl LocalLawSeed {
    pub fn entrywise_pass(&self) -> bool {
        self.entrywise.iter().all(|r| r.pass)
    }

    pub fn averaged_pass(&self) -> bool {
        self.averaged.iter().all(|r| r.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLawStudy {
    pub seeds: Vec<LocalLawSeed>,
    pub entrywise_rate: f64,
    pub averaged_rate: f64,
    pub worst_ward: f64,
    pub worst_frobenius: f64,
}

impl LocalLawStudy {
    pub fn rows(&self) -> Vec<CheckRow> {
        self.seeds.iter().flat_map(|s| s.entrywise.iter().chain(&s.averaged).copied()).collect()
    }
}

/// Entrywise and averaged local-law checks on the default 𝐃 grid around each
/// realization's own edge, plus the exact identities at every grid point.
pub fn local_law_study(
    config: &ModelConfig,
    seeds: usize,
    seed_base: u64,
    c_left: Option<f64>,
    c_right: f64,
    epsilon_e: f64,
    threads: usize,
) -> Result<LocalLawStudy> {
    let one = |s: usize| -> Result<LocalLawSeed> {
        let seed = trial_seed(seed_base, s as u64);
        let (xi, x) = sample_data(config, EnsembleKind::Elliptical, seed)?;
        let lambda_plus = find_edge(&SelfConsistentSystem::empirical(config, &xi)?)?.edge;
        let mut domain = SpectralDomain::around(lambda_plus, DomainKind::D);
        domain.c_left = c_left.unwrap_or(domain.c_left);
        domain.c_right = c_right;
        domain.epsilon_e = epsilon_e;
        let grid = domain.default_grid(config.n);
        let entrywise = verify_entrywise(config, &xi, &x, &grid)?.into_iter().map(|r| r.all_entries).collect();
        let averaged = verify_averaged(config, &xi, &x, lambda_plus, &grid)?.into_iter().map(|r| r.uniform).collect();
        let eig = spectrum(&x);
        let (mut worst_ward, mut worst_frobenius): (f64, f64) = (0.0, 0.0);
        for &z in &grid {
            let pair = resolvent_pair(&x, config.spectrum.sigmas(), &xi, z)?;
            let d = identity_defects(&pair, config.spectrum.sigmas(), &eig);
            worst_ward = worst_ward.max(d.ward_companion).max(d.ward_scaled);
            worst_frobenius = worst_frobenius.max(d.frobenius_relative);
        }
        Ok(LocalLawSeed { seed, lambda_plus, entrywise, averaged, worst_ward, worst_frobenius })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
    let seeds: Vec<LocalLawSeed> = pool.install(|| (0..seeds).into_par_iter().map(one).collect::<Result<_>>())?;
    let count = seeds.len().max(1) as f64;
    Ok(LocalLawStudy {
        entrywise_rate: seeds.iter().filter(|s| s.entrywise_pass()).count() as f64 / count,
        averaged_rate: seeds.iter().filter(|s| s.averaged_pass()).count() as f64 / count,
        worst_ward: seeds.iter().map(|s| s.worst_ward).fold(0.0, f64::max),
        worst_frobenius: seeds.iter().map(|s| s.worst_frobenius).fold(0.0, f64::max),
        seeds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaRate {
    pub n: usize,
    pub seeds: usize,
    pub gap1_rate: f64,
    pub spacing_rate: f64,
    pub lln_rate: f64,
    pub omega_rate: f64,
}

/// Ω pass frequencies for the configuration rescaled to each `n` (aspect ratio kept).
pub fn omega_frequency(
    config: &ModelConfig,
    ns: &[usize],
    seeds: usize,
    seed_base: u64,
    thresholds: OmegaThresholds,
    threads: usize,
) -> Result<Vec<OmegaRate>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
    ns.iter()
        .map(|&n| {
            let p = ((n as f64) * config.phi()).round().max(1.0) as usize;
            let mut scaled = config.clone();
            scaled.n = n;
            scaled.p = p;
            scaled.spectrum = resample_spectrum(config, p);
            let edge = find_edge(&SelfConsistentSystem::limiting(&scaled)?)?.edge;
            let mut check = OmegaCheck::for_config(&scaled, edge)?;
            check.thresholds = thresholds;
            let reports: Vec<_> = pool.install(|| {
                (0..seeds)
                    .into_par_iter()
                    .map(|s| {
                        let r = sample_realization(&scaled, trial_seed(seed_base ^ n as u64, s as u64), Some(&check))?;
                        Ok(r.omega.expect("omega was requested"))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let rate = |f: &dyn Fn(&crate::ensemble::OmegaReport) -> bool| {
                reports.iter().filter(|r| f(r)).count() as f64 / seeds.max(1) as f64
            };
            Ok(OmegaRate {
                n,
                seeds,
                gap1_rate: rate(&|r| r.gap1_pass),
                spacing_rate: rate(&|r| r.spacing_pass),
                lln_rate: rate(&|r| r.lln_pass),
                omega_rate: rate(&|r| r.passes()),
            })
        })
        .collect()
}

/// Same atoms and weights at a new dimension.
fn resample_spectrum(config: &ModelConfig, p: usize) -> crate::model::PopulationSpectrum {
    let sigmas = config.spectrum.sigmas();
    let old = sigmas.len();
    crate::model::PopulationSpectrum::new((0..p).map(|i| sigmas[i * old / p]).collect())
}

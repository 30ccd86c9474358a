//! Rescaled largest eigenvalue against TW₁ for uniform ξ² on (0, 1], Σ = I, p = n.
//!
//! cargo run --release --example edge_universality -- [trials] [n]

use elliptical_edge::edge::limiting_edge_report;
use elliptical_edge::ensemble::{run_trial, trial_seed, EnsembleKind, OmegaCheck};
use elliptical_edge::model::{ModelConfig, PopulationSpectrum, RadialLaw};
use elliptical_edge::selfconsistent::SelfConsistentSystem;
use elliptical_edge::stats;
use elliptical_edge::tracy_widom::default_table;

fn main() -> elliptical_edge::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(400);

    let radial = match args.next().as_deref() {
        Some("mp") => RadialLaw::point_mass(1.0),
        Some(d) => RadialLaw::beta(1.0, d.parse().unwrap_or(0.0), 1.0)?,
        None => RadialLaw::beta(1.0, 0.0, 1.0)?,
    };
    let config = ModelConfig::new(n, n, PopulationSpectrum::identity(n), radial);
    let sys = SelfConsistentSystem::limiting(&config)?;
    let report = limiting_edge_report(&config, &sys, false)?;
    println!("L+ = {:.6}, gamma0 = {:.6}", report.edge, report.gamma0.unwrap_or(f64::NAN));
    let omega = OmegaCheck::for_config(&config, report.edge)?;
    let table = default_table()?;

    let ensembles = [EnsembleKind::Elliptical, EnsembleKind::Gaussian];
    let mut elliptical = Vec::new();
    let mut gaussian = Vec::new();
    let mut omega_hits = 0;
    for t in 0..trials {
        let rec = run_trial(&config, &report, Some(&omega), &ensembles, 1, trial_seed(2024, t))?;
        if rec.excluded.is_some() {
            continue;
        }
        omega_hits += rec.omega_pass as usize;
        elliptical.push(rec.rescaled_stat);
        gaussian.push(rec.rescaled_stat_gaussian);
    }
    let (mean, var) = table.moments();
    println!("trials kept      {}", elliptical.len());
    println!("omega pass rate  {:.3}", omega_hits as f64 / elliptical.len() as f64);
    println!("mean / var       {:.4} / {:.4}  (TW1 {:.4} / {:.4})", stats::mean(&elliptical), stats::variance(&elliptical), mean, var);
    println!("gaussian m / v   {:.4} / {:.4}", stats::mean(&gaussian), stats::variance(&gaussian));
    println!("KS elliptical    {:.4}", table.ks_distance(&elliptical));
    println!("KS gaussian      {:.4}", table.ks_distance(&gaussian));
    println!("KS two-sample    {:.4}", stats::ks_two_sample(&elliptical, &gaussian));
    Ok(())
}

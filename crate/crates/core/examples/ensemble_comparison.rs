//! Elliptical against Gaussian data with shared ξ²: paired Green-function statistics near the edge.
//!
//! cargo run --release --example ensemble_comparison -- [pairs] [n]

use elliptical_edge::edge::find_edge;
use elliptical_edge::ensemble::trial_seed;
use elliptical_edge::locallaw::{compare_ensembles_greenfn, TestFunction};
use elliptical_edge::model::{ModelConfig, PopulationSpectrum, RadialLaw};
use elliptical_edge::selfconsistent::SelfConsistentSystem;

fn main() -> elliptical_edge::Result<()> {
    let mut args = std::env::args().skip(1);
    let pairs: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let config = ModelConfig::new(n, n, PopulationSpectrum::identity(n), RadialLaw::beta(1.0, 0.0, 1.0)?);
    let edge = find_edge(&SelfConsistentSystem::limiting(&config)?)?.edge;
    let seeds: Vec<u64> = (0..pairs).map(|t| trial_seed(11, t)).collect();

    for f in [TestFunction::Identity, TestFunction::Logistic] {
        println!("{f:?}");
        println!("{:>10} {:>10} {:>10} {:>8} {:>10} {:>8}", "E", "ell", "gauss", "z", "int diff", "z");
        for r in compare_ensembles_greenfn(&config, f, edge, 0.05, &seeds)? {
            // The integrated window is empty at the top energy.
            let z_int = if r.integrated_std_error > 0.0 {
                format!("{:.2}", r.integrated_difference / r.integrated_std_error)
            } else {
                "-".into()
            };
            println!(
                "{:>10.5} {:>10.4} {:>10.4} {:>8.2} {:>10.4} {z_int:>8}",
                r.energy,
                r.mean_elliptical,
                r.mean_gaussian,
                r.difference / r.std_error,
                r.integrated_difference,
            );
        }
    }
    Ok(())
}

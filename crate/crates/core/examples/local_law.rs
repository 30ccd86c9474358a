//! Entrywise and averaged local-law ratios plus the exact resolvent identities.
//!
//! cargo run --release --example local_law -- [seeds] [n]

use elliptical_edge::edge::find_edge;
use elliptical_edge::ensemble::{trial_seed, EnsembleKind};
use elliptical_edge::locallaw::{
    identity_defects, resolvent_pair, sample_data, slack, spectrum, verify_averaged, verify_entrywise,
    DomainKind, SpectralDomain,
};
use elliptical_edge::model::{ModelConfig, PopulationSpectrum, RadialLaw};
use elliptical_edge::selfconsistent::SelfConsistentSystem;

fn main() -> elliptical_edge::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(500);
    let config = ModelConfig::new(n, n, PopulationSpectrum::identity(n), RadialLaw::point_mass(1.0));

    println!("slack n^0.1 = {:.3}", slack(n));
    for s in 0..seeds {
        let seed = trial_seed(99, s);
        let (xi, x) = sample_data(&config, EnsembleKind::Elliptical, seed)?;
        let lambda_plus = find_edge(&SelfConsistentSystem::empirical(&config, &xi)?)?.edge;
        let domain = SpectralDomain::around(lambda_plus, DomainKind::D);
        let grid = domain.default_grid(n);
        let entry = verify_entrywise(&config, &xi, &x, &grid)?;
        let avg = verify_averaged(&config, &xi, &x, lambda_plus, &grid)?;
        let eig = spectrum(&x);
        let mut worst_ward: f64 = 0.0;
        for &z in &grid {
            let d = identity_defects(&resolvent_pair(&x, config.spectrum.sigmas(), &xi, z)?, config.spectrum.sigmas(), &eig);
            worst_ward = worst_ward.max(d.ward_companion).max(d.ward_scaled);
        }
        let fmt = |v: Vec<f64>| v.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ");
        println!("seed {s}: entrywise [{}] averaged [{}] ward {worst_ward:.1e}",
            fmt(entry.iter().map(|r| r.all_entries.ratio).collect()),
            fmt(avg.iter().map(|r| r.uniform.ratio).collect()));
    }
    Ok(())
}

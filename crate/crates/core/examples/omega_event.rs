//! Frequency of the Ω event for uniform ξ² as n grows.
//!
//! cargo run --release --example omega_event -- [seeds]

use elliptical_edge::edge::find_edge;
use elliptical_edge::ensemble::{sample_realization, trial_seed, OmegaCheck};
use elliptical_edge::model::{ModelConfig, PopulationSpectrum, RadialLaw};
use elliptical_edge::selfconsistent::SelfConsistentSystem;

fn main() -> elliptical_edge::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "n", "gap1", "spacing", "lln", "omega");
    for n in [500, 2000, 8000] {
        let config = ModelConfig::new(n, n, PopulationSpectrum::identity(n), RadialLaw::beta(1.0, 0.0, 1.0)?);
        let edge = find_edge(&SelfConsistentSystem::limiting(&config)?)?.edge;
        let check = OmegaCheck::for_config(&config, edge)?;
        let mut counts = [0usize; 4];
        for s in 0..seeds {
            let r = sample_realization(&config, trial_seed(n as u64, s), Some(&check))?;
            let o = r.omega.expect("omega was requested");
            for (c, hit) in counts.iter_mut().zip([o.gap1_pass, o.spacing_pass, o.lln_pass, o.passes()]) {
                *c += hit as usize;
            }
        }
        let rate = |c: usize| c as f64 / seeds as f64;
        println!("{n:>6} {:>8.3} {:>8.3} {:>8.3} {:>8.3}", rate(counts[0]), rate(counts[1]), rate(counts[2]), rate(counts[3]));
    }
    Ok(())
}

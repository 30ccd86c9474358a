//! Edge, γ₀ and regularity for Marchenko-Pastur and a few elliptical variants.
//!
//! cargo run --release --example mp_edge

use elliptical_edge::edge::limiting_edge_report;
use elliptical_edge::model::{ModelConfig, PopulationSpectrum, RadialLaw};
use elliptical_edge::selfconsistent::SelfConsistentSystem;

fn main() -> elliptical_edge::Result<()> {
    let p = 200;
    let cases = [
        ("MP, phi = 1", ModelConfig::new(p, p, PopulationSpectrum::identity(p), RadialLaw::point_mass(1.0))),
        ("MP, phi = 1/2", ModelConfig::new(p, 2 * p, PopulationSpectrum::identity(p), RadialLaw::point_mass(1.0))),
        ("uniform xi^2", ModelConfig::new(p, p, PopulationSpectrum::identity(p), RadialLaw::beta(1.0, 0.0, 1.0)?)),
        ("beta(d = 2)", ModelConfig::new(p, p, PopulationSpectrum::identity(p), RadialLaw::beta(1.0, 2.0, 1.0)?)),
        (
            "two-atom {2, 1}",
            ModelConfig::new(p, p, PopulationSpectrum::two_atom(p, 2.0, 1.0, 0.5), RadialLaw::beta(1.0, 1.0, 1.0)?),
        ),
    ];
    println!("{:<18} {:>10} {:>12} {:>10} {:>8}", "config", "x*", "L+", "gamma0", "regular");
    for (name, config) in &cases {
        let sys = SelfConsistentSystem::limiting(config)?;
        let r = match limiting_edge_report(config, &sys, false) {
            Ok(r) => r,
            Err(e) => {
                println!("{name:<18} no regular edge: {e}");
                continue;
            }
        };
        let regular = r.regularity.as_ref().is_some_and(|g| g.passes());
        println!(
            "{name:<18} {:>10.6} {:>12.8} {:>10.6} {regular:>8}",
            r.x_star,
            r.edge,
            r.gamma0.unwrap_or(f64::NAN)
        );
    }
    println!("closed form for MP at phi = 1: L+ = 4, gamma0 = 2^(-4/3) = {:.6}", 2f64.powf(-4.0 / 3.0));
    Ok(())
}

//! Square-root decay of the density at the edge, fitted on a log-log scale.
//!
//! cargo run --release --example sqrt_edge

use elliptical_edge::edge::{find_edge, sqrt_edge_fit};
use elliptical_edge::model::{ModelConfig, PopulationSpectrum, RadialLaw};
use elliptical_edge::selfconsistent::{SelfConsistentSystem, Variant};

fn main() -> elliptical_edge::Result<()> {
    let p = 100;
    let cases = [
        ("MP", ModelConfig::new(p, p, PopulationSpectrum::identity(p), RadialLaw::point_mass(1.0))),
        ("uniform xi^2", ModelConfig::new(p, p, PopulationSpectrum::identity(p), RadialLaw::beta(1.0, 0.0, 1.0)?)),
        (
            "two-atom, d = 1",
            ModelConfig::new(p, p, PopulationSpectrum::two_atom(p, 2.0, 1.0, 0.5), RadialLaw::beta(1.0, 1.0, 1.0)?),
        ),
    ];
    for (name, config) in &cases {
        let sys = SelfConsistentSystem::limiting(config)?;
        let report = find_edge(&sys)?;
        let fit = sqrt_edge_fit(&sys, &report, Variant::M)?;
        println!(
            "{name:<16} L+ = {:.6}  density exponent {:.4}  transform exponent {:.4}",
            report.edge, fit.density_slope, fit.transform_slope
        );
        for (k, r) in fit.kappas.iter().zip(&fit.densities).step_by(7) {
            println!("    kappa {k:.3e}  rho {r:.5e}  rho/sqrt(kappa) {:.4}", r / k.sqrt());
        }
    }
    Ok(())
}

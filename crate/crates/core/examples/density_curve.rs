//! Limiting density by Stieltjes inversion, compared with the MP closed form.
//!
//! cargo run --release --example density_curve -- [d]

use std::f64::consts::PI;

use elliptical_edge::edge::find_edge;
use elliptical_edge::model::{ModelConfig, PopulationSpectrum, RadialLaw};
use elliptical_edge::selfconsistent::{density, DensityOptions, SelfConsistentSystem, Variant};

fn main() -> elliptical_edge::Result<()> {
    let d: Option<f64> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let p = 200;
    let radial = match d {
        Some(d) => RadialLaw::beta(1.0, d, 1.0)?,
        None => RadialLaw::point_mass(1.0),
    };
    let config = ModelConfig::new(p, p, PopulationSpectrum::identity(p), radial);
    let sys = SelfConsistentSystem::limiting(&config)?;
    let edge = find_edge(&sys)?.edge;
    let grid: Vec<f64> = (0..40).map(|i| (edge + 0.2) * (i as f64 + 0.5) / 40.0).collect();
    let curve = density(&sys, Variant::M, &grid, DensityOptions::default())?;

    println!("edge {edge:.6}");
    println!("{:>8} {:>12} {:>12}", "E", "rho", "MP");
    for (&e, &r) in grid.iter().zip(&curve.values) {
        let mp = if e < 4.0 { (e * (4.0 - e)).sqrt() / (2.0 * PI * e) } else { 0.0 };
        println!("{e:>8.4} {r:>12.6} {mp:>12.6}");
    }
    Ok(())
}

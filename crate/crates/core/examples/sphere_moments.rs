//! Mixed moments of the uniform distribution on the sphere against their closed forms.
//!
//! cargo run --release --example sphere_moments -- [p] [draws]

use elliptical_edge::ensemble::{sample_sphere, trial_rng};
use elliptical_edge::stats;

fn main() {
    let mut args = std::env::args().skip(1);
    let p: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(50);
    let draws: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100_000);
    let mut rng = trial_rng(1);
    let samples: Vec<Vec<f64>> = (0..draws).map(|_| sample_sphere(p, &mut rng)).collect();

    let pf = p as f64;
    let moments: [(&str, fn(&[f64]) -> f64, f64); 5] = [
        ("u1^2", |u| u[0] * u[0], 1.0 / pf),
        ("u1^4", |u| u[0].powi(4), 3.0 / (pf * (pf + 2.0))),
        ("u1^2 u2^2", |u| (u[0] * u[1]).powi(2), 1.0 / (pf * (pf + 2.0))),
        ("u1^3 u2", |u| u[0].powi(3) * u[1], 0.0),
        ("u1 u2", |u| u[0] * u[1], 0.0),
    ];
    println!("{:<10} {:>12} {:>12} {:>8}", "moment", "estimate", "exact", "z");
    for (name, f, exact) in moments {
        let values: Vec<f64> = samples.iter().map(|u| f(u)).collect();
        let est = stats::mean(&values);
        println!("{name:<10} {est:>12.4e} {exact:>12.4e} {:>8.2}", (est - exact) / stats::std_error(&values));
    }
}

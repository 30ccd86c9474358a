//! Builds the TW₁ table from Hastings-McLeod and prints moments, quantiles and a few CDF values.
//!
//! cargo run --release --example tracy_widom_table -- [out.csv]

use elliptical_edge::tracy_widom::{airy::ai, default_table};

fn main() -> elliptical_edge::Result<()> {
    let table = default_table()?;
    let (mean, var) = table.moments();
    println!("grid [{}, {}], {} points", table.s_min(), table.s_max(), table.s_grid.len());
    println!("mean {mean:.5}, variance {var:.5}");
    for u in [0.01, 0.05, 0.5, 0.95, 0.99] {
        println!("quantile({u}) = {:.4}", table.quantile(u)?);
    }
    for s in [-4.0, -2.0, 0.0, 2.0, 4.0] {
        println!("F1({s:+.1}) = {:.6}   q = {:.6e}", table.cdf(s), table.q(s));
    }
    // Hastings-McLeod is pinned to Ai at +∞.
    for s in [2.0, 3.0, 4.0, 5.0] {
        println!("q/Ai({s:.0}) = {:.9}", table.q(s) / ai(s));
    }
    if let Some(path) = std::env::args().nth(1) {
        table.save_csv(path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}

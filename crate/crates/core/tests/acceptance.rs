//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.
//!
//! The Monte-Carlo criteria are long; run with `--nocapture` to see progress lines.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use elliptical_edge::edge::{find_edge, gamma0, limiting_edge_report};
use elliptical_edge::ensemble::{sample_sphere, trial_rng, trial_seed, OmegaThresholds};
use elliptical_edge::harness::{
    local_law_study, omega_frequency, run_campaign, CampaignOutcome, ExperimentConfig, ExperimentSpec,
};
use elliptical_edge::locallaw::{compare_ensembles_greenfn, TestFunction};
use elliptical_edge::model::{ModelConfig, PopulationSpectrum, RadialLaw};
use elliptical_edge::selfconsistent::{density, DensityOptions, SelfConsistentSystem, Variant};
use elliptical_edge::stats;
use elliptical_edge::tracy_widom::default_table;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn mp(p: usize, n: usize) -> ModelConfig {
    ModelConfig::new(p, n, PopulationSpectrum::identity(p), RadialLaw::point_mass(1.0))
}

fn flat_radial(p: usize, n: usize) -> ModelConfig {
    ModelConfig::new(p, n, PopulationSpectrum::identity(p), RadialLaw::beta(1.0, 0.0, 1.0).unwrap())
}

fn mp_density(e: f64) -> f64 {
    if e <= 0.0 || e >= 4.0 {
        0.0
    } else {
        (e * (4.0 - e)).sqrt() / (2.0 * PI * e)
    }
}

#[test]
fn c01_mp_edge_and_gamma0() {
    let start = Instant::now();
    let sys = SelfConsistentSystem::limiting(&mp(400, 400)).unwrap();
    let edge = find_edge(&sys).unwrap();
    let g = gamma0(&sys, &edge).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let target = 2f64.powf(-4.0 / 3.0);
    let pass = (edge.x_star + 0.5).abs() <= 1e-8
        && (edge.edge - 4.0).abs() <= 1e-8
        && (g - target).abs() <= 1e-6
        && elapsed < 1.0;
    report(
        1,
        "MP edge and gamma0",
        pass,
        format!("x* = {:.12}, L+ = {:.12}, gamma0 = {g:.9} (target {target:.9}), {elapsed:.3}s", edge.x_star, edge.edge),
    );
}

#[test]
fn c02_mp_density() {
    let start = Instant::now();
    let sys = SelfConsistentSystem::limiting(&mp(400, 400)).unwrap();
    let k = 400;
    let uniform: Vec<f64> = (0..k).map(|i| 4.0 * (i as f64 + 0.5) / k as f64).collect();
    let curve = density(&sys, Variant::M, &uniform, DensityOptions::default()).unwrap();
    let max_err = uniform
        .iter()
        .zip(&curve.values)
        .map(|(&e, &r)| (r - mp_density(e)).abs())
        .fold(0.0, f64::max);

    // Mass: substitute E = 4s², s = (1 − cos πt)/2, which clusters nodes at both
    // ends and removes the 1/√E singularity; midpoint rule in t.
    let t: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect();
    let s: Vec<f64> = t.iter().map(|t| 0.5 * (1.0 - (PI * t).cos())).collect();
    let clustered: Vec<f64> = s.iter().map(|s| 4.0 * s * s).collect();
    let rho = density(&sys, Variant::M, &clustered, DensityOptions::default()).unwrap();
    let mass: f64 = s
        .iter()
        .zip(&t)
        .zip(&rho.values)
        .map(|((s, t), r)| r * 8.0 * s * 0.5 * PI * (PI * t).sin() / k as f64)
        .sum();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = max_err <= 1e-3 && (mass - 1.0).abs() <= 1e-3 && elapsed < 30.0;
    report(2, "MP density", pass, format!("max error {max_err:.2e}, mass {mass:.6}, {elapsed:.1}s"));
}

#[test]
fn c03_square_root_edge() {
    let configs = [
        ("MP", mp(100, 100)),
        ("d = 0", flat_radial(100, 100)),
        (
            "two-atom, d = 1",
            ModelConfig::new(
                100,
                100,
                PopulationSpectrum::two_atom(100, 2.0, 1.0, 0.5),
                RadialLaw::beta(1.0, 1.0, 1.0).unwrap(),
            ),
        ),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, config) in &configs {
        let start = Instant::now();
        let sys = SelfConsistentSystem::limiting(config).unwrap();
        let r = limiting_edge_report(config, &sys, true).unwrap();
        let slope = r.sqrt_fit_exponent.unwrap();
        let regular = r.regularity.as_ref().is_some_and(|g| g.passes());
        let elapsed = start.elapsed().as_secs_f64();
        pass &= (slope - 0.5).abs() <= 0.05 && regular && elapsed < 120.0;
        details.push(format!("{name}: exponent {slope:.4}, regular {regular}, {elapsed:.1}s"));
    }
    report(3, "square-root edge", pass, details.join("; "));
}

/// Largest eigenvalue of the symmetric tridiagonal matrix by Sturm-count bisection.
fn tridiagonal_top(diag: &[f64], off: &[f64]) -> f64 {
    let radius = diag
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = off.get(i).map_or(0.0, |v| v.abs());
            d + left + right
        })
        .fold(f64::MIN, f64::max);
    let below = |x: f64| {
        let mut count = 0;
        let mut q = diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..diag.len() {
            let prev = if q == 0.0 { f64::EPSILON } else { q };
            q = diag[i] - x - off[i - 1] * off[i - 1] / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let n = diag.len();
    let (mut lo, mut hi) = (-radius.abs() - 1.0, radius + 1.0);
    while hi - lo > 1e-12 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `n^{2/3}(λ₁/√n − 2)` for the GOE via its tridiagonal model: diagonal
/// `N(0, 2)`, off-diagonal `χ_{n−k}`.
fn goe_edge_sample(n: usize, seed: u64) -> f64 {
    let mut rng = trial_rng(seed);
    let diag: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * 2f64.sqrt()
        })
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|k| ChiSquared::new((n - k) as f64).unwrap().sample(&mut rng).sqrt())
        .collect();
    let top = tridiagonal_top(&diag, &off);
    (n as f64).powf(2.0 / 3.0) * (top / (n as f64).sqrt() - 2.0)
}

#[test]
fn c04_tracy_widom_table() {
    let start = Instant::now();
    let table = default_table().unwrap();
    let table_time = start.elapsed().as_secs_f64();
    let h = table.s_grid[1] - table.s_grid[0];
    let residual = (1..table.s_grid.len() - 1)
        .filter(|&k| (-8.0..=4.0).contains(&table.s_grid[k]))
        .map(|k| {
            let (s, q) = (table.s_grid[k], table.q_values[k]);
            let qpp = (table.q_values[k + 1] - 2.0 * q + table.q_values[k - 1]) / (h * h);
            (qpp - s * q - 2.0 * q.powi(3)).abs()
        })
        .fold(0.0, f64::max);
    let (mean, _) = table.moments();

    let start = Instant::now();
    let samples: Vec<f64> = (0..5000u64).into_par_iter().map(|t| goe_edge_sample(1000, trial_seed(2024, t))).collect();
    let goe_time = start.elapsed().as_secs_f64();
    let goe_mean = stats::mean(&samples);
    let se = stats::std_error(&samples);
    let pass = residual <= 1e-6
        && (mean + 1.2065).abs() <= 0.002
        && (goe_mean - mean).abs() <= 3.0 * se
        && table_time < 5.0
        && goe_time < 600.0;
    report(
        4,
        "TW1 table",
        pass,
        format!(
            "residual {residual:.2e}, mean {mean:.5}, GOE mean {goe_mean:.4} ± {se:.4}, table {table_time:.2}s, GOE {goe_time:.0}s"
        ),
    );
}

/// One 2000-trial campaign shared by the edge-universality and comparison criteria.
fn campaign() -> &'static (CampaignOutcome, f64) {
    static CAMPAIGN: OnceLock<(CampaignOutcome, f64)> = OnceLock::new();
    CAMPAIGN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::parse(
            "model.p = 400\nmodel.n = 400\nradial.kind = \"beta\"\nradial.l = 1\nradial.d = 0\nradial.b = 1\n",
        )
        .unwrap();
        config.trials = 2000;
        config.seed_base = 20_240_415;
        config.outputs = dir.path().to_path_buf();
        let spec = ExperimentSpec::from_config(&config).unwrap();
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
        let start = Instant::now();
        let outcome = run_campaign(&spec, threads, true).unwrap();
        (outcome, start.elapsed().as_secs_f64())
    })
}

#[test]
fn c05_edge_universality() {
    let (outcome, elapsed) = campaign();
    let s = &outcome.summary;
    let ks = s.ks_elliptical.unwrap();
    let pass = ks <= 0.05 && !s.flagged;
    report(
        5,
        "edge universality at p = n = 400",
        pass,
        format!(
            "KS {ks:.4}, mean {:.4}, variance {:.4}, excluded {}/{}, campaign {elapsed:.0}s",
            s.mean_stat, s.var_stat, s.n_excluded, s.n_trials
        ),
    );
}

#[test]
fn c06_ensemble_comparison() {
    let (outcome, _) = campaign();
    let two_sample = outcome.summary.ks_two_sample.unwrap();

    let start = Instant::now();
    let config = flat_radial(400, 400);
    let edge = find_edge(&SelfConsistentSystem::limiting(&config).unwrap()).unwrap().edge;
    let seeds: Vec<u64> = (0..500).map(|t| trial_seed(77, t)).collect();
    let rows = compare_ensembles_greenfn(&config, TestFunction::Identity, edge, 0.05, &seeds).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let within = rows.iter().all(|r| r.within(3.0));
    let worst = rows
        .iter()
        .flat_map(|r| [r.difference / r.std_error, r.integrated_difference / r.integrated_std_error])
        .fold(0.0, |a: f64, z| a.max(z.abs()));
    let pass = two_sample <= 0.05 && within;
    report(
        6,
        "ensemble comparison",
        pass,
        format!("two-sample KS {two_sample:.4}, worst Green-function z {worst:.2}, {elapsed:.0}s"),
    );
}

#[test]
fn c07_local_laws() {
    let start = Instant::now();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let study = local_law_study(&mp(500, 500), 50, 31, None, 1.0, 0.1, threads).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let worst_ratio = |pick: fn(&elliptical_edge::harness::LocalLawSeed) -> &Vec<elliptical_edge::locallaw::CheckRow>| {
        study.seeds.iter().flat_map(|s| pick(s).iter().map(|r| r.ratio)).fold(0.0, f64::max)
    };
    let pass = study.entrywise_rate >= 0.95
        && study.averaged_rate >= 0.95
        && study.worst_ward <= 1e-10
        && study.worst_frobenius <= 1e-8;
    report(
        7,
        "local laws at p = n = 500",
        pass,
        format!(
            "entrywise rate {:.2} (worst ratio {:.2}), averaged rate {:.2} (worst ratio {:.2}), slack {:.3}, Ward {:.1e}, Frobenius {:.1e}, {elapsed:.0}s",
            study.entrywise_rate,
            worst_ratio(|s| &s.entrywise),
            study.averaged_rate,
            worst_ratio(|s| &s.averaged),
            500f64.powf(0.1),
            study.worst_ward,
            study.worst_frobenius
        ),
    );
}

#[test]
fn c08_omega_frequency() {
    let start = Instant::now();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rates = omega_frequency(&flat_radial(500, 500), &[500, 2000, 8000], 2000, 8, OmegaThresholds::default(), threads)
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let monotone = rates.windows(2).all(|w| w[1].omega_rate > w[0].omega_rate);
    let listing: Vec<String> = rates.iter().map(|r| format!("n = {}: {:.4}", r.n, r.omega_rate)).collect();
    report(8, "omega frequency", monotone && elapsed < 600.0, format!("{}, {elapsed:.0}s", listing.join(", ")));
}

#[test]
fn c09_sphere_moments() {
    let start = Instant::now();
    let p = 50;
    let draws = 100_000;
    let mut rng = trial_rng(9);
    // u₁², u₁⁴, u₁²u₂², u₁³u₂, u₁u₂
    let mut cols: [Vec<f64>; 5] = Default::default();
    for _ in 0..draws {
        let u = sample_sphere(p, &mut rng);
        let (a, b) = (u[0], u[1]);
        for (col, v) in cols.iter_mut().zip([a * a, a.powi(4), a * a * b * b, a.powi(3) * b, a * b]) {
            col.push(v);
        }
    }
    let pf = p as f64;
    let targets = [1.0 / pf, 3.0 / (pf * (pf + 2.0)), 1.0 / (pf * (pf + 2.0)), 0.0, 0.0];
    let z: Vec<f64> = cols
        .iter()
        .zip(targets)
        .map(|(c, t)| (stats::mean(c) - t) / stats::std_error(c))
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = z.iter().all(|z| z.abs() <= 4.0) && elapsed < 60.0;
    report(9, "sphere moments", pass, format!("z-scores {z:.2?}, {elapsed:.1}s"));
}

#[test]
fn c10_determinism() {
    let run = |dir: &Path, threads: usize| {
        let mut config = ExperimentConfig::parse("model.p = 60\nmodel.n = 80\n").unwrap();
        config.trials = 24;
        config.seed_base = 4242;
        config.outputs = dir.to_path_buf();
        run_campaign(&ExperimentSpec::from_config(&config).unwrap(), threads, true).unwrap();
        std::fs::read(dir.join("ledger.csv")).unwrap()
    };
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let one = run(dirs[0].path(), 1);
    let again = run(dirs[1].path(), 1);
    let four = run(dirs[2].path(), 4);
    let pass = one == again && one == four;
    report(10, "determinism", pass, format!("ledger of {} bytes identical across reruns and thread counts: {pass}", one.len()));
}

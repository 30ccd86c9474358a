use std::sync::OnceLock;

use elliptical_edge::ensemble::{sample_sphere, sample_xi_squared, trial_rng, trial_seed};
use elliptical_edge::harness::ExperimentConfig;
use elliptical_edge::model::{ModelConfig, PopulationSpectrum, RadialLaw};
use elliptical_edge::selfconsistent::SelfConsistentSystem;
use elliptical_edge::tracy_widom::{default_table, TW1Table};
use num_complex::Complex64;
use proptest::prelude::*;

fn table() -> &'static TW1Table {
    static TABLE: OnceLock<TW1Table> = OnceLock::new();
    TABLE.get_or_init(|| default_table().unwrap())
}

fn system(d: f64, phi: f64) -> SelfConsistentSystem {
    let p = 50;
    let n = (p as f64 / phi).round() as usize;
    let config = ModelConfig::new(p, n, PopulationSpectrum::two_atom(p, 2.0, 1.0, 0.3), RadialLaw::beta(1.0, d, 1.0).unwrap());
    SelfConsistentSystem::limiting(&config).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_draws_have_unit_norm(p in 1usize..300, seed in any::<u64>()) {
        let u = sample_sphere(p, &mut trial_rng(seed));
        let norm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_draws_stay_in_support(d in 0.0f64..3.0, b in 0.5f64..3.0, l in 0.5f64..2.0, seed in any::<u64>()) {
        let law = RadialLaw::beta(l, d, b).unwrap();
        let xi = sample_xi_squared(&law, 200, &mut trial_rng(seed)).unwrap();
        prop_assert!(xi.iter().all(|&x| x > 0.0 && x <= l));
    }

    #[test]
    fn trial_seeds_differ_across_indices(base in any::<u64>(), i in 0u64..1_000_000, j in 0u64..1_000_000) {
        prop_assume!(i != j);
        prop_assert_ne!(trial_seed(base, i), trial_seed(base, j));
    }

    #[test]
    fn tw_cdf_is_monotone_and_bounded(a in -12.0f64..8.0, b in -12.0f64..8.0) {
        let t = table();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fa, fb) = (t.cdf(lo), t.cdf(hi));
        prop_assert!((0.0..=1.0).contains(&fa) && (0.0..=1.0).contains(&fb));
        prop_assert!(fa <= fb + 1e-12);
    }

    #[test]
    fn tw_quantile_inverts_cdf(u in 0.001f64..0.999) {
        let t = table();
        prop_assert!((t.cdf(t.quantile(u).unwrap()) - u).abs() < 1e-6);
    }

    #[test]
    fn stieltjes_transforms_map_upper_half_plane(
        d in 0.0f64..2.0,
        phi in 0.3f64..1.5,
        e in -1.0f64..8.0,
        log_eta in -3.0f64..1.0,
    ) {
        let sys = system(d, phi);
        let t = sys.solve(Complex64::new(e, 10f64.powf(log_eta))).unwrap();
        prop_assert!(t.m.im > 0.0 && t.m1.im > 0.0 && t.m2.im > 0.0);
        prop_assert!(t.residual < 1e-8);
    }

    #[test]
    fn config_text_round_trips(
        p in 2usize..2000,
        n in 2usize..2000,
        d in 0.0f64..4.0,
        trials in 1usize..10_000,
        seed in any::<u64>(),
        weight in 0.05f64..0.95,
    ) {
        let text = format!(
            "model.p = {p}\nmodel.n = {n}\nspectrum.kind = \"two_atom\"\nspectrum.sigma_a = 2.5\nspectrum.sigma_b = 1\n\
             spectrum.weight = {weight}\nradial.kind = \"beta\"\nradial.l = 1\nradial.d = {d}\nradial.b = 2\n\
             experiment.trials = {trials}\nexperiment.seed_base = {}\n",
            seed >> 1
        );
        let config = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&config.to_text()).unwrap(), config);
    }
}

//! Sampling of the elliptical model and its Gaussian comparison ensemble,
//! top eigenvalues, and the high-probability event Ω on the radial draws.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::edge::{find_edge, EdgeReport};
use crate::model::{ModelConfig, RadialKind, RadialLaw};
use crate::selfconsistent::{SelfConsistentSystem, StieltjesTriple};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    /// Columns `ξ_i T u_i` with `u_i` uniform on the sphere.
    Elliptical,
    /// Columns `ξ_i T z_i` with `z_i ~ N(0, p⁻¹ I)`.
    Gaussian,
}

/// Splits a base seed into independent per-trial seeds (splitmix64 finalizer).
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point on the unit sphere in ℝᵖ (normalized Gaussian vector).
pub fn sample_sphere<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

/// `n` i.i.d. draws of `ξ²`. For the Beta family `ξ² = l(1 − B)`, `B ~ Beta(d+1, b)`,
/// with the closed-form inverse CDF when `b = 1`.
pub fn sample_xi_squared<R: Rng + ?Sized>(law: &RadialLaw, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    match &law.kind {
        RadialKind::Beta { b } => {
            let a = law.d + 1.0;
            if *b == 1.0 {
                // B = U^{1/a}; 1 − U keeps the draw away from B = 0.
                Ok((0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        law.l * (1.0 - (1.0 - u).powf(1.0 / a))
                    })
                    .collect())
            } else {
                let beta = Beta::new(a, *b).map_err(|e| Error::Domain(e.to_string()))?;
                Ok((0..n).map(|_| law.l * (1.0 - beta.sample(rng))).collect())
            }
        }
        RadialKind::Empirical { masses } => {
            if masses.is_empty() {
                return Err(Error::InvalidState("empirical radial law has no point masses".into()));
            }
            if masses.len() == 1 {
                return Ok(vec![masses[0]; n]);
            }
            Ok((0..n).map(|_| masses[rng.random_range(0..masses.len())]).collect())
        }
    }
}

/// Constants of the Ω event: the law-of-large-numbers threshold is `C n^ε / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaThresholds {
    pub c: f64,
    pub epsilon: f64,
}

impl Default for OmegaThresholds {
    fn default() -> Self {
        Self { c: 1.0, epsilon: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub gap1: f64,
    pub spacing: f64,
    pub gap1_pass: bool,
    pub spacing_pass: bool,
    pub lln_pass: bool,
    pub lln_sup_error: f64,
    /// Grid energies where the empirical system could not be solved.
    pub failed_energies: Vec<f64>,
}

impl OmegaReport {
    pub fn passes(&self) -> bool {
        self.gap1_pass && self.spacing_pass && self.lln_pass
    }
}

/// Default Ω grid: 20 points with `E ∈ [L₊ − 0.5, L₊ + 0.5]` at `η = n^{−2/3}`.
pub fn default_omega_grid(edge: f64, n: usize) -> Vec<Complex64> {
    let eta = (n as f64).powf(-2.0 / 3.0);
    (0..20)
        .map(|k| Complex64::new(edge - 0.5 + k as f64 / 19.0, eta))
        .collect()
}

/// Everything needed to test Ω on many realizations of one configuration.
#[derive(Debug, Clone)]
pub struct OmegaCheck {
    config: ModelConfig,
    limiting: SelfConsistentSystem,
    grid: Vec<Complex64>,
    warm: Vec<Option<StieltjesTriple>>,
    pub thresholds: OmegaThresholds,
}

impl OmegaCheck {
    pub fn new(config: &ModelConfig, grid: Vec<Complex64>, thresholds: OmegaThresholds) -> Result<Self> {
        let limiting = SelfConsistentSystem::limiting(config)?;
        let warm = grid.iter().map(|&z| limiting.solve_continued(z).ok()).collect();
        Ok(Self { config: config.clone(), limiting, grid, warm, thresholds })
    }

    /// Builds the default grid around the limiting edge.
    pub fn for_config(config: &ModelConfig, limiting_edge: f64) -> Result<Self> {
        Self::new(config, default_omega_grid(limiting_edge, config.n), OmegaThresholds::default())
    }

    pub fn grid(&self) -> &[Complex64] {
        &self.grid
    }

    pub fn evaluate(&self, xi_squared: &[f64]) -> Result<OmegaReport> {
        let n = xi_squared.len();
        let nf = n as f64;
        let l = self.config.radial.l;
        let scale = nf.powf(-1.0 / (self.config.radial.d + 1.0));
        let log_n = nf.ln();

        let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &x in xi_squared {
            if x > first {
                second = first;
                first = x;
            } else if x > second {
                second = x;
            }
        }
        let gap1 = l - first;
        let spacing = if n > 1 { first - second } else { 0.0 };
        let gap1_pass = scale / log_n < gap1 && gap1 < scale * log_n;
        let spacing_pass = spacing > scale / log_n;

        let empirical = SelfConsistentSystem::empirical(&self.config, xi_squared)?;
        let phi_inv = self.limiting.phi_inv();
        let mut sup: f64 = 0.0;
        let mut failed_energies = Vec::new();
        for (z, warm) in self.grid.iter().zip(&self.warm) {
            let solved = match warm {
                Some(t) => empirical
                    .solve_from(*z, Some((t.m1, t.m2)))
                    .or_else(|_| empirical.solve_continued(*z)),
                None => empirical.solve_continued(*z),
            };
            let Ok(t) = solved else {
                failed_energies.push(z.re);
                continue;
            };
            let diff = (empirical.g(t.m1)? - self.limiting.g(t.m1)?) / phi_inv;
            sup = sup.max(diff.norm());
        }
        let threshold = self.thresholds.c * nf.powf(self.thresholds.epsilon) / nf.sqrt();
        Ok(OmegaReport {
            gap1,
            spacing,
            gap1_pass,
            spacing_pass,
            lln_pass: failed_energies.is_empty() && sup <= threshold,
            lln_sup_error: sup,
            failed_energies,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub xi_squared: Vec<f64>,
    pub seed: u64,
    pub omega: Option<OmegaReport>,
}

/// Draws `ξ²` from a fresh stream for `seed`; fills the Ω report when a check is supplied.
pub fn sample_realization(config: &ModelConfig, seed: u64, omega: Option<&OmegaCheck>) -> Result<Realization> {
    let mut rng = trial_rng(seed);
    let xi_squared = sample_xi_squared(&config.radial, config.n, &mut rng)?;
    let omega = omega.map(|check| check.evaluate(&xi_squared)).transpose()?;
    Ok(Realization { xi_squared, seed, omega })
}

/// Data matrix `X = T W D` (p × n), with `W` spherical or Gaussian columns.
pub fn data_matrix<R: Rng + ?Sized>(
    config: &ModelConfig,
    xi_squared: &[f64],
    kind: EnsembleKind,
    rng: &mut R,
) -> DMatrix<f64> {
    let p = config.p;
    let t: Vec<f64> = config.spectrum.sigmas().iter().map(|s| s.sqrt()).collect();
    let inv_sqrt_p = 1.0 / (p as f64).sqrt();
    let mut x = DMatrix::zeros(p, xi_squared.len());
    for (j, &xi2) in xi_squared.iter().enumerate() {
        let w = match kind {
            EnsembleKind::Elliptical => sample_sphere(p, rng),
            EnsembleKind::Gaussian => {
                (0..p).map(|_| inv_sqrt_p * rng.sample::<f64, _>(StandardNormal)).collect()
            }
        };
        let xi = xi2.sqrt();
        for i in 0..p {
            x[(i, j)] = t[i] * w[i] * xi;
        }
    }
    x
}

/// Top `k` eigenvalues (decreasing) of `X Xᵀ`, computed on the smaller Gram matrix.
pub fn top_eigenvalues(x: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let gram = if x.ncols() < x.nrows() { x.transpose() * x } else { x * x.transpose() };
    let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig.truncate(k);
    eig
}

/// Samples `Q` (or `Q^G`) for a realization and returns its top `k` eigenvalues.
pub fn build_q<R: Rng + ?Sized>(
    config: &ModelConfig,
    xi_squared: &[f64],
    kind: EnsembleKind,
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let k_max = config.p.min(config.n);
    if k == 0 || k > k_max {
        return Err(Error::Domain(format!("k = {k} must lie in 1..={k_max}")));
    }
    Ok(top_eigenvalues(&data_matrix(config, xi_squared, kind, rng), k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub top_eigs_q: Vec<f64>,
    pub top_eigs_qg: Vec<f64>,
    pub lambda_plus: f64,
    pub gamma0: f64,
    /// `γ₀ n^{2/3}(λ₁ − λ₊)` for the elliptical ensemble.
    pub rescaled_stat: f64,
    pub rescaled_stat_gaussian: f64,
    pub omega_pass: bool,
    /// Reason the realization's edge could not be located, if any.
    pub excluded: Option<String>,
}

/// One Monte-Carlo trial. Draw order on the trial stream: `ξ²`, then `U`, then `Z`.
pub fn run_trial(
    config: &ModelConfig,
    limiting: &EdgeReport,
    omega: Option<&OmegaCheck>,
    ensembles: &[EnsembleKind],
    k_top: usize,
    seed: u64,
) -> Result<TrialRecord> {
    let gamma0 = limiting
        .gamma0
        .ok_or_else(|| Error::InvalidState("limiting edge report has no γ₀".into()))?;
    let mut rng = trial_rng(seed);
    let xi_squared = sample_xi_squared(&config.radial, config.n, &mut rng)?;

    let mut top_eigs_q = Vec::new();
    let mut top_eigs_qg = Vec::new();
    for kind in [EnsembleKind::Elliptical, EnsembleKind::Gaussian] {
        if ensembles.contains(&kind) {
            let eigs = build_q(config, &xi_squared, kind, k_top, &mut rng)?;
            match kind {
                EnsembleKind::Elliptical => top_eigs_q = eigs,
                EnsembleKind::Gaussian => top_eigs_qg = eigs,
            }
        }
    }

    let (lambda_plus, excluded) = match SelfConsistentSystem::empirical(config, &xi_squared)
        .and_then(|sys| find_edge(&sys))
    {
        Ok(report) => (report.edge, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    let omega_pass = match omega {
        Some(check) => check.evaluate(&xi_squared)?.passes(),
        None => false,
    };
    let scale = gamma0 * (config.n as f64).powf(2.0 / 3.0);
    let rescale = |eigs: &[f64]| eigs.first().map_or(f64::NAN, |l1| scale * (l1 - lambda_plus));
    Ok(TrialRecord {
        seed,
        rescaled_stat: rescale(&top_eigs_q),
        rescaled_stat_gaussian: rescale(&top_eigs_qg),
        top_eigs_q,
        top_eigs_qg,
        lambda_plus,
        gamma0,
        omega_pass,
        excluded,
    })
}

#[derive(Serialize)]
struct LedgerRow {
    seed: u64,
    #[serde(rename = "lambda1_Q")]
    lambda1_q: f64,
    #[serde(rename = "lambda1_QG")]
    lambda1_qg: f64,
    lambda_plus: f64,
    gamma0: f64,
    rescaled_stat: f64,
    omega_pass: bool,
}

pub fn write_ledger<W: std::io::Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for r in records {
        out.serialize(LedgerRow {
            seed: r.seed,
            lambda1_q: r.top_eigs_q.first().copied().unwrap_or(f64::NAN),
            lambda1_qg: r.top_eigs_qg.first().copied().unwrap_or(f64::NAN),
            lambda_plus: r.lambda_plus,
            gamma0: r.gamma0,
            rescaled_stat: r.rescaled_stat,
            omega_pass: r.omega_pass,
        })?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PopulationSpectrum;
    use crate::stats;

    fn mp(p: usize, n: usize) -> ModelConfig {
        ModelConfig::new(p, n, PopulationSpectrum::identity(p), RadialLaw::point_mass(1.0))
    }

    #[test]
    fn sphere_draws_have_unit_norm() {
        let mut rng = trial_rng(1);
        for p in [1, 2, 50, 300] {
            let u = sample_sphere(p, &mut rng);
            let norm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_draws_match_moments_and_tail() {
        let law = RadialLaw::beta(2.0, 1.0, 1.0).unwrap();
        let draws = sample_xi_squared(&law, 100_000, &mut trial_rng(3)).unwrap();
        assert!(draws.iter().all(|&x| x > 0.0 && x <= 2.0));
        let se = stats::std_error(&draws);
        assert!((stats::mean(&draws) - law.mean()).abs() < 4.0 * se);
        // P(l − ξ² ≤ l/10) = (1/10)^{d+1}
        let frac = draws.iter().filter(|&&x| 2.0 - x <= 0.2).count() as f64 / draws.len() as f64;
        let target: f64 = 0.01;
        let se = (target * (1.0 - target) / draws.len() as f64).sqrt();
        assert!((frac - target).abs() < 4.0 * se, "{frac}");
    }

    #[test]
    fn general_beta_mean() {
        let law = RadialLaw::beta(1.0, 0.5, 2.5).unwrap();
        let draws = sample_xi_squared(&law, 50_000, &mut trial_rng(4)).unwrap();
        assert!(draws.iter().all(|&x| x > 0.0 && x <= 1.0));
        assert!((stats::mean(&draws) - law.mean()).abs() < 4.0 * stats::std_error(&draws));
    }

    #[test]
    fn trace_identity() {
        let config = mp(30, 20);
        let xi: Vec<f64> = (0..20).map(|i| 0.5 + i as f64 / 40.0).collect();
        let x = data_matrix(&config, &xi, EnsembleKind::Elliptical, &mut trial_rng(5));
        let q = &x * x.transpose();
        assert!((q.trace() - xi.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn gram_duality() {
        let config = mp(40, 25);
        let xi = vec![1.0; 25];
        let x = data_matrix(&config, &xi, EnsembleKind::Gaussian, &mut trial_rng(6));
        let mut big: Vec<f64> = (&x * x.transpose()).symmetric_eigenvalues().iter().copied().collect();
        let mut small: Vec<f64> = (x.transpose() * &x).symmetric_eigenvalues().iter().copied().collect();
        big.sort_by(|a, b| b.total_cmp(a));
        small.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in big.iter().zip(&small) {
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
        }
        assert!(big[25..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn mp_top_eigenvalue_near_four() {
        let config = mp(400, 400);
        let xi = vec![1.0; 400];
        let mut hits = 0;
        for s in 0..20 {
            let l1 = build_q(&config, &xi, EnsembleKind::Elliptical, 3, &mut trial_rng(s)).unwrap();
            assert!(l1.windows(2).all(|w| w[0] >= w[1]));
            if (3.5..=4.5).contains(&l1[0]) {
                hits += 1;
            }
        }
        assert_eq!(hits, 20);
    }

    #[test]
    fn degenerate_realization_fails_gap() {
        let config = mp(50, 50);
        let check = OmegaCheck::for_config(&config, 4.0).unwrap();
        let report = check.evaluate(&vec![1.0; 50]).unwrap();
        assert_eq!(report.gap1, 0.0);
        assert!(!report.gap1_pass);
    }

    #[test]
    fn gap_frequency_uniform() {
        let n = 100_000;
        let law = RadialLaw::beta(1.0, 0.0, 1.0).unwrap();
        let nf = n as f64;
        let mut hits = 0;
        for seed in 0..100 {
            let xi = sample_xi_squared(&law, n, &mut trial_rng(seed)).unwrap();
            let gap = 1.0 - xi.iter().copied().fold(0.0, f64::max);
            if gap > 1.0 / (nf * nf.ln()) && gap < nf.ln() / nf {
                hits += 1;
            }
        }
        assert!(hits >= 90, "{hits}");
    }

    #[test]
    fn seeds_are_split_and_deterministic() {
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
        assert_ne!(trial_seed(7, 3), trial_seed(7, 4));
        assert_ne!(trial_seed(7, 3), trial_seed(8, 3));
        let config = mp(20, 20);
        let a = sample_realization(&config, 11, None).unwrap();
        let b = sample_realization(&config, 11, None).unwrap();
        assert_eq!(a, b);
    }
}

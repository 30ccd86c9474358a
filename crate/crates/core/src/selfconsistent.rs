//! Coupled Stieltjes-transform systems and their reduction to one scalar equation.
//!
//! Given a radial measure (point masses of a realization, or a quadrature rule
//! for the law `F`), write `g(x) = φ⁻¹ ∫ s/(1 + s x) dF(s)`; in the empirical
//! case this is `p⁻¹ Σ_j ξ_j²/(1 + ξ_j² x)`. The triple `(m₁, m₂, m)` solves
//!
//! ```text
//! m₁ = p⁻¹ Σ_i σ_i / (−z(1 + σ_i m₂))
//! m₂ = g(m₁) / (−z)
//! m  = p⁻¹ Σ_i 1 / (−z(1 + σ_i m₂))
//! ```
//!
//! and eliminating `m₂` gives `F(x, z) = p⁻¹ Σ_i σ_i/(−z + σ_i g(x)) − x`, whose
//! zero in the upper half plane is `m₁(z)`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, RadialLaw, DEFAULT_QUADRATURE_NODES};
use crate::quadrature::QuadratureRule;
use crate::scalar::Scalar;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which radial input drives the system.
#[derive(Debug, Clone, Copy)]
pub enum RadialInput<'a> {
    /// Sampled `ξ_j²`, `j = 1..n`.
    Realization(&'a [f64]),
    /// The law in the model config, integrated by quadrature.
    Limiting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Empirical,
    Limiting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    M,
    M1,
    M2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub quadrature_nodes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            damping: 0.5,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesTriple {
    pub z: Complex64,
    pub m1: Complex64,
    pub m2: Complex64,
    pub m: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

impl StieltjesTriple {
    pub fn get(&self, variant: Variant) -> Complex64 {
        match variant {
            Variant::M => self.m,
            Variant::M1 => self.m1,
            Variant::M2 => self.m2,
        }
    }
}

/// `(∂_x F, ∂_y F, ∂²_x F)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials<T> {
    pub dx: T,
    pub dy: T,
    pub dxx: T,
}

/// Population atoms plus a weighted radial measure; everything the
/// self-consistent equations need.
#[derive(Debug, Clone)]
pub struct SelfConsistentSystem {
    mode: Mode,
    /// `(σ, multiplicity/p)`
    atoms: Vec<(f64, f64)>,
    nodes: Vec<f64>,
    /// quadrature weight times `n/p`, so `g(x) = Σ w s/(1 + s x)`
    weights: Vec<f64>,
    support: f64,
    phi_inv: f64,
    opts: SolverOptions,
}

impl SelfConsistentSystem {
    pub fn new(config: &ModelConfig, input: RadialInput<'_>, opts: SolverOptions) -> Result<Self> {
        match input {
            RadialInput::Realization(xi) => {
                if xi.len() != config.n {
                    return Err(Error::Domain(format!(
                        "realization has {} entries but n = {}",
                        xi.len(),
                        config.n
                    )));
                }
                let law = RadialLaw::empirical(xi.to_vec());
                let rule = QuadratureRule::point_masses(xi);
                Ok(Self::from_rule(config, &rule, law.l, Mode::Empirical, opts))
            }
            RadialInput::Limiting => {
                let rule = config.radial.quadrature(opts.quadrature_nodes)?;
                Ok(Self::from_rule(config, &rule, config.radial.l, Mode::Limiting, opts))
            }
        }
    }

    pub fn empirical(config: &ModelConfig, xi_squared: &[f64]) -> Result<Self> {
        Self::new(config, RadialInput::Realization(xi_squared), SolverOptions::default())
    }

    pub fn limiting(config: &ModelConfig) -> Result<Self> {
        Self::new(config, RadialInput::Limiting, SolverOptions::default())
    }

    fn from_rule(
        config: &ModelConfig,
        rule: &QuadratureRule,
        support: f64,
        mode: Mode,
        opts: SolverOptions,
    ) -> Self {
        let phi_inv = 1.0 / config.phi();
        Self {
            mode,
            atoms: config.spectrum.atoms(),
            nodes: rule.nodes.clone(),
            weights: rule.weights.iter().map(|w| w * phi_inv).collect(),
            support,
            phi_inv,
            opts,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn with_options(mut self, opts: SolverOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Right end `l` of the radial support (largest mass for a realization).
    pub fn support_bound(&self) -> f64 {
        self.support
    }

    pub fn sigma_max(&self) -> f64 {
        self.atoms[0].0
    }

    pub fn phi_inv(&self) -> f64 {
        self.phi_inv
    }

    /// `∫ s dF` under the measure in use.
    pub fn radial_mean(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| s * w)
            .sum::<f64>()
            / self.phi_inv
    }

    /// Weighted sum `Σ w_k h(s_k)` over the radial measure (includes the `φ⁻¹`).
    pub fn radial_sum<T: Scalar>(&self, h: impl Fn(f64) -> T) -> T {
        let mut acc = T::from(0.0);
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + h(s) * w;
        }
        acc
    }

    /// `(g, g', g'')` at `x`.
    pub fn g_derivs<T: Scalar>(&self, x: T) -> Result<(T, T, T)> {
        let zero = T::from(0.0);
        let (mut g, mut g1, mut g2) = (zero, zero, zero);
        for (k, (&s, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let den = x * s + 1.0;
            if den.modulus() == 0.0 {
                return Err(Error::Pole {
                    context: "1 + s x",
                    index: k,
                });
            }
            let r = T::from(s) / den;
            let r2 = r * r;
            g = g + r * w;
            g1 = g1 - r2 * w;
            g2 = g2 + r2 * r * (2.0 * w);
        }
        Ok((g, g1, g2))
    }

    pub fn g<T: Scalar>(&self, x: T) -> Result<T> {
        let mut acc = T::from(0.0);
        for (k, (&s, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let den = x * s + 1.0;
            if den.modulus() == 0.0 {
                return Err(Error::Pole {
                    context: "1 + s x",
                    index: k,
                });
            }
            acc = acc + T::from(s * w) / den;
        }
        Ok(acc)
    }

    /// Reduced equation `F(x, y) = p⁻¹ Σ σ_i/(−y + σ_i g(x)) − x`.
    pub fn f<T: Scalar>(&self, x: T, y: T) -> Result<T> {
        let g = self.g(x)?;
        let mut acc = -x;
        for (i, &(sigma, w)) in self.atoms.iter().enumerate() {
            let den = -y + g * sigma;
            if den.modulus() == 0.0 {
                return Err(Error::Pole {
                    context: "-y + σ g(x)",
                    index: i,
                });
            }
            acc = acc + T::from(sigma * w) / den;
        }
        Ok(acc)
    }

    /// Closed-form partial derivatives of `F`.
    pub fn partials<T: Scalar>(&self, x: T, y: T) -> Result<Partials<T>> {
        let (g, g1, g2) = self.g_derivs(x)?;
        let zero = T::from(0.0);
        let (mut dx, mut dy, mut dxx) = (zero, zero, zero);
        for (i, &(sigma, w)) in self.atoms.iter().enumerate() {
            let den = -y + g * sigma;
            if den.modulus() == 0.0 {
                return Err(Error::Pole {
                    context: "-y + σ g(x)",
                    index: i,
                });
            }
            let inv = T::from(1.0) / den;
            let inv2 = inv * inv;
            dy = dy + inv2 * (sigma * w);
            dx = dx - g1 * inv2 * (sigma * sigma * w);
            dxx = dxx
                + (g1 * g1 * inv2 * inv * (2.0 * sigma.powi(3))
                    - g2 * inv2 * (sigma * sigma))
                    * w;
        }
        Ok(Partials {
            dx: dx - T::from(1.0),
            dy,
            dxx,
        })
    }

    /// `m₁ ↦ m₂ = g(m₁)/(−z)`.
    pub fn map_m2<T: Scalar>(&self, m1: T, z: T) -> Result<T> {
        Ok(self.g(m1)? / (-z))
    }

    /// `m₂ ↦ (m₁, m)`.
    pub fn map_m1_m<T: Scalar>(&self, m2: T, z: T) -> Result<(T, T)> {
        let zero = T::from(0.0);
        let (mut m1, mut m) = (zero, zero);
        for (i, &(sigma, w)) in self.atoms.iter().enumerate() {
            let den = -z * (m2 * sigma + 1.0);
            if den.modulus() == 0.0 {
                return Err(Error::Pole {
                    context: "-z(1 + σ m₂)",
                    index: i,
                });
            }
            let inv = T::from(1.0) / den;
            m1 = m1 + inv * (sigma * w);
            m = m + inv * w;
        }
        Ok((m1, m))
    }

    /// Equation defects `(|m₁ − map(m₂)|, |m₂ − map(m₁)|, |m − map(m₂)|)`; valid for any `z`.
    pub fn defects(&self, m1: Complex64, m2: Complex64, m: Complex64, z: Complex64) -> Result<[f64; 3]> {
        let (r1, rm) = self.map_m1_m(m2, z)?;
        let r2 = self.map_m2(m1, z)?;
        Ok([(m1 - r1).norm(), (m2 - r2).norm(), (m - rm).norm()])
    }

    /// Solves the system at `z ∈ ℂ₊`, starting from `m₁ = m₂ = i` unless a warm start is given.
    pub fn solve(&self, z: Complex64) -> Result<StieltjesTriple> {
        self.solve_from(z, None)
    }

    pub fn solve_from(&self, z: Complex64, start: Option<(Complex64, Complex64)>) -> Result<StieltjesTriple> {
        if !(z.im > 0.0) || !z.re.is_finite() {
            return Err(Error::Domain(format!("spectral parameter needs Im z > 0, got {z}")));
        }
        let tol = self.opts.tol;
        let (mut m1, mut m2) = start.unwrap_or((I, I));
        if !(m1.im > 0.0 && m2.im > 0.0) {
            m1 = I;
            m2 = I;
        }
        let mut omega = self.opts.damping;
        let mut prev = f64::INFINITY;
        let mut rises = 0;
        let mut residual = f64::INFINITY;
        for it in 1..=self.opts.max_iter {
            let (t1, _) = self.map_m1_m(m2, z)?;
            m1 = m1 * (1.0 - omega) + t1 * omega;
            let t2 = self.map_m2(m1, z)?;
            m2 = m2 * (1.0 - omega) + t2 * omega;

            let (r1, m) = self.map_m1_m(m2, z)?;
            let r2 = self.map_m2(m1, z)?;
            residual = (m1 - r1).norm().max((m2 - r2).norm());
            if residual <= tol * scale(m1, m2) {
                return Ok(StieltjesTriple {
                    z,
                    m1,
                    m2,
                    m,
                    residual,
                    iterations: it,
                });
            }
            if residual > prev {
                rises += 1;
                if rises >= 2 {
                    omega *= 0.5;
                    rises = 0;
                }
            } else {
                rises = 0;
            }
            prev = residual;

            // Near the real axis the damped map contracts slowly; once the
            // iterate sits in the basin, Newton on F(·, z) finishes the job.
            if it % 25 == 0 {
                if let Some(t) = self.newton_polish(m1, z, it) {
                    return Ok(t);
                }
            }
        }
        Err(Error::SolverFailure {
            z,
            iterations: self.opts.max_iter,
            residual,
        })
    }

    fn newton_polish(&self, start: Complex64, z: Complex64, iterations: usize) -> Option<StieltjesTriple> {
        let tol = self.opts.tol;
        let mut x = start;
        for _ in 0..60 {
            let f = self.f(x, z).ok()?;
            let p = self.partials(x, z).ok()?;
            let mut step = f / p.dx;
            if !step.is_finite() {
                return None;
            }
            let mut next = x - step;
            let mut halvings = 0;
            while next.im <= 0.0 {
                step *= 0.5;
                next = x - step;
                halvings += 1;
                if halvings > 40 {
                    return None;
                }
            }
            x = next;
            if step.norm() <= 0.1 * tol * x.norm().max(1.0) {
                break;
            }
        }
        let m2 = self.map_m2(x, z).ok()?;
        let (r1, m) = self.map_m1_m(m2, z).ok()?;
        let residual = (x - r1).norm();
        let ok = residual <= tol * scale(x, m2) && x.im > 0.0 && m2.im > 0.0 && m.im > 0.0;
        ok.then_some(StieltjesTriple {
            z,
            m1: x,
            m2,
            m,
            residual,
            iterations,
        })
    }

    /// Warm-started continuation down a vertical line `E + iη`, one triple per `η`.
    pub fn solve_ladder(&self, energy: f64, etas: &[f64], start: Option<(Complex64, Complex64)>) -> Result<Vec<StieltjesTriple>> {
        let mut warm = start;
        let mut out = Vec::with_capacity(etas.len());
        for &eta in etas {
            let t = self.solve_from(Complex64::new(energy, eta), warm)?;
            warm = Some((t.m1, t.m2));
            out.push(t);
        }
        Ok(out)
    }

    /// Solves at `z` by continuation from `η = max(1, Im z)` in decades.
    pub fn solve_continued(&self, z: Complex64) -> Result<StieltjesTriple> {
        let etas = eta_ladder(1.0, z.im);
        let ladder = self.solve_ladder(z.re, &etas, None)?;
        Ok(*ladder.last().expect("ladder is nonempty"))
    }
}

fn scale(a: Complex64, b: Complex64) -> f64 {
    a.norm().max(b.norm()).max(1.0)
}

/// Geometric ladder from `top` down to `bottom` (inclusive) in factors of 10.
pub fn eta_ladder(top: f64, bottom: f64) -> Vec<f64> {
    let mut etas = Vec::new();
    let mut eta = top.max(bottom);
    while eta > bottom * 1.000_000_1 {
        etas.push(eta);
        eta *= 0.1;
    }
    etas.push(bottom);
    etas
}

/// `F_p(x, z)` for a realization.
pub fn eval_fp(config: &ModelConfig, xi_squared: &[f64], x: Complex64, z: Complex64) -> Result<Complex64> {
    SelfConsistentSystem::empirical(config, xi_squared)?.f(x, z)
}

/// `F_{p,c}(x, y)` with the law integrated by quadrature.
pub fn eval_fpc<T: Scalar>(config: &ModelConfig, x: T, y: T) -> Result<T> {
    SelfConsistentSystem::limiting(config)?.f(x, y)
}

pub fn partials_fpc<T: Scalar>(config: &ModelConfig, x: T, y: T) -> Result<Partials<T>> {
    SelfConsistentSystem::limiting(config)?.partials(x, y)
}

/// Solves either system at `z`.
pub fn solve_system(config: &ModelConfig, input: RadialInput<'_>, z: Complex64) -> Result<StieltjesTriple> {
    SelfConsistentSystem::new(config, input, SolverOptions::default())?.solve(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    /// Multiplies the `η` ladder `{1e-2, 1e-3, 1e-4}`.
    pub scale: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self { scale: 1e-2 }
    }
}

/// Density on a grid, recovered by Stieltjes inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub error_estimates: Vec<f64>,
    pub eta_sequence: Vec<f64>,
    pub variant: Variant,
    /// `Im m` at the smallest `η` for each grid point, before extrapolation.
    #[serde(skip)]
    pub transforms: Vec<Complex64>,
}

impl DensityCurve {
    /// Trapezoid rule over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(e, r)| 0.5 * (e[1] - e[0]) * (r[0] + r[1]))
            .sum()
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "E,rho,eta_error_estimate")?;
        for ((e, r), err) in self.grid.iter().zip(&self.values).zip(&self.error_estimates) {
            writeln!(out, "{e},{r},{err}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

const ETA_BASE: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// `ρ(E) = lim Im m(E + iη)/π`, Richardson-extrapolated from three `η` values.
///
/// The ladder is shrunk proportionally for `E < 1` so the hard edge at the
/// origin (when `φ = 1`) stays resolved.
pub fn density(system: &SelfConsistentSystem, variant: Variant, grid: &[f64], opts: DensityOptions) -> Result<DensityCurve> {
    let mut values = Vec::with_capacity(grid.len());
    let mut errors = Vec::with_capacity(grid.len());
    let mut transforms = Vec::with_capacity(grid.len());
    let mut warm: Option<(Complex64, Complex64)> = None;
    for &e in grid {
        let (rho, err, top, last) = density_point(system, variant, e, opts.scale, warm)
            .map_err(|source| Error::AtGridPoint {
                energy: e,
                source: Box::new(source),
            })?;
        warm = Some(top);
        values.push(rho);
        errors.push(err);
        transforms.push(last);
    }
    Ok(DensityCurve {
        grid: grid.to_vec(),
        values,
        error_estimates: errors,
        eta_sequence: ETA_BASE.iter().map(|b| b * opts.scale).collect(),
        variant,
        transforms,
    })
}

type PointEstimate = (f64, f64, (Complex64, Complex64), Complex64);

fn density_point(
    system: &SelfConsistentSystem,
    variant: Variant,
    energy: f64,
    scale: f64,
    warm: Option<(Complex64, Complex64)>,
) -> Result<PointEstimate> {
    let s = scale * energy.abs().min(1.0);
    let etas = ETA_BASE.map(|b| b * s);
    let mut ladder = eta_ladder(1.0, etas[0]);
    ladder.extend_from_slice(&etas[1..]);
    let sol = system.solve_ladder(energy, &ladder, warm)?;
    let top = (sol[0].m1, sol[0].m2);
    let k = sol.len();
    let im = |t: &StieltjesTriple| t.get(variant).im;
    let (i1, i2, i3) = (im(&sol[k - 3]), im(&sol[k - 2]), im(&sol[k - 1]));
    let extrap = |ea: f64, ia: f64, eb: f64, ib: f64| (ea * ib - eb * ia) / (ea - eb);
    let fine = extrap(etas[1], i2, etas[2], i3);
    let coarse = extrap(etas[0], i1, etas[1], i2);
    let pi = std::f64::consts::PI;
    Ok((
        (fine / pi).max(0.0),
        ((fine - coarse) / pi).abs(),
        top,
        sol[k - 1].get(variant),
    ))
}

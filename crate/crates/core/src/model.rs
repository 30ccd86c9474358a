//! Model inputs: population spectrum, radial law of `ξ²` and the aspect ratio.
//!
//! The data are `y_i = ξ_i T u_i` with `T*T = Σ = diag(σ_1, …, σ_p)` and `u_i`
//! uniform on the unit sphere. The radial law has support in `(0, l]` and
//! behaves like `P(l − ξ² ≤ x) ≍ x^{d+1}` near its right end.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_QUADRATURE_NODES: usize = 256;

/// Population eigenvalues `σ_1 ≥ … ≥ σ_p` of `Σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpectrum {
    sigmas: Vec<f64>,
}

impl PopulationSpectrum {
    /// Wraps the values as given; ordering and bounds are reported by [`validate`].
    pub fn new(sigmas: Vec<f64>) -> Self {
        Self { sigmas }
    }

    pub fn identity(p: usize) -> Self {
        Self::constant(p, 1.0)
    }

    pub fn constant(p: usize, value: f64) -> Self {
        Self {
            sigmas: vec![value; p],
        }
    }

    /// `round(weight·p)` copies of `sigma_a` followed by `sigma_b`, sorted decreasingly.
    pub fn two_atom(p: usize, sigma_a: f64, sigma_b: f64, weight: f64) -> Self {
        let na = ((weight * p as f64).round() as usize).min(p);
        let mut sigmas = vec![sigma_a; na];
        sigmas.extend(std::iter::repeat_n(sigma_b, p - na));
        sigmas.sort_by(|a, b| b.total_cmp(a));
        Self { sigmas }
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.sigmas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.sigmas.iter().sum::<f64>() / self.sigmas.len() as f64
    }

    /// Distinct values with their relative multiplicities (weights sum to one).
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let mut sorted = self.sigmas.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let w = 1.0 / sorted.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for s in sorted {
            match atoms.last_mut() {
                Some((v, weight)) if *v == s => *weight += w,
                _ => atoms.push((s, w)),
            }
        }
        atoms
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            sigmas: self.sigmas.iter().map(|s| s * c).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadialKind {
    /// `ξ² = l·(1 − B)` with `B ~ Beta(d + 1, b)`.
    Beta { b: f64 },
    /// Point masses with equal weight (a sampled realization, or a degenerate law).
    Empirical { masses: Vec<f64> },
}

/// Law of `ξ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialLaw {
    pub l: f64,
    pub d: f64,
    pub kind: RadialKind,
}

impl RadialLaw {
    pub fn beta(l: f64, d: f64, b: f64) -> Result<Self> {
        if !(l > 0.0) || !(d > -1.0) || !(b > 0.0) {
            return Err(Error::Domain(format!(
                "beta radial law needs l > 0, d > -1, b > 0 (got l={l}, d={d}, b={b})"
            )));
        }
        Ok(Self {
            l,
            d,
            kind: RadialKind::Beta { b },
        })
    }

    /// `ξ² ≡ value`.
    pub fn point_mass(value: f64) -> Self {
        Self::empirical(vec![value])
    }

    /// Equal-weight point masses; `l` is the largest mass.
    pub fn empirical(masses: Vec<f64>) -> Self {
        let l = masses.iter().copied().fold(0.0, f64::max);
        Self {
            l,
            d: 0.0,
            kind: RadialKind::Empirical { masses },
        }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self.kind, RadialKind::Beta { .. })
    }

    /// `F(x) = P(ξ² ≤ x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        match &self.kind {
            RadialKind::Beta { b } => {
                if x <= 0.0 {
                    return Ok(0.0);
                }
                if x >= self.l {
                    return Ok(1.0);
                }
                let u = 1.0 - x / self.l;
                let a = self.d + 1.0;
                if *b == 1.0 {
                    Ok(1.0 - u.powf(a))
                } else {
                    Ok(1.0 - beta_reg(a, *b, u))
                }
            }
            RadialKind::Empirical { masses } => {
                if masses.is_empty() {
                    return Err(Error::InvalidState(
                        "empirical radial law has no point masses".into(),
                    ));
                }
                let below = masses.iter().filter(|&&m| m <= x).count();
                Ok(below as f64 / masses.len() as f64)
            }
        }
    }

    /// `E[ξ²]`.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            RadialKind::Beta { b } => self.l * b / (self.d + 1.0 + b),
            RadialKind::Empirical { masses } => {
                masses.iter().sum::<f64>() / masses.len().max(1) as f64
            }
        }
    }

    /// Quadrature for `∫ h(s) dF(s)`: Gauss–Jacobi matched to the Beta density,
    /// or exact point-mass summation.
    pub fn quadrature(&self, nodes: usize) -> Result<QuadratureRule> {
        self.quadrature_with_edge_power(nodes, 0)
    }

    /// Rule for `∫ h(s) (l − s)^{-k} dF(s)`: the singular factor is absorbed into
    /// the Jacobi weight, so the rule integrates `h` against a lowered exponent
    /// and its weights carry the Beta-function ratio. Needs `d + 1 − k > 0`.
    pub fn quadrature_with_edge_power(&self, nodes: usize, k: u32) -> Result<QuadratureRule> {
        match &self.kind {
            RadialKind::Beta { b } => {
                let alpha = self.d - k as f64;
                if !(alpha > -1.0) {
                    return Err(Error::Domain(format!(
                        "∫(l−s)^-{k} dF diverges for d = {} (needs d > {})",
                        self.d,
                        k as f64 - 1.0
                    )));
                }
                let mut rule = QuadratureRule::beta_family(nodes, self.l, alpha, *b)?;
                // B(d+1−k, b)/B(d+1, b) · l^{-k}
                let mut factor = self.l.powi(-(k as i32));
                for j in 1..=k {
                    let a = self.d + 1.0 - j as f64;
                    factor *= (a + b) / a;
                }
                rule.scale_weights(factor);
                Ok(rule)
            }
            RadialKind::Empirical { masses } => {
                if masses.is_empty() {
                    return Err(Error::InvalidState(
                        "empirical radial law has no point masses".into(),
                    ));
                }
                let mut rule = QuadratureRule::point_masses(masses);
                if k > 0 {
                    let l = self.l;
                    if masses.iter().any(|&m| m >= l) {
                        return Err(Error::Domain(
                            "edge-weighted integral of a point mass at l diverges".into(),
                        ));
                    }
                    rule.reweight(|s| (l - s).powi(-(k as i32)));
                }
                Ok(rule)
            }
        }
    }
}

/// Model configuration: dimensions, population spectrum, radial law and `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub p: usize,
    pub n: usize,
    pub spectrum: PopulationSpectrum,
    pub radial: RadialLaw,
    pub tau: f64,
}

impl ModelConfig {
    pub fn new(p: usize, n: usize, spectrum: PopulationSpectrum, radial: RadialLaw) -> Self {
        Self {
            p,
            n,
            spectrum,
            radial,
            tau: DEFAULT_TAU,
        }
    }

    /// `φ = p/n`.
    pub fn phi(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

/// Every violated model invariant, with the offending value. Empty means valid.
pub fn validate(config: &ModelConfig) -> Vec<String> {
    let mut out = Vec::new();
    let tau = config.tau;
    if !(tau > 0.0 && tau < 1.0) {
        out.push(format!("τ={tau} not in (0,1)"));
    }
    if config.p == 0 {
        out.push("p must be positive".into());
    }
    if config.n == 0 {
        out.push("n must be positive".into());
    }
    let sig = config.spectrum.sigmas();
    if sig.len() != config.p {
        out.push(format!(
            "spectrum has {} entries but p={}",
            sig.len(),
            config.p
        ));
    }
    for (i, w) in sig.windows(2).enumerate() {
        if w[1] > w[0] {
            out.push(format!("spectrum not nonincreasing at index {}", i + 1));
        }
    }
    if let Some(i) = sig.iter().position(|s| !(*s > 0.0)) {
        out.push(format!("σ[{i}]={} is not positive", sig[i]));
    }
    if tau > 0.0 && tau < 1.0 && !sig.is_empty() {
        let smin = sig.iter().copied().fold(f64::INFINITY, f64::min);
        let smax = config.spectrum.largest();
        if smin < tau {
            out.push(format!("σ_p={smin} below τ={tau}"));
        }
        if smax > 1.0 / tau {
            out.push(format!("σ_1={smax} exceeds τ⁻¹={}", fmt_num(1.0 / tau)));
        }
    }
    if config.p > 0 && config.n > 0 && tau > 0.0 && tau < 1.0 {
        let phi = config.phi();
        if phi < tau {
            out.push(format!("φ={} below τ={tau}", fmt_num(phi)));
        }
        if phi > 1.0 / tau {
            out.push(format!(
                "φ={} exceeds τ⁻¹={}",
                fmt_num(phi),
                fmt_num(1.0 / tau)
            ));
        }
    }
    let law = &config.radial;
    if !(law.l > 0.0) {
        out.push(format!("radial support bound l={} not positive", law.l));
    }
    if !(law.d > -1.0) {
        out.push(format!("edge exponent d={} not above -1", law.d));
    }
    match &law.kind {
        RadialKind::Beta { b } => {
            if !(*b > 0.0) {
                out.push(format!("beta shape b={b} not positive"));
            }
        }
        RadialKind::Empirical { masses } => {
            if masses.is_empty() {
                out.push("empirical radial law has no point masses".into());
            }
            if let Some(m) = masses.iter().find(|&&m| !(m > 0.0 && m <= law.l)) {
                out.push(format!("point mass {m} outside (0, {}]", law.l));
            }
        }
    }
    out
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

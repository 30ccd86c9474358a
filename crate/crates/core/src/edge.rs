//! Right-most spectral edge, the Tracy–Widom scale `γ₀`, and edge diagnostics.
//!
//! The edge `(x*, y*)` solves `F(x, y) = 0`, `∂_x F(x, y) = 0` with
//! `x* ∈ (−1/l, 0)`. For fixed `x` the branch `y > σ₁ g(x)` of `F(x, ·) = 0`
//! has exactly one root `y(x)`, and the edge is the critical point of `y(x)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::selfconsistent::{
    density, DensityOptions, Mode, SelfConsistentSystem, Variant,
};
use crate::stats::ols_slope;

const SCAN_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityCase {
    DLe1,
    DGt1Checked,
    DGt1Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `|1 + σ₁ m₂(L₊)|`
    pub sigma1_gap: f64,
    pub tau_threshold: f64,
    pub d: f64,
    pub vartheta: Option<f64>,
    pub upsilon1: Option<f64>,
    pub upsilon2: Option<f64>,
    pub case: RegularityCase,
    /// `m₂` at the edge, extrapolated along `L₊ + iη`.
    pub m2_edge: f64,
    pub phi_inv: f64,
}

impl RegularityReport {
    pub fn passes(&self) -> bool {
        let gap_ok = self.sigma1_gap >= self.tau_threshold;
        let shape_ok = match self.case {
            RegularityCase::DLe1 => true,
            RegularityCase::DGt1Checked => true,
            RegularityCase::DGt1Failed => false,
        };
        gap_ok && shape_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub x_star: f64,
    pub edge: f64,
    pub mode: Mode,
    pub gamma0: Option<f64>,
    pub regularity: Option<RegularityReport>,
    pub sqrt_fit_exponent: Option<f64>,
    /// Every critical value found by the outer scan, largest first.
    pub critical_values: Vec<f64>,
}

impl EdgeReport {
    pub fn multiple_roots(&self) -> bool {
        self.critical_values.len() > 1
    }

    /// Flat JSON object with keys
    /// `x_star, edge, gamma0, sigma1_gap, vartheta, case, sqrt_fit_exponent`.
    pub fn to_flat_json(&self) -> serde_json::Value {
        let reg = self.regularity.as_ref();
        serde_json::json!({
            "x_star": self.x_star,
            "edge": self.edge,
            "gamma0": self.gamma0,
            "sigma1_gap": reg.map(|r| r.sigma1_gap),
            "vartheta": reg.and_then(|r| r.vartheta),
            "case": reg.map(|r| r.case),
            "sqrt_fit_exponent": self.sqrt_fit_exponent,
        })
    }
}

/// Solves `F(x, y) = 0` for `y` on the branch where every `−y + σ_i g(x)` is negative.
fn branch_root(sys: &SelfConsistentSystem, x: f64, y_max: f64) -> Result<Option<f64>> {
    let g = sys.g(x)?;
    let lo0 = sys.sigma_max() * g;
    let eps = 1e-12 * lo0.abs().max(1.0);
    let mut lo = lo0 + eps;
    let mut hi = y_max;
    if hi <= lo {
        return Ok(None);
    }
    if sys.f(x, hi)? < 0.0 {
        return Ok(None);
    }
    // F(x, ·) increases and is concave here, so Newton from the left is
    // monotone; bisection guards the bracket.
    let mut y = lo;
    let mut flo = sys.f(x, lo)?;
    if flo >= 0.0 {
        return Ok(Some(lo));
    }
    for _ in 0..200 {
        let p = sys.partials(x, y)?;
        let mut next = y - flo / p.dy;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let fn_ = sys.f(x, next)?;
        if fn_ < 0.0 {
            lo = next;
            flo = fn_;
            y = next;
        } else {
            hi = next;
            if fn_ == 0.0 {
                return Ok(Some(next));
            }
            // restart from the lower bracket end
            y = lo;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            break;
        }
    }
    // pick the endpoint with smaller |F|
    let fh = sys.f(x, hi)?;
    Ok(Some(if fh.abs() < flo.abs() { hi } else { lo }))
}

fn y_max(sys: &SelfConsistentSystem) -> f64 {
    10.0 * (sys.sigma_max() * sys.radial_mean() * (1.0 + sys.phi_inv()) + sys.support_bound())
}

/// `∂_x F` along the curve `y(x)`.
fn slope_along_curve(sys: &SelfConsistentSystem, x: f64, ymax: f64) -> Result<Option<(f64, f64)>> {
    match branch_root(sys, x, ymax)? {
        Some(y) => Ok(Some((sys.partials(x, y)?.dx, y))),
        None => Ok(None),
    }
}

/// Locates the right-most edge of the system's density.
pub fn find_edge(sys: &SelfConsistentSystem) -> Result<EdgeReport> {
    let l = sys.support_bound();
    let eps = 1e-9 * l;
    let lo = -1.0 / l + eps;
    let hi = -eps;
    let ymax = y_max(sys);

    // uniform scan plus geometric refinement toward both ends
    let mut xs: Vec<f64> = (0..=SCAN_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / SCAN_POINTS as f64)
        .collect();
    for j in 1..=12 {
        let t = 10f64.powi(-j) / l;
        xs.push(-1.0 / l + t);
        xs.push(-t);
    }
    xs.retain(|&x| x >= lo && x <= hi);
    xs.sort_by(|a, b| b.total_cmp(a));
    xs.dedup();

    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    for &x in &xs {
        if let Some((dx, _)) = slope_along_curve(sys, x, ymax)? {
            samples.push((x, dx));
        }
    }

    let mut roots: Vec<(f64, f64)> = Vec::new();
    for w in samples.windows(2) {
        let ((xa, fa), (xb, fb)) = (w[0], w[1]);
        if fa == 0.0 {
            roots.push(polish(sys, xa, xa, ymax)?);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            roots.push(polish(sys, xa, xb, ymax)?);
        }
    }
    if roots.is_empty() {
        return Err(Error::EdgeNotFound {
            lo,
            hi,
            reason: "∂F/∂x keeps one sign along y(x)".into(),
        });
    }
    roots.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x_star, edge) = roots[0];
    Ok(EdgeReport {
        x_star,
        edge,
        mode: sys.mode(),
        gamma0: None,
        regularity: None,
        sqrt_fit_exponent: None,
        critical_values: roots.iter().map(|r| r.1).collect(),
    })
}

/// Bisection on the sign change of `∂_x F(x, y(x))`, then secant polish.
fn polish(sys: &SelfConsistentSystem, mut a: f64, mut b: f64, ymax: f64) -> Result<(f64, f64)> {
    let (lo, hi) = (a.min(b), a.max(b));
    let eval = |x: f64| -> Result<f64> {
        slope_along_curve(sys, x, ymax)?
            .map(|(d, _)| d)
            .ok_or(Error::EdgeNotFound {
                lo,
                hi,
                reason: "curve y(x) left the search window".into(),
            })
    };
    if a != b {
        let mut fa = eval(a)?;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            let fm = eval(m)?;
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
            if (a - b).abs() <= 1e-6 * a.abs().max(1e-300) {
                break;
            }
        }
        // secant polish inside the bracket
        let (mut x0, mut x1) = (a, b);
        let (mut f0, mut f1) = (eval(x0)?, eval(x1)?);
        for _ in 0..50 {
            if f1 == f0 {
                break;
            }
            let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
            if !x2.is_finite() {
                break;
            }
            let f2 = eval(x2)?;
            x0 = x1;
            f0 = f1;
            x1 = x2;
            f1 = f2;
            if (x1 - x0).abs() <= 4.0 * f64::EPSILON * x1.abs() || f1 == 0.0 {
                break;
            }
        }
        if f0.abs() < f1.abs() {
            x1 = x0;
        }
        a = x1;
    }
    let y = branch_root(sys, a, ymax)?.ok_or(Error::EdgeNotFound {
        lo: a,
        hi: a,
        reason: "no branch root at the polished point".into(),
    })?;
    Ok((a, y))
}

/// `γ₀` from the limiting system at its edge:
/// `γ₀³ = (−2 ∂_y F / ∂²_x F) · (φ⁻¹ ∫ s/(L₊(1 + s x*)²) dF)²`.
pub fn gamma0(sys: &SelfConsistentSystem, report: &EdgeReport) -> Result<f64> {
    let (x, y) = (report.x_star, report.edge);
    let p = sys.partials(x, y)?;
    if p.dxx == 0.0 {
        return Err(Error::Degenerate("∂²F/∂x² vanishes at the edge".into()));
    }
    let integral = sys.radial_sum(|s| s / (y * (1.0 + s * x).powi(2)));
    let cube = -2.0 * p.dy / p.dxx * integral * integral;
    if !(cube > 0.0) {
        return Err(Error::RegularityViolation(format!(
            "γ₀³ = {cube} is not positive (∂_yF = {}, ∂²_xF = {})",
            p.dy, p.dxx
        )));
    }
    Ok(cube.cbrt())
}

/// `m₂` at the edge as the limit along `L₊ + iη`, `η ∈ {1e-4, 1e-6, 1e-8}`.
///
/// Near a square-root edge `m₂(L₊ + iη) ≈ m₂(L₊) + c√η`; the two smallest
/// points are combined to cancel the `√η` term.
pub fn edge_m2_limit(sys: &SelfConsistentSystem, edge: f64) -> Result<f64> {
    let mut etas = crate::selfconsistent::eta_ladder(1.0, 1e-4);
    etas.push(1e-6);
    etas.push(1e-8);
    let ladder = sys.solve_ladder(edge, &etas, None)?;
    let k = ladder.len();
    let (a, b) = (ladder[k - 2].m2, ladder[k - 1].m2);
    // √(1e-6)/√(1e-8) = 10
    Ok(((10.0 * b - a) / 9.0).re)
}

/// Checks the σ₁-gap and edge-shape regularity conditions for the limiting system.
pub fn check_regularity(config: &ModelConfig, sys: &SelfConsistentSystem, report: &EdgeReport) -> Result<RegularityReport> {
    let m2 = edge_m2_limit(sys, report.edge)?;
    let sigma1 = sys.sigma_max();
    let d = config.radial.d;
    let phi_inv = sys.phi_inv();
    let mut out = RegularityReport {
        sigma1_gap: (1.0 + sigma1 * m2).abs(),
        tau_threshold: config.tau,
        d,
        vartheta: None,
        upsilon1: None,
        upsilon2: None,
        case: RegularityCase::DLe1,
        m2_edge: m2,
        phi_inv,
    };
    if d > 1.0 && config.radial.is_parametric() {
        let (u1, u2) = upsilons(config, sys.options().quadrature_nodes)?;
        let theta = vartheta(sys, report.edge, u1, u2);
        out.upsilon1 = Some(u1);
        out.upsilon2 = Some(u2);
        out.vartheta = Some(theta);
        out.case = if phi_inv < theta {
            RegularityCase::DGt1Checked
        } else {
            RegularityCase::DGt1Failed
        };
    }
    Ok(out)
}

/// `υ₁ = φ⁻¹∫ l²s²/(l−s)² dF` and `υ₂ = φ⁻¹∫ ls/(l−s) dF`.
pub fn upsilons(config: &ModelConfig, nodes: usize) -> Result<(f64, f64)> {
    let law = &config.radial;
    if law.d <= 1.0 {
        return Err(Error::Domain(format!(
            "υ₁ needs d > 1 for ∫(l−s)^-2 dF to converge (d = {})",
            law.d
        )));
    }
    let phi_inv = 1.0 / config.phi();
    let l = law.l;
    let r2 = law.quadrature_with_edge_power(nodes, 2)?;
    let r1 = law.quadrature_with_edge_power(nodes, 1)?;
    let u1 = phi_inv * r2.integrate(|s| l * l * s * s);
    let u2 = phi_inv * r1.integrate(|s| l * s);
    Ok((u1, u2))
}

/// `ϑ = (φ⁻¹/p) Σ σ_i² υ₁/(L₊ − σ_i υ₂)²`.
pub fn vartheta(sys: &SelfConsistentSystem, edge: f64, u1: f64, u2: f64) -> f64 {
    sys.phi_inv()
        * sys
            .atoms()
            .iter()
            .map(|&(s, w)| w * s * s * u1 / (edge - s * u2).powi(2))
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtEdgeFit {
    /// Slope of `log ρ(λ₊ − κ)` against `log κ`.
    pub density_slope: f64,
    /// Slope of `log |m(λ₊) − m(λ₊ − κ)|` against `log κ`.
    pub transform_slope: f64,
    pub kappas: Vec<f64>,
    pub densities: Vec<f64>,
}

/// Fits the density decay exponent at the edge over `κ ∈ [1e-4, 1e-2]·λ₊`.
pub fn sqrt_edge_fit(sys: &SelfConsistentSystem, report: &EdgeReport, variant: Variant) -> Result<SqrtEdgeFit> {
    let edge = report.edge;
    let kappas: Vec<f64> = (0..15)
        .map(|k| edge * 10f64.powf(-4.0 + 2.0 * k as f64 / 14.0))
        .collect();
    let mut grid: Vec<f64> = kappas.iter().map(|k| edge - k).collect();
    grid.reverse();
    let opts = DensityOptions {
        scale: 1e-2 * kappas[0],
    };
    let curve = density(sys, variant, &grid, opts)?;
    let mut rho = curve.values.clone();
    rho.reverse();
    let mut transforms = curve.transforms.clone();
    transforms.reverse();

    let at_edge = edge_value(sys, report, variant)?;
    let lk: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
    let lr: Vec<f64> = rho.iter().map(|r| r.max(1e-300).ln()).collect();
    let lm: Vec<f64> = transforms
        .iter()
        .map(|m| (m - at_edge).norm().max(1e-300).ln())
        .collect();
    Ok(SqrtEdgeFit {
        density_slope: ols_slope(&lk, &lr),
        transform_slope: ols_slope(&lk, &lm),
        kappas,
        densities: rho,
    })
}

/// Real value of `m`, `m₁` or `m₂` at the edge from `x*`.
fn edge_value(sys: &SelfConsistentSystem, report: &EdgeReport, variant: Variant) -> Result<Complex64> {
    let x = report.x_star;
    let y = report.edge;
    let m2 = sys.map_m2(x, y)?;
    let (m1, m) = sys.map_m1_m(m2, y)?;
    Ok(Complex64::new(
        match variant {
            Variant::M => m,
            Variant::M1 => m1,
            Variant::M2 => m2,
        },
        0.0,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub z: Complex64,
    pub kappa: f64,
    pub abs_m: f64,
    pub im_m: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub min_sigma_gap: f64,
    pub min_xi_gap: f64,
    pub flagged: bool,
}

/// Compares `|m|`, `Im m` and the denominators `|1 + σ_i m₂|`, `|1 + ξ_j² m₁|`
/// with their predicted orders on a grid near the edge.
pub fn check_stieltjes_bounds(sys: &SelfConsistentSystem, edge: f64, z_grid: &[Complex64]) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        let t = sys.solve_continued(z)?;
        let kappa = (z.re - edge).abs();
        let eta = z.im;
        let predicted = if z.re >= edge {
            eta / (kappa + eta).sqrt()
        } else {
            (kappa + eta).sqrt()
        };
        let ratio = t.m.im / predicted;
        let min_sigma_gap = sys
            .atoms()
            .iter()
            .map(|&(s, _)| (1.0 + s * t.m2).norm())
            .fold(f64::INFINITY, f64::min);
        let min_xi_gap = sys
            .radial_nodes()
            .iter()
            .map(|&s| (1.0 + s * t.m1).norm())
            .fold(f64::INFINITY, f64::min);
        let flagged = !(1.0 / 50.0..=50.0).contains(&ratio) || min_sigma_gap < 1e-3 || min_xi_gap < 1e-3;
        rows.push(BoundRow {
            z,
            kappa,
            abs_m: t.m.norm(),
            im_m: t.m.im,
            predicted,
            ratio,
            min_sigma_gap,
            min_xi_gap,
            flagged,
        });
    }
    Ok(rows)
}

/// Edge, regularity, `γ₀` and the square-root fit for the limiting system.
pub fn limiting_edge_report(config: &ModelConfig, sys: &SelfConsistentSystem, with_sqrt_fit: bool) -> Result<EdgeReport> {
    let mut report = find_edge(sys)?;
    let reg = check_regularity(config, sys, &report)?;
    report.gamma0 = gamma0(sys, &report).ok();
    report.regularity = Some(reg);
    if with_sqrt_fit {
        report.sqrt_fit_exponent = Some(sqrt_edge_fit(sys, &report, Variant::M)?.density_slope);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PopulationSpectrum, RadialLaw};

    fn mp(p: usize, n: usize) -> ModelConfig {
        ModelConfig::new(p, n, PopulationSpectrum::identity(p), RadialLaw::point_mass(1.0))
    }

    #[test]
    fn mp_square_edge() {
        let sys = SelfConsistentSystem::limiting(&mp(50, 50)).unwrap();
        let r = find_edge(&sys).unwrap();
        assert!((r.x_star + 0.5).abs() < 1e-8, "{}", r.x_star);
        assert!((r.edge - 4.0).abs() < 1e-8, "{}", r.edge);
        assert!(!r.multiple_roots());
    }

    #[test]
    fn mp_rectangular_edges() {
        for r in [0.25, 0.5, 2.0] {
            // φ⁻¹ = r
            let n = 400;
            let p = (n as f64 / r).round() as usize;
            let sys = SelfConsistentSystem::limiting(&mp(p, n)).unwrap();
            let rep = find_edge(&sys).unwrap();
            let want = (1.0 + r.sqrt()).powi(2);
            assert!((rep.edge - want).abs() < 1e-8, "r={r}: {} vs {want}", rep.edge);
        }
    }

    #[test]
    fn mp_gamma0() {
        let sys = SelfConsistentSystem::limiting(&mp(50, 50)).unwrap();
        let r = find_edge(&sys).unwrap();
        let g = gamma0(&sys, &r).unwrap();
        assert!((g - 2f64.powf(-4.0 / 3.0)).abs() < 1e-6, "{g}");
    }

    #[test]
    fn mp_regularity() {
        let cfg = mp(50, 50);
        let sys = SelfConsistentSystem::limiting(&cfg).unwrap();
        let r = find_edge(&sys).unwrap();
        let reg = check_regularity(&cfg, &sys, &r).unwrap();
        assert!((reg.m2_edge + 0.5).abs() < 1e-3, "{}", reg.m2_edge);
        assert!((reg.sigma1_gap - 0.5).abs() < 1e-3);
        assert!(reg.passes());
        assert_eq!(reg.case, RegularityCase::DLe1);
    }

    #[test]
    fn half_exponent_is_d_le_1() {
        let cfg = ModelConfig::new(20, 20, PopulationSpectrum::identity(20), RadialLaw::beta(1.0, 0.5, 1.0).unwrap());
        let sys = SelfConsistentSystem::limiting(&cfg).unwrap();
        let r = find_edge(&sys).unwrap();
        let reg = check_regularity(&cfg, &sys, &r).unwrap();
        assert_eq!(reg.case, RegularityCase::DLe1);
        assert!(reg.vartheta.is_none());
    }

    #[test]
    fn upsilon2_closed_form_d2() {
        // dF = 3(1−s)² ds: υ₂ = φ⁻¹·3∫s(1−s) ds = φ⁻¹/2
        let cfg = ModelConfig::new(30, 20, PopulationSpectrum::identity(30), RadialLaw::beta(1.0, 2.0, 1.0).unwrap());
        let (u1, u2) = upsilons(&cfg, 64).unwrap();
        let phi_inv = 20.0 / 30.0;
        assert!((u2 - phi_inv / 2.0).abs() < 1e-13, "{u2}");
        // υ₁ = φ⁻¹·3∫s² ds = φ⁻¹
        assert!((u1 - phi_inv).abs() < 1e-13, "{u1}");
    }

    #[test]
    fn upsilon_needs_d_above_one() {
        let cfg = ModelConfig::new(10, 10, PopulationSpectrum::identity(10), RadialLaw::beta(1.0, 0.8, 1.0).unwrap());
        assert!(matches!(upsilons(&cfg, 32), Err(Error::Domain(_))));
    }

    #[test]
    fn edge_sits_inside_admissible_interval() {
        for d in [0.0, 0.5, 1.0] {
            let cfg = ModelConfig::new(20, 20, PopulationSpectrum::identity(20), RadialLaw::beta(1.0, d, 1.0).unwrap());
            let sys = SelfConsistentSystem::limiting(&cfg).unwrap();
            let r = find_edge(&sys).unwrap();
            assert!(r.x_star > -1.0 && r.x_star < 0.0);
            assert!(sys.f(r.x_star, r.edge).unwrap().abs() <= 1e-10);
            assert!(sys.partials(r.x_star, r.edge).unwrap().dx.abs() <= 1e-8);
            assert!(sys.partials(r.x_star, r.edge).unwrap().dxx < 0.0);
        }
    }
}

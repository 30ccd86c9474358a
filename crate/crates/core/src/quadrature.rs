//! Quadrature rules for integrals against the radial law `dF`.
//!
//! Parametric laws use Gauss–Jacobi rules whose weight is the Beta density
//! itself, so the `(l − s)^d` endpoint behavior never has to be resolved by
//! the nodes. Nodes come from Golub–Welsch and are polished by Newton on the
//! three-term recurrence.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes and weights for `∫ h dF ≈ Σ w_k h(s_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Exponent of the `(l − s)` factor absorbed into the weights.
    pub weight_exponent: f64,
}

impl QuadratureRule {
    /// Rule for the law of `l(1 − B)`, `B ~ Beta(alpha + 1, b)`, on `(0, l)`.
    /// Weights sum to one.
    pub fn beta_family(n: usize, l: f64, alpha: f64, b: f64) -> Result<Self> {
        let beta = b - 1.0;
        let (x, w) = gauss_jacobi(n, alpha, beta)?;
        // (1 − x) ∝ (l − s), (1 + x) ∝ s
        let nodes = x.iter().map(|&x| 0.5 * l * (1.0 + x)).collect();
        Ok(Self {
            nodes,
            weights: w,
            weight_exponent: alpha,
        })
    }

    pub fn point_masses(masses: &[f64]) -> Self {
        let w = 1.0 / masses.len() as f64;
        Self {
            nodes: masses.to_vec(),
            weights: vec![w; masses.len()],
            weight_exponent: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub(crate) fn scale_weights(&mut self, c: f64) {
        self.weights.iter_mut().for_each(|w| *w *= c);
    }

    pub(crate) fn reweight(&mut self, f: impl Fn(f64) -> f64) {
        for (w, &s) in self.weights.iter_mut().zip(&self.nodes) {
            *w *= f(s);
        }
    }
}

/// Jacobi polynomial `P_n^{(α,β)}(x)` and `P_{n−1}^{(α,β)}(x)` by recurrence.
fn jacobi_pair(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let ab = alpha + beta;
    let mut p0 = 1.0;
    if n == 0 {
        return (p0, 0.0);
    }
    let mut p1 = 0.5 * ((ab + 2.0) * x + (alpha - beta));
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + ab;
        let a1 = 2.0 * k * (k + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (c * (c - 2.0) * x + alpha * alpha - beta * beta);
        let a3 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c;
        let p2 = (a2 * p1 - a3 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// `(P_n, P_n')` at `x`.
fn jacobi_with_derivative(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let (pn, pm) = jacobi_pair(n, alpha, beta, x);
    let nf = n as f64;
    let c = 2.0 * nf + alpha + beta;
    let dp = (nf * ((alpha - beta) - c * x) * pn + 2.0 * (nf + alpha) * (nf + beta) * pm)
        / (c * (1.0 - x * x));
    (pn, dp)
}

/// Gauss–Jacobi nodes on `(-1, 1)` for weight `(1−x)^α (1+x)^β`, weights
/// normalized to sum to one.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Domain("quadrature needs at least one node".into()));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::Domain(format!(
            "Jacobi exponents must exceed -1 (alpha={alpha}, beta={beta})"
        )));
    }
    let ab = alpha + beta;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jm[(k, k)] = diag;
        if k + 1 < n {
            let j = (k + 1) as f64;
            let c = 2.0 * j + ab;
            let b2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((ab + 2.0).powi(2) * (ab + 3.0))
            } else {
                4.0 * j * (j + alpha) * (j + beta) * (j + ab) / (c * c * (c + 1.0) * (c - 1.0))
            };
            let off = b2.sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut x: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    x.sort_by(|a, b| a.total_cmp(b));

    if n == 1 {
        return Ok((x, vec![1.0]));
    }
    let mut w = Vec::with_capacity(n);
    for xi in x.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = jacobi_with_derivative(n, alpha, beta, *xi);
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            let next = *xi - step;
            if next > -1.0 && next < 1.0 {
                *xi = next;
            }
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = jacobi_with_derivative(n, alpha, beta, *xi);
        w.push(1.0 / ((1.0 - *xi * *xi) * dp * dp));
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok((x, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `E[B^k]` for `B ~ Beta(a, b)`.
    fn beta_moment(a: f64, b: f64, k: u32) -> f64 {
        (0..k).map(|j| (a + j as f64) / (a + b + j as f64)).product()
    }

    #[test]
    fn weights_sum_to_one() {
        for (alpha, b) in [(0.0, 1.0), (1.0, 1.0), (2.5, 0.6), (-0.5, 2.0)] {
            let rule = QuadratureRule::beta_family(256, 1.0, alpha, b).unwrap();
            assert!((rule.total_mass() - 1.0).abs() < 1e-10);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!(rule.nodes.iter().all(|&s| s > 0.0 && s < 1.0));
        }
    }

    #[test]
    fn integrates_beta_moments_exactly() {
        for (alpha, b, l) in [(0.0, 1.0, 1.0), (1.0, 1.0, 2.0), (2.0, 0.5, 1.0), (-0.5, 3.0, 0.7)] {
            let nodes = 12;
            let rule = QuadratureRule::beta_family(nodes, l, alpha, b).unwrap();
            for k in 0..(2 * nodes as u32) {
                // E[(l − ξ²)^k] = l^k E[B^k] with B ~ Beta(alpha + 1, b)
                let exact = l.powi(k as i32) * beta_moment(alpha + 1.0, b, k);
                let got = rule.integrate(|s| (l - s).powi(k as i32));
                assert!(
                    (got - exact).abs() <= 1e-12 * exact.max(1e-300).max(1.0),
                    "alpha={alpha} b={b} k={k}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn large_rule_matches_moments() {
        let rule = QuadratureRule::beta_family(256, 1.0, 1.5, 2.0).unwrap();
        for k in 0..8 {
            let exact = beta_moment(2.5, 2.0, k);
            let got = rule.integrate(|s| (1.0 - s).powi(k as i32));
            assert!((got - exact).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(gauss_jacobi(8, -1.0, 0.0).is_err());
        assert!(gauss_jacobi(0, 0.0, 0.0).is_err());
    }

    #[test]
    fn legendre_nodes_known() {
        let (x, w) = gauss_jacobi(2, 0.0, 0.0).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15);
    }
}

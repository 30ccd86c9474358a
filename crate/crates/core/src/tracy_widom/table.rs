use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::airy::airy;
use super::ode::Dopri5;
use crate::stats;
use crate::{Error, Result};

pub const DEFAULT_S_MIN: f64 = -10.0;
pub const DEFAULT_S_MAX: f64 = 6.0;
pub const DEFAULT_STEP: f64 = 1e-3;

const RTOL: f64 = 1e-10;
const BLOW_UP: f64 = 1e3;

/// Hastings–McLeod solution and the GOE edge law F₁ tabulated on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TW1Table {
    pub s_grid: Vec<f64>,
    pub q_values: Vec<f64>,
    pub f1_values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    s: f64,
    q: f64,
    #[serde(rename = "F1")]
    f1: f64,
}

/// ∫ₓ^∞ Ai(t) dt by composite Simpson; Ai is below 1e-20 past x + 12.
fn airy_tail_integral(x: f64) -> f64 {
    let n = 24_000;
    let h = 12.0 / n as f64;
    let mut sum = airy(x).ai + airy(x + 12.0).ai;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * airy(x + i as f64 * h).ai;
    }
    sum * h / 3.0
}

/// State (q, q', I, J, K) with I = ∫ₛ^∞ q², J = ∫ₛ^∞ (x−s) q², K = ∫ₛ^∞ q.
fn rhs(s: f64, y: &[f64; 5]) -> [f64; 5] {
    let q = y[0];
    [y[1], s * q + 2.0 * q * q * q, -q * q, -y[2], -q]
}

pub fn build_table(s_min: f64, s_max: f64, step: f64) -> Result<TW1Table> {
    if !(s_min < -8.0 && s_max > 5.0) {
        return Err(Error::Domain(format!(
            "table range [{s_min}, {s_max}] must cover [-8, 5]"
        )));
    }
    if !(step > 0.0 && step < 0.1) {
        return Err(Error::Domain(format!("step {step} must lie in (0, 0.1)")));
    }
    let intervals = ((s_max - s_min) / step).round() as usize;
    let s_at = |k: usize| s_max - (intervals - k) as f64 * step;

    let a = airy(s_max);
    let s0 = s_max;
    let mut y = [
        a.ai,
        a.aip,
        a.aip * a.aip - s0 * a.ai * a.ai,
        2.0 / 3.0 * s0 * s0 * a.ai * a.ai - 2.0 / 3.0 * s0 * a.aip * a.aip - a.ai * a.aip / 3.0,
        airy_tail_integral(s0),
    ];

    let n = intervals + 1;
    let mut s_grid = vec![0.0; n];
    let mut q_values = vec![0.0; n];
    let mut f1_values = vec![0.0; n];
    let record = |k: usize, y: &[f64; 5], s_grid: &mut [f64], q: &mut [f64], f1: &mut [f64]| {
        s_grid[k] = s_at(k);
        q[k] = y[0];
        f1[k] = (-0.5 * (y[3] + y[4])).exp();
    };
    record(intervals, &y, &mut s_grid, &mut q_values, &mut f1_values);

    let mut solver = Dopri5::new(RTOL, 1e-30);
    for k in (0..intervals).rev() {
        let (from, to) = (s_at(k + 1), s_at(k));
        if !solver.advance(rhs, from, to, &mut y) || y[0].abs() > BLOW_UP {
            return Err(Error::IntegrationFailure { at: to });
        }
        record(k, &y, &mut s_grid, &mut q_values, &mut f1_values);
    }
    Ok(TW1Table { s_grid, q_values, f1_values })
}

pub fn default_table() -> Result<TW1Table> {
    build_table(DEFAULT_S_MIN, DEFAULT_S_MAX, DEFAULT_STEP)
}

impl TW1Table {
    pub fn s_min(&self) -> f64 {
        self.s_grid[0]
    }

    pub fn s_max(&self) -> f64 {
        self.s_grid[self.s_grid.len() - 1]
    }

    fn step(&self) -> f64 {
        (self.s_max() - self.s_min()) / (self.s_grid.len() - 1) as f64
    }

    /// Four-point cubic interpolation of `values`; clamped to the end values outside the grid.
    fn interpolate(&self, values: &[f64], s: f64) -> f64 {
        let n = values.len();
        if s <= self.s_min() {
            return values[0];
        }
        if s >= self.s_max() {
            return values[n - 1];
        }
        let h = self.step();
        let pos = (s - self.s_min()) / h;
        let i = (pos.floor() as usize).clamp(1, n - 3);
        let t = (s - self.s_grid[i]) / h;
        let (p0, p1, p2, p3) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
        // Lagrange basis on nodes -1, 0, 1, 2.
        -t * (t - 1.0) * (t - 2.0) / 6.0 * p0 + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * p1
            - (t + 1.0) * t * (t - 2.0) / 2.0 * p2
            + (t + 1.0) * t * (t - 1.0) / 6.0 * p3
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if s < self.s_min() {
            return 0.0;
        }
        if s > self.s_max() {
            return 1.0;
        }
        self.interpolate(&self.f1_values, s).clamp(0.0, 1.0)
    }

    pub fn q(&self, s: f64) -> f64 {
        self.interpolate(&self.q_values, s)
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
        }
        let (mut lo, mut hi) = (self.s_min(), self.s_max());
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn ks_distance(&self, samples: &[f64]) -> f64 {
        stats::ks_one_sample(samples, |s| self.cdf(s))
    }

    /// Mean and variance of F₁ by integration by parts with the trapezoid rule on the grid.
    pub fn moments(&self) -> (f64, f64) {
        let h = self.step();
        let n = self.s_grid.len();
        let trapezoid = |f: &dyn Fn(usize) -> f64| {
            let inner: f64 = (1..n - 1).map(f).sum();
            h * (inner + 0.5 * (f(0) + f(n - 1)))
        };
        let (a, b) = (self.s_min(), self.s_max());
        let (fa, fb) = (self.f1_values[0], self.f1_values[n - 1]);
        let int_f = trapezoid(&|k| self.f1_values[k]);
        let int_sf = trapezoid(&|k| self.s_grid[k] * self.f1_values[k]);
        let mean = b * fb - a * fa - int_f;
        let second = b * b * fb - a * a * fa - 2.0 * int_sf;
        (mean, second - mean * mean)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        for k in 0..self.s_grid.len() {
            out.serialize(Row { s: self.s_grid[k], q: self.q_values[k], f1: self.f1_values[k] })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let mut table = TW1Table { s_grid: vec![], q_values: vec![], f1_values: vec![] };
        for row in input.deserialize() {
            let row: Row = row?;
            table.s_grid.push(row.s);
            table.q_values.push(row.q);
            table.f1_values.push(row.f1);
        }
        if table.s_grid.len() < 4 {
            return Err(Error::InvalidState("table needs at least four rows".into()));
        }
        Ok(table)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::OnceLock;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::tracy_widom::airy::ai;

    fn table() -> &'static TW1Table {
        static TABLE: OnceLock<TW1Table> = OnceLock::new();
        TABLE.get_or_init(|| default_table().unwrap())
    }

    #[test]
    fn tail_integral_of_ai() {
        let k = airy_tail_integral(6.0);
        assert!((k / 3.881628094818942e-06 - 1.0).abs() < 1e-9, "{k}");
    }

    #[test]
    fn cdf_axioms() {
        let t = table();
        assert!(t.f1_values.windows(2).all(|w| w[1] >= w[0]));
        assert!(t.f1_values.iter().all(|f| (0.0..=1.0).contains(f)));
        assert!(t.f1_values[0] <= 1e-8);
        // 1 - F₁(s) ≈ ½∫ₛ^∞ Ai for large s, about 1.9e-6 at s = 6.
        let upper = 1.0 - t.f1_values[t.f1_values.len() - 1];
        assert!((upper / (0.5 * 3.881628094818942e-06) - 1.0).abs() < 1e-3, "{upper}");
        assert!(t.cdf(-10.0) <= 1e-6);
    }

    #[test]
    fn boundary_matches_airy() {
        let t = table();
        assert!((t.q(5.0) / ai(5.0) - 1.0).abs() < 1e-6);
        let idx = t.s_grid.iter().position(|&s| s >= -8.0).unwrap();
        assert!(t.q_values[idx..].iter().all(|&q| q > 0.0));
    }

    #[test]
    fn painleve_residual_small() {
        let t = table();
        let h = t.step();
        let mut worst: f64 = 0.0;
        for k in 1..t.s_grid.len() - 1 {
            let s = t.s_grid[k];
            if !(-8.0..=4.0).contains(&s) {
                continue;
            }
            let q = t.q_values[k];
            let qpp = (t.q_values[k + 1] - 2.0 * q + t.q_values[k - 1]) / (h * h);
            worst = worst.max((qpp - s * q - 2.0 * q * q * q).abs());
        }
        assert!(worst <= 1e-6, "residual {worst}");
    }

    #[test]
    fn mean_and_variance() {
        let (mean, var) = table().moments();
        assert!((mean + 1.2065).abs() < 0.002, "mean {mean}");
        assert!((var - 1.6078).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn upper_tail_envelope() {
        let t = table();
        for k in 0..=20 {
            let s = 3.0 + 0.1 * k as f64;
            assert!(1.0 - t.cdf(s) <= (-s.powf(1.5) / 2.0).exp());
        }
    }

    #[test]
    fn grid_refinement() {
        let coarse = table();
        let fine = build_table(DEFAULT_S_MIN, DEFAULT_S_MAX, DEFAULT_STEP / 2.0).unwrap();
        let worst = coarse
            .s_grid
            .iter()
            .zip(&coarse.f1_values)
            .enumerate()
            .map(|(k, (_, f))| (fine.f1_values[2 * k] - f).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "max change {worst}");
    }

    #[test]
    fn quantile_inverts_cdf() {
        let t = table();
        assert!(t.quantile(t.cdf(0.0)).unwrap().abs() < 1e-6);
        for u in [0.01, 0.1, 0.5, 0.9, 0.99] {
            assert!((t.cdf(t.quantile(u).unwrap()) - u).abs() < 1e-6);
        }
        assert!((t.quantile(0.95).unwrap() - 0.98).abs() < 0.02);
        assert!(matches!(t.quantile(0.0), Err(Error::Domain(_))));
        assert!(matches!(t.quantile(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ks_self_tests() {
        let t = table();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<f64> =
            (0..10_000).map(|_| t.quantile(rng.random_range(1e-12..1.0)).unwrap()).collect();
        assert!(t.ks_distance(&draws) <= 0.02);
        let shifted: Vec<f64> = draws.iter().map(|s| s + 1.0).collect();
        assert!(t.ks_distance(&shifted) >= 0.2);
        let f0 = t.cdf(0.0);
        let constant = vec![0.0; 50];
        assert!((t.ks_distance(&constant) - f0.max(1.0 - f0)).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = build_table(-8.5, 5.5, 1e-2).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"s,q,F1\n"));
        let back = TW1Table::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_short_range() {
        assert!(matches!(build_table(-5.0, 6.0, 1e-3), Err(Error::Domain(_))));
    }
}

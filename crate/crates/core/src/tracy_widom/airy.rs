//! Airy functions Ai, Ai', Bi, Bi' on the real line.
//!
//! Maclaurin series near the origin, the Poincaré asymptotic expansions far
//! out, and for Ai on the positive axis a Taylor continuation of the Airy
//! equation from x = 9 where the asymptotic expansion is exact to rounding.
//! The continuation sidesteps the cancellation that ruins the Maclaurin series
//! of Ai once Bi dominates, which matters because the Hastings–McLeod branch
//! is sensitive to relative errors in the boundary data.

use std::f64::consts::PI;

const C1: f64 = 0.355_028_053_887_817_239;
const C2: f64 = 0.258_819_403_792_806_798;

const ASYMPTOTIC_POSITIVE: f64 = 9.0;
const ASYMPTOTIC_NEGATIVE: f64 = -7.0;
const SERIES_AI_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Airy {
    pub ai: f64,
    pub aip: f64,
    pub bi: f64,
    pub bip: f64,
}

impl Airy {
    pub fn wronskian(&self) -> f64 {
        self.ai * self.bip - self.aip * self.bi
    }
}

pub fn airy(x: f64) -> Airy {
    if x >= ASYMPTOTIC_POSITIVE {
        asymptotic_positive(x)
    } else if x <= ASYMPTOTIC_NEGATIVE {
        asymptotic_negative(-x)
    } else {
        let (ai, aip, bi, bip) = maclaurin(x);
        if x > SERIES_AI_MAX {
            let start = asymptotic_positive(ASYMPTOTIC_POSITIVE);
            let (ai, aip) = taylor_continue(ASYMPTOTIC_POSITIVE, start.ai, start.aip, x);
            Airy { ai, aip, bi, bip }
        } else {
            Airy { ai, aip, bi, bip }
        }
    }
}

pub fn ai(x: f64) -> f64 {
    airy(x).ai
}

fn maclaurin(x: f64) -> (f64, f64, f64, f64) {
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut fp, mut gp) = (0.0, 1.0);
    let (mut tf, mut tg) = (1.0, x);
    let (mut tfp, mut tgp) = (x * x / 2.0, 1.0);
    fp += tfp;
    for k in 1..200 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        if k > 1 {
            tfp *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf - 3.0));
            fp += tfp;
        }
        tgp *= x3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        f += tf;
        g += tg;
        gp += tgp;
        let scale = f.abs() + g.abs() + fp.abs() + gp.abs();
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() <= 1e-18 * scale {
            break;
        }
    }
    let s3 = 3f64.sqrt();
    (
        C1 * f - C2 * g,
        C1 * fp - C2 * gp,
        s3 * (C1 * f + C2 * g),
        s3 * (C1 * fp + C2 * gp),
    )
}

/// Power series of the solution of y'' = x y about `x0`, evaluated at `x`.
fn taylor_continue(x0: f64, y0: f64, yp0: f64, x: f64) -> (f64, f64) {
    let h = x - x0;
    // c[k] h^k stored directly to keep magnitudes in range.
    let mut prev2 = 0.0; // c_{k-1} h^{k-1}
    let mut prev1 = y0; // c_k h^k at k = 0
    let mut cur = yp0 * h; // k = 1
    let mut y = prev1 + cur;
    let mut yp = yp0;
    let mut quiet = 0;
    for k in 0..2000 {
        let kf = k as f64;
        // c_{k+2} = (x0 c_k + c_{k-1}) / ((k+2)(k+1))
        let next = (x0 * prev1 * h * h + prev2 * h * h * h) / ((kf + 2.0) * (kf + 1.0));
        y += next;
        yp += (kf + 2.0) * next / h;
        prev2 = prev1;
        prev1 = cur;
        cur = next;
        if next.abs() <= 1e-18 * y.abs() && (kf + 2.0) * next.abs() <= 1e-18 * (yp * h).abs() {
            quiet += 1;
            if quiet > 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    (y, yp)
}

fn asymptotic_coefficients(zeta: f64) -> (Vec<f64>, Vec<f64>) {
    // u_k / zeta^k and v_k / zeta^k, truncated at the smallest term.
    let mut u = vec![1.0];
    let mut v = vec![1.0];
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let uk = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf * zeta);
        let vk = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk;
        let size = uk.abs().max(vk.abs());
        if size >= last || size < 1e-18 {
            break;
        }
        last = size;
        u.push(uk);
        v.push(vk);
    }
    (u, v)
}

fn asymptotic_positive(x: f64) -> Airy {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (u, v) = asymptotic_coefficients(zeta);
    let alt = |c: &[f64]| {
        c.iter()
            .enumerate()
            .map(|(k, t)| if k % 2 == 0 { *t } else { -*t })
            .sum::<f64>()
    };
    let q = x.powf(0.25);
    let decay = (-zeta).exp() / (2.0 * PI.sqrt());
    let grow = zeta.exp() / PI.sqrt();
    Airy {
        ai: decay / q * alt(&u),
        aip: -q * decay * alt(&v),
        bi: grow / q * u.iter().sum::<f64>(),
        bip: q * grow * v.iter().sum::<f64>(),
    }
}

fn asymptotic_negative(t: f64) -> Airy {
    let zeta = 2.0 / 3.0 * t.powf(1.5);
    let (u, v) = asymptotic_coefficients(zeta);
    let split = |c: &[f64]| {
        let (mut even, mut odd) = (0.0, 0.0);
        for (k, term) in c.iter().enumerate() {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                even += sign * term;
            } else {
                odd += sign * term;
            }
        }
        (even, odd)
    };
    let (p, q) = split(&u);
    let (r, s) = split(&v);
    let theta = zeta + PI / 4.0;
    let (sin, cos) = theta.sin_cos();
    let quarter = t.powf(0.25);
    let norm = PI.sqrt();
    Airy {
        ai: (sin * p - cos * q) / (quarter * norm),
        aip: -quarter * (cos * r + sin * s) / norm,
        bi: (cos * p + sin * q) / (quarter * norm),
        bip: quarter * (sin * r - cos * s) / norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // (x, Ai, Ai', Bi, Bi') from a reference implementation.
    const REFERENCE: [(f64, f64, f64, f64, f64); 10] = [
        (-8.0, -0.05270505035638643, 0.9355609381983064, -0.33125158075113775, -0.15945049781298207),
        (-5.0, 0.3507610090241142, 0.3271928185544436, -0.13836913490160083, 0.778411773001899),
        (-2.5, -0.11232506769296623, 0.6788527342647943, -0.43242247184070526, -0.2204201548746298),
        (-2.0, 0.22740742820168564, 0.618259020741691, -0.4123025879563985, 0.27879516692116973),
        (0.0, 0.3550280538878172, -0.2588194037928068, 0.6149266274460007, 0.4482883573538264),
        (1.0, 0.13529241631288147, -0.15914744129679328, 1.2074235949528715, 0.9324359333927756),
        (2.5, 0.015725923380470484, -0.02625088103590323, 6.481660738460578, 9.421423317334302),
        (5.0, 0.00010834442813607433, -0.0002474138908684623, 657.7920441711713, 1435.8190802179822),
        (5.5, 3.368531190859981e-05, -8.046339130556513e-05, 2016.580038659531, 4632.5537331390415),
        (6.0, 9.947694360252897e-06, -2.4765200397034972e-05, 6536.446104809864, 15725.602621930475),
    ];

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn matches_reference_values() {
        for &(x, ai, aip, bi, bip) in &REFERENCE {
            let got = airy(x);
            let tol = if x < 0.0 { 1e-9 } else { 1e-12 };
            assert!(rel(got.ai, ai) < tol, "Ai({x}) = {} vs {ai}", got.ai);
            assert!(rel(got.aip, aip) < tol, "Ai'({x}) = {} vs {aip}", got.aip);
            assert!(rel(got.bi, bi) < tol, "Bi({x}) = {} vs {bi}", got.bi);
            assert!(rel(got.bip, bip) < tol, "Bi'({x}) = {} vs {bip}", got.bip);
        }
    }

    #[test]
    fn wronskian_is_one_over_pi() {
        let mut x = -12.0;
        while x <= 12.0 {
            let w = airy(x).wronskian();
            assert!((w * PI - 1.0).abs() < 1e-9, "W({x}) = {w}");
            x += 0.173;
        }
    }

    #[test]
    fn continuous_across_switchovers() {
        for x0 in [ASYMPTOTIC_NEGATIVE, SERIES_AI_MAX, ASYMPTOTIC_POSITIVE] {
            let (a, b) = (airy(x0 - 1e-9), airy(x0 + 1e-9));
            assert!(rel(a.ai, b.ai) < 1e-8, "Ai jump at {x0}");
            assert!(rel(a.bi, b.bi) < 1e-8, "Bi jump at {x0}");
        }
    }
}

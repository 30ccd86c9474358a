//! Adaptive Dormand–Prince 5(4) integrator for small autonomous-in-size systems.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    h: f64,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, h: 0.0 }
    }

    /// Advances `y` from `t0` to `t1` (either direction). Returns false if the
    /// step size collapses or the state stops being finite.
    pub fn advance<const N: usize>(
        &mut self,
        f: impl Fn(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        t1: f64,
        y: &mut [f64; N],
    ) -> bool {
        let span = t1 - t0;
        if span == 0.0 {
            return true;
        }
        let dir = span.signum();
        if self.h == 0.0 || self.h.signum() != dir {
            self.h = dir * span.abs().min(1e-3);
        }
        let mut t = t0;
        let mut k = [[0.0; N]; 7];
        while (t1 - t) * dir > 0.0 {
            let mut h = self.h;
            let last = (t + h - t1) * dir >= 0.0;
            if last {
                h = t1 - t;
            }
            k[0] = f(t, y);
            for s in 1..7 {
                let mut ys = *y;
                for (i, v) in ys.iter_mut().enumerate() {
                    for (j, kj) in k.iter().enumerate().take(s) {
                        *v += h * A[s][j] * kj[i];
                    }
                }
                k[s] = f(t + C[s] * h, &ys);
            }
            let mut next = *y;
            let mut err: f64 = 0.0;
            for i in 0..N {
                let (mut hi, mut lo) = (0.0, 0.0);
                for s in 0..7 {
                    hi += B5[s] * k[s][i];
                    lo += B4[s] * k[s][i];
                }
                next[i] += h * hi;
                let scale = self.atol + self.rtol * y[i].abs().max(next[i].abs());
                err = err.max((h * (hi - lo)).abs() / scale);
            }
            if !next.iter().all(|v| v.is_finite()) {
                return false;
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                *y = next;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let proposed = h * factor;
            if !(last && err <= 1.0) {
                self.h = proposed;
            } else if proposed.abs() > self.h.abs() {
                self.h = proposed;
            }
            if self.h.abs() < 1e-14 * t.abs().max(1.0) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut solver = Dopri5::new(1e-12, 1e-14);
        let mut y = [1.0];
        assert!(solver.advance(|_, y| [-y[0]], 0.0, 2.0, &mut y));
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let mut solver = Dopri5::new(1e-11, 1e-13);
        let mut y = [0.0, 1.0];
        let mut t = 0.0;
        for _ in 0..100 {
            assert!(solver.advance(|_, y| [y[1], -y[0]], t, t - 0.05, &mut y));
            t -= 0.05;
        }
        assert!((y[0] - t.sin()).abs() < 1e-9);
        assert!((y[1] - t.cos()).abs() < 1e-9);
    }
}

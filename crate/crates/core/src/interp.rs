//! Interpolation on monotone tables and periodic uniform grids.

use num_complex::Complex64 as C64;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` strictly increasing, `y` monotone. Returns `None` otherwise.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Option<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] <= 0.0 {
                d[k] = 0.0;
            } else {
                // weighted harmonic mean
                let h0 = x[k] - x[k - 1];
                let h1 = x[k + 1] - x[k];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        Some(MonotoneCubic { x, y, d })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }
}

/// Local cubic Lagrange interpolation of periodic samples on a uniform grid.
/// Stencils never straddle a breakpoint node, so functions with kinks at
/// corners are reproduced piecewise.
#[derive(Debug, Clone)]
pub struct PeriodicSamples<'a> {
    values: &'a [C64],
    period: f64,
    breaks: Vec<usize>,
}

impl<'a> PeriodicSamples<'a> {
    pub fn new(values: &'a [C64], period: f64, breaks: &[usize]) -> Self {
        let mut b = breaks.to_vec();
        b.sort_unstable();
        b.dedup();
        PeriodicSamples { values, period, breaks: b }
    }

    /// Value at parameter `sigma` (periodic).
    pub fn eval(&self, sigma: f64) -> C64 {
        let n = self.values.len() as i64;
        let h = self.period / n as f64;
        let s = sigma.rem_euclid(self.period) / h;
        let k = (s.floor() as i64).min(n - 1);
        let frac = s - k as f64;
        // segment [lo, hi] (unwrapped indices) containing [k, k+1]
        let (lo, hi) = if self.breaks.is_empty() {
            (i64::MIN / 4, i64::MAX / 4)
        } else {
            let nb = self.breaks.len();
            let p = self.breaks.partition_point(|&b| (b as i64) <= k);
            let lo = if p == 0 { self.breaks[nb - 1] as i64 - n } else { self.breaks[p - 1] as i64 };
            let hi = if p == nb { self.breaks[0] as i64 + n } else { self.breaks[p] as i64 };
            (lo, hi)
        };
        let span = hi - lo;
        let (start, count) = if span >= 3 {
            ((k - 1).clamp(lo, hi - 3), 4)
        } else {
            (lo.max(k), (span + 1).min(2))
        };
        let x = k as f64 + frac;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..count {
            let xi = (start + i) as f64;
            let mut l = 1.0;
            for j in 0..count {
                if j != i {
                    let xj = (start + j) as f64;
                    l *= (x - xj) / (xi - xj);
                }
            }
            acc += self.values[(start + i).rem_euclid(n) as usize] * l;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn monotone_cubic_reproduces_linear_and_stays_monotone() {
        let x: Vec<f64> = (0..10).map(|k| (k * k) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = MonotoneCubic::new(x, y).unwrap();
        assert!((m.eval(7.3) - 15.6).abs() < 1e-12);
        let xs: Vec<f64> = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.0, 1.0, 1.0, 5.0];
        let m = MonotoneCubic::new(xs, ys).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let v = m.eval(k as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn periodic_cubic_is_exact_on_piecewise_linear_with_breaks() {
        // triangle wave with kinks at nodes 0 and 8 of 16
        let n = 16;
        let f = |s: f64| if s <= 8.0 { s } else { 16.0 - s };
        let vals: Vec<C64> = (0..n).map(|k| C64::new(f(k as f64), 0.0)).collect();
        let p = PeriodicSamples::new(&vals, 16.0, &[0, 8]);
        for j in 0..160 {
            let s = j as f64 / 10.0;
            assert!((p.eval(s).re - f(s)).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn periodic_cubic_fourth_order_on_smooth() {
        let err = |n: usize| {
            let vals: Vec<C64> = (0..n).map(|k| C64::new((2.0 * std::f64::consts::PI * k as f64 / n as f64).sin(), 0.0)).collect();
            let p = PeriodicSamples::new(&vals, 1.0, &[]);
            (0..97).map(|j| {
                let s = j as f64 / 97.0;
                (p.eval(s).re - (2.0 * std::f64::consts::PI * s).sin()).abs()
            }).fold(0.0, f64::max)
        };
        assert!(err(64) / err(128) > 12.0);
    }

    proptest! {
        #[test]
        fn monotone_cubic_interpolates_nodes(ys in prop::collection::vec(0.0f64..1.0, 3..20)) {
            let mut acc = 0.0;
            let y: Vec<f64> = ys.iter().map(|v| { acc += v; acc }).collect();
            let x: Vec<f64> = (0..y.len()).map(|k| k as f64).collect();
            let m = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
            for k in 0..x.len() {
                prop_assert!((m.eval(x[k]) - y[k]).abs() < 1e-12);
            }
        }
    }
}

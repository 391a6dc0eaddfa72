//! Fourier machinery on the unit circle.
//!
//! Coefficients follow `ĉ(n) = (1/N) Σ_k f_k e^{-i n t_k}` with `t_k = 2πk/N`
//! and modes `n ∈ [-N/2, N/2)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::quadrature::{beta, endpoint_power_rule, gauss_legendre};

/// Discrete Fourier coefficients stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    coeffs: Vec<C64>,
}

/// Side of the unit circle for harmonic extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Interior,
    Exterior,
}

/// Weight tables indexed by `n = 0..=n_max` (all weights are even in `n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralWeights {
    pub s: f64,
    /// Circle Douglas weights `W(n,s)`; empty when not requested.
    pub douglas_w: Vec<f64>,
    pub disk_interior_w: Vec<f64>,
    /// `+∞` for modes listed in `divergent_modes`.
    pub disk_exterior_w: Vec<f64>,
    pub divergent_modes: Vec<i64>,
}

fn fft_forward(samples: &[C64]) -> Vec<C64> {
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn fft_inverse(coeffs: &[C64]) -> Vec<C64> {
    let mut buf = coeffs.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

impl FourierSeries {
    /// Builds a series of length `n` from `(mode, coefficient)` pairs.
    pub fn from_modes(n: usize, modes: &[(i64, C64)]) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!("series length {n} must be even and ≥ 4")));
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for &(m, c) in modes {
            if m < -(n as i64) / 2 || m >= n as i64 / 2 {
                return Err(Error::InvalidInput(format!("mode {m} outside [-{0}, {0})", n / 2)));
            }
            coeffs[m.rem_euclid(n as i64) as usize] += c;
        }
        Ok(FourierSeries { coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Mode number of storage slot `k`.
    pub fn mode_of(&self, k: usize) -> i64 {
        let n = self.coeffs.len();
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// `ĉ(m)`, zero outside the stored band.
    pub fn coeff(&self, m: i64) -> C64 {
        let n = self.coeffs.len() as i64;
        if m < -n / 2 || m >= n / 2 {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[m.rem_euclid(n) as usize]
    }

    /// Iterator over `(mode, coefficient)`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(k, &c)| (self.mode_of(k), c))
    }

    /// Raw coefficients in FFT order.
    pub fn raw(&self) -> &[C64] {
        &self.coeffs
    }

    /// Values at `t_k = 2πk/N`.
    pub fn synthesize(&self) -> Vec<C64> {
        fft_inverse(&self.coeffs)
    }

    /// Trigonometric polynomial value at angle `theta`.
    pub fn eval(&self, theta: f64) -> C64 {
        let n = self.coeffs.len();
        let base = C64::from_polar(1.0, theta);
        let mut acc = self.coeffs[0];
        let (mut up, mut down) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        for m in 1..=n / 2 {
            up *= base;
            down *= base.conj();
            if m < n - m {
                acc += self.coeffs[m] * up + self.coeffs[n - m] * down;
            } else {
                acc += self.coeffs[m] * down;
            }
        }
        acc
    }

    /// Applies a per-mode multiplier.
    pub fn map_modes(&self, f: impl Fn(i64, C64) -> C64) -> FourierSeries {
        FourierSeries { coeffs: self.coeffs.iter().enumerate().map(|(k, &c)| f(self.mode_of(k), c)).collect() }
    }

    /// Zero-padded (or truncated) copy with `m` coefficients.
    pub fn resized(&self, m: usize) -> FourierSeries {
        let mut coeffs = vec![C64::new(0.0, 0.0); m];
        for (mode, c) in self.modes() {
            if mode >= -(m as i64) / 2 && mode < m as i64 / 2 {
                coeffs[mode.rem_euclid(m as i64) as usize] = c;
            }
        }
        FourierSeries { coeffs }
    }

    /// Same series with the mean removed.
    pub fn mean_zero(&self) -> FourierSeries {
        self.map_modes(|m, c| if m == 0 { C64::new(0.0, 0.0) } else { c })
    }

    /// Derivative in the angle variable.
    pub fn derivative(&self) -> FourierSeries {
        self.map_modes(|m, c| c * C64::new(0.0, m as f64))
    }

    /// `Σ |ĉ(n)|²`.
    pub fn l2_sq(&self) -> f64 {
        exec::pairwise_sum(&self.coeffs.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>())
    }
}

/// Discrete Fourier analysis of equispaced samples.
pub fn analyze(samples: &[C64]) -> Result<FourierSeries> {
    let n = samples.len();
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!("sample count {n} must be even and ≥ 4")));
    }
    let inv = 1.0 / n as f64;
    Ok(FourierSeries { coeffs: fft_forward(samples).into_iter().map(|c| c * inv).collect() })
}

/// Analysis of real samples.
pub fn analyze_real(samples: &[f64]) -> Result<FourierSeries> {
    analyze(&samples.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
}

fn check_s_closed(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1]")));
    }
    Ok(())
}

fn check_s_open(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} outside (0, 1)")));
    }
    Ok(())
}

/// `Σ_{n≠0} |n|^{2s} |ĉ(n)|²`.
pub fn hs_norm_fourier(series: &FourierSeries, s: f64) -> Result<f64> {
    check_s_closed(s)?;
    let terms: Vec<f64> = series
        .modes()
        .map(|(m, c)| if m == 0 { 0.0 } else { (m.unsigned_abs() as f64).powf(2.0 * s) * c.norm_sqr() })
        .collect();
    Ok(exec::pairwise_sum(&terms))
}

/// Conjugate-function multiplier `-i sgn(n)`. The Nyquist mode `-N/2` is
/// treated as a negative frequency so that `H∘H = -I` on mean-zero series.
pub fn hilbert_transform(series: &FourierSeries) -> FourierSeries {
    series.map_modes(|m, c| match m.signum() {
        1 => c * C64::new(0.0, -1.0),
        -1 => c * C64::new(0.0, 1.0),
        _ => C64::new(0.0, 0.0),
    })
}

/// Harmonic extension of the series off the unit circle.
pub fn poisson_eval(series: &FourierSeries, r: f64, theta: f64, side: Side) -> Result<C64> {
    match side {
        Side::Interior if !(0.0..1.0).contains(&r) => {
            return Err(Error::InvalidParameter(format!("interior radius {r} not in [0, 1)")))
        }
        Side::Exterior if !(r > 1.0) => return Err(Error::InvalidParameter(format!("exterior radius {r} not > 1"))),
        _ => {}
    }
    let rho = if side == Side::Interior { r } else { 1.0 / r };
    Ok(series
        .modes()
        .filter(|(_, c)| *c != C64::new(0.0, 0.0))
        .map(|(m, c)| c * rho.powi(m.unsigned_abs() as i32) * C64::from_polar(1.0, m as f64 * theta))
        .sum())
}

/// Gradient `(u_x, u_y)` of the interior or exterior Poisson extension, each
/// component complex (the extension of complex data is complex).
pub fn poisson_gradient(series: &FourierSeries, z: C64, side: Side) -> (C64, C64) {
    // u = Σ c_n z^n (n ≥ 0) + Σ c_n z̄^{|n|} (n < 0) inside;
    // outside the roles of z and 1/z̄ swap.
    let mut dz = C64::new(0.0, 0.0);
    let mut dzbar = C64::new(0.0, 0.0);
    for (m, c) in series.modes() {
        if m == 0 || c == C64::new(0.0, 0.0) {
            continue;
        }
        let k = m.unsigned_abs() as i32;
        let kf = k as f64;
        match (side, m > 0) {
            (Side::Interior, true) => dz += c * kf * z.powi(k - 1),
            (Side::Interior, false) => dzbar += c * kf * z.conj().powi(k - 1),
            // c (1/z̄)^k: ∂̄ = -k c z̄^{-k-1}
            (Side::Exterior, true) => dzbar += -c * kf * z.conj().powi(-k - 1),
            (Side::Exterior, false) => dz += -c * kf * z.powi(-k - 1),
        }
    }
    // u_x = ∂u + ∂̄u, u_y = i(∂u − ∂̄u)
    (dz + dzbar, C64::i() * (dz - dzbar))
}

/// `w_i(n,s) = 2π n² B(|n|, 2−2s)`.
pub fn interior_weight(n: i64, s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1)")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let nf = n.unsigned_abs() as f64;
    Ok(2.0 * PI * nf * nf * beta(nf, 2.0 - 2.0 * s))
}

/// `w_e(n,s) = 2π n² B(|n|+2s−1, 2−2s)`.
pub fn exterior_weight(n: i64, s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1)")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let nf = n.unsigned_abs() as f64;
    let a = nf + 2.0 * s - 1.0;
    if a <= 0.0 {
        return Err(Error::DivergentWeight { mode: n, s });
    }
    Ok(2.0 * PI * nf * nf * beta(a, 2.0 - 2.0 * s))
}

/// Interior and exterior Littlewood–Paley weights for `n = 0..=n_max`.
pub fn disk_energy_weights(n_max: usize, s: f64) -> Result<SpectralWeights> {
    let mut interior = Vec::with_capacity(n_max + 1);
    let mut exterior = Vec::with_capacity(n_max + 1);
    let mut divergent = Vec::new();
    for n in 0..=n_max as i64 {
        interior.push(interior_weight(n, s)?);
        match exterior_weight(n, s) {
            Ok(w) => exterior.push(w),
            Err(Error::DivergentWeight { mode, .. }) => {
                exterior.push(f64::INFINITY);
                divergent.push(mode);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SpectralWeights { s, douglas_w: vec![], disk_interior_w: interior, disk_exterior_w: exterior, divergent_modes: divergent })
}

/// Absolute tolerance of the Douglas weight quadrature.
pub const DOUGLAS_TOL: f64 = 1e-9;

/// `W(n,s) = ∫_0^{2π} |e^{inθ}−1|² / |e^{iθ}−1|^{1+2s} dθ`.
///
/// The integrand is symmetric about π and behaves like `n² θ^{1−2s}` at 0; the
/// first panel uses a Gauss–Jacobi rule for that power, the rest composite
/// Gauss–Legendre, doubling panels until two passes agree to [`DOUGLAS_TOL`].
pub fn douglas_weight(n: i64, s: f64) -> Result<f64> {
    check_s_open(s)?;
    if n == 0 {
        return Ok(0.0);
    }
    let nf = n.unsigned_abs() as f64;
    let p = 1.0 - 2.0 * s;
    // smooth factor after pulling out θ^{1−2s}
    let g = |t: f64| {
        let half = 0.5 * t;
        let num = (nf * half).sin();
        let sinc_ratio = half / half.sin();
        4.0 * num * num / (t * t) * sinc_ratio.powf(1.0 + 2.0 * s)
    };
    let full = |t: f64| {
        let num = (nf * 0.5 * t).sin();
        4.0 * num * num / (2.0 * (0.5 * t).sin()).powf(1.0 + 2.0 * s)
    };
    let gl = gauss_legendre(20);
    let integrate = |panels: usize| -> f64 {
        let h = PI / panels as f64;
        let mut parts = Vec::with_capacity(panels);
        parts.push(endpoint_power_rule(20, p, h).iter().map(|&(x, w)| w * g(x)).sum::<f64>());
        for k in 1..panels {
            let a = h * k as f64;
            parts.push(gl.mapped(a, a + h).map(|(x, w)| w * full(x)).sum::<f64>());
        }
        2.0 * exec::pairwise_sum(&parts)
    };
    let mut panels = (2 * n.unsigned_abs() as usize).max(4);
    let mut prev = integrate(panels);
    let mut diff = f64::INFINITY;
    for _ in 0..10 {
        panels *= 2;
        let cur = integrate(panels);
        diff = (cur - prev).abs();
        prev = cur;
        if diff < DOUGLAS_TOL {
            return Ok(cur);
        }
    }
    Err(Error::QuadratureFailure { achieved: diff, wanted: DOUGLAS_TOL })
}

/// All three weight families for `n = 0..=n_max`.
pub fn douglas_weights_circle(n_max: usize, s: f64) -> Result<SpectralWeights> {
    check_s_open(s)?;
    let w: Vec<Result<f64>> = exec::map_range(n_max + 1, |n| douglas_weight(n as i64, s));
    let mut out = disk_energy_weights(n_max, s)?;
    out.douglas_w = w.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(out)
}

/// Circle Douglas norm `2π Σ |ĉ(n)|² W(n,s)`.
pub fn circle_douglas_norm(series: &FourierSeries, s: f64) -> Result<f64> {
    let mut terms = Vec::new();
    for (m, c) in series.modes() {
        if m != 0 && c.norm_sqr() > 0.0 {
            terms.push(c.norm_sqr() * douglas_weight(m, s)?);
        }
    }
    Ok(2.0 * PI * exec::pairwise_sum(&terms))
}

/// Interior Littlewood–Paley energy `Σ |ĉ(n)|² w_i(n,s)`.
pub fn interior_energy(series: &FourierSeries, s: f64) -> Result<f64> {
    let mut terms = Vec::new();
    for (m, c) in series.modes() {
        terms.push(c.norm_sqr() * interior_weight(m, s)?);
    }
    Ok(exec::pairwise_sum(&terms))
}

/// Exterior Littlewood–Paley energy `Σ |ĉ(n)|² w_e(n,s)`.
pub fn exterior_energy(series: &FourierSeries, s: f64) -> Result<f64> {
    let mut terms = Vec::new();
    for (m, c) in series.modes() {
        if c.norm_sqr() > 0.0 {
            terms.push(c.norm_sqr() * exterior_weight(m, s)?);
        }
    }
    Ok(exec::pairwise_sum(&terms))
}

/// Littlewood–Paley g-function `(∫_0^1 (1−r)|f′(re^{iθ})|² dr)^{1/2}` of the
/// holomorphic part (modes `n ≥ 1`).
pub fn g_function(series: &FourierSeries, theta: f64) -> f64 {
    let nodes = series.len().max(256);
    let rule = gauss_legendre(nodes);
    let modes: Vec<(i64, C64)> = series.modes().filter(|&(m, c)| m > 0 && c != C64::new(0.0, 0.0)).collect();
    if modes.is_empty() {
        return 0.0;
    }
    let terms: Vec<f64> = rule
        .mapped(0.0, 1.0)
        .map(|(r, w)| {
            let z = C64::from_polar(r, theta);
            let d: C64 = modes.iter().map(|&(m, c)| c * m as f64 * z.powi(m as i32 - 1)).sum();
            w * (1.0 - r) * d.norm_sqr()
        })
        .collect();
    exec::pairwise_sum(&terms).sqrt()
}

/// Spectral derivative of periodic samples over a period of length `period`.
pub fn spectral_derivative(samples: &[C64], period: f64) -> Result<Vec<C64>> {
    let series = analyze(samples)?;
    let n = samples.len();
    let scale = 2.0 * PI / period;
    // the Nyquist mode has no well-defined derivative; drop it
    let d = series.map_modes(|m, c| if m == -(n as i64) / 2 { C64::new(0.0, 0.0) } else { c * C64::new(0.0, m as f64 * scale) });
    Ok(d.synthesize())
}

/// Dense spectral differentiation matrix `D` on `n` equispaced nodes of a
/// period of length `period` (even `n`, Nyquist mode dropped).
pub fn spectral_diff_matrix(n: usize, period: f64) -> Vec<f64> {
    // D_kj = d(k-j) with d(0)=0, d(m) = (π/L)(-1)^m cot(π m / n) · (2π/L)/(2π/L)
    let h = 2.0 * PI / n as f64;
    let scale = 2.0 * PI / period;
    let col: Vec<f64> = (0..n)
        .map(|m| {
            if m == 0 {
                0.0
            } else {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                0.5 * sign / (0.5 * h * m as f64).tan() * scale
            }
        })
        .collect();
    let mut d = vec![0.0; n * n];
    for k in 0..n {
        for j in 0..n {
            d[k * n + j] = col[(k + n - j) % n];
        }
    }
    d
}

/// Weight table as CSV rows `n,W,w_i,w_e`.
pub fn weights_csv(w: &SpectralWeights) -> String {
    let mut out = String::from("n,W,w_i,w_e\n");
    for n in 0..w.disk_interior_w.len() {
        let big_w = w.douglas_w.get(n).copied().unwrap_or(f64::NAN);
        out.push_str(&format!("{n},{big_w:.12e},{:.12e},{:.12e}\n", w.disk_interior_w[n], w.disk_exterior_w[n]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn samples(n: usize, f: impl Fn(f64) -> C64) -> Vec<C64> {
        (0..n).map(|k| f(2.0 * PI * k as f64 / n as f64)).collect()
    }

    #[test]
    fn analyze_basic_modes() {
        let s = analyze(&samples(8, |t| C64::from_polar(1.0, t))).unwrap();
        for m in -4..4 {
            let expect = if m == 1 { 1.0 } else { 0.0 };
            assert!((s.coeff(m) - expect).norm() < 1e-14);
        }
        let c = analyze(&samples(8, |_| C64::new(1.0, 0.0))).unwrap();
        assert!((c.coeff(0) - 1.0).norm() < 1e-15);
        let cs = analyze(&samples(8, |t| C64::new(t.cos(), 0.0))).unwrap();
        assert!((cs.coeff(1) - 0.5).norm() < 1e-15 && (cs.coeff(-1) - 0.5).norm() < 1e-15);
        assert!(analyze(&samples(7, |_| C64::new(1.0, 0.0))).is_err());
    }

    #[test]
    fn hs_norm_examples() {
        let e1 = analyze(&samples(16, |t| C64::from_polar(1.0, t))).unwrap();
        for s in [0.0, 0.3, 1.0] {
            assert_relative_eq!(hs_norm_fourier(&e1, s).unwrap(), 1.0, epsilon = 1e-13);
        }
        let e3 = analyze(&samples(16, |t| C64::from_polar(1.0, 3.0 * t))).unwrap();
        assert_relative_eq!(hs_norm_fourier(&e3, 0.5).unwrap(), 3.0, epsilon = 1e-13);
        let e12 = analyze(&samples(16, |t| C64::from_polar(1.0, t) + C64::from_polar(1.0, 2.0 * t))).unwrap();
        assert_relative_eq!(hs_norm_fourier(&e12, 0.25).unwrap(), 1.0 + 2f64.sqrt(), epsilon = 1e-13);
        assert!(matches!(hs_norm_fourier(&e1, 1.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn hilbert_examples() {
        let c = analyze(&samples(16, |t| C64::new(t.cos(), 0.0))).unwrap();
        let h = hilbert_transform(&c).synthesize();
        for (k, v) in h.iter().enumerate() {
            assert!((v - (2.0 * PI * k as f64 / 16.0).sin()).norm() < 1e-14);
        }
        let one = analyze(&samples(16, |_| C64::new(1.0, 0.0))).unwrap();
        assert!(hilbert_transform(&one).l2_sq() < 1e-30);
        let e5 = FourierSeries::from_modes(16, &[(5, C64::new(1.0, 0.0))]).unwrap();
        assert!((hilbert_transform(&e5).coeff(5) - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn poisson_examples() {
        let e1 = FourierSeries::from_modes(8, &[(1, C64::new(1.0, 0.0))]).unwrap();
        assert!((poisson_eval(&e1, 0.5, 0.0, Side::Interior).unwrap() - 0.5).norm() < 1e-15);
        assert!((poisson_eval(&e1, 2.0, 0.0, Side::Exterior).unwrap() - 0.5).norm() < 1e-15);
        let one = FourierSeries::from_modes(8, &[(0, C64::new(1.0, 0.0))]).unwrap();
        assert!((poisson_eval(&one, 0.3, 1.0, Side::Interior).unwrap() - 1.0).norm() < 1e-15);
        assert!((poisson_eval(&one, 3.0, 1.0, Side::Exterior).unwrap() - 1.0).norm() < 1e-15);
        assert!(poisson_eval(&one, 1.5, 0.0, Side::Interior).is_err());
        assert!(poisson_eval(&one, 0.5, 0.0, Side::Exterior).is_err());
    }

    #[test]
    fn poisson_gradient_matches_finite_differences() {
        let s = FourierSeries::from_modes(16, &[(2, C64::new(0.3, 0.1)), (-3, C64::new(-0.2, 0.4)), (1, C64::new(1.0, 0.0))]).unwrap();
        for (z, side) in [(C64::new(0.3, -0.4), Side::Interior), (C64::new(1.3, 0.9), Side::Exterior)] {
            let u = |w: C64| poisson_eval(&s, w.norm(), w.arg(), side).unwrap();
            let h = 1e-6;
            let ux = (u(z + h) - u(z - h)) / (2.0 * h);
            let uy = (u(z + C64::i() * h) - u(z - C64::i() * h)) / (2.0 * h);
            let (gx, gy) = poisson_gradient(&s, z, side);
            assert!((gx - ux).norm() < 1e-8 && (gy - uy).norm() < 1e-8);
        }
    }

    #[test]
    fn disk_weight_examples() {
        assert_relative_eq!(interior_weight(1, 0.5).unwrap(), 2.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(exterior_weight(1, 0.5).unwrap(), 2.0 * PI, max_relative = 1e-13);
        assert_eq!(interior_weight(0, 0.3).unwrap(), 0.0);
        assert_eq!(exterior_weight(0, 0.3).unwrap(), 0.0);
        assert!(matches!(exterior_weight(1, 0.0), Err(Error::DivergentWeight { mode: 1, .. })));
        let w = disk_energy_weights(4, 0.0).unwrap();
        assert_eq!(w.divergent_modes, vec![1]);
        assert!(w.disk_exterior_w[1].is_infinite() && w.disk_exterior_w[2].is_finite());
    }

    /// Radial oracle: for u = r^{|n|} e^{inθ}, |∇u|² = 2n² r^{2|n|−2}, so
    /// the weighted energy is 4πn² ∫ r^{2|n|−1} (1−r²)^{1−2s} dr.
    #[test]
    fn interior_weight_matches_radial_integral() {
        for &s in &[0.25, 0.5, 0.75] {
            for n in 1..=6i64 {
                let nf = n as f64;
                // substitute ρ = r², (1−ρ)^{1−2s} by Gauss–Jacobi
                let pts = crate::quadrature::gauss_jacobi(60, 1.0 - 2.0 * s, 0.0);
                let radial: f64 = pts.nodes.iter().zip(&pts.weights).map(|(&y, &w)| {
                    let rho = 0.5 * (1.0 + y);
                    w * 0.5f64.powf(2.0 - 2.0 * s) * rho.powf(nf - 1.0) * 0.5
                }).sum();
                let oracle = 4.0 * PI * nf * nf * radial;
                assert_relative_eq!(interior_weight(n, s).unwrap(), oracle, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn douglas_weight_fejer_identity() {
        for n in 1..=8i64 {
            assert_relative_eq!(douglas_weight(n, 0.5).unwrap(), 2.0 * PI * n as f64, epsilon = 1e-8);
        }
        assert_eq!(douglas_weight(0, 0.3).unwrap(), 0.0);
        assert!(douglas_weight(1, 0.0).is_err());
    }

    #[test]
    fn douglas_weight_matches_brute_force() {
        // midpoint rule on [0, π] after subtracting the leading n² θ^{1−2s}
        // term, which is integrated exactly; W is twice the half integral.
        for &(n, s) in &[(2i64, 0.25), (3, 0.75), (5, 0.1)] {
            let m = 200_000;
            let h = PI / m as f64;
            let n2 = (n * n) as f64;
            let p = 2.0 - 2.0 * s;
            let f = |t: f64| {
                let a = (n as f64 * 0.5 * t).sin();
                4.0 * a * a / (2.0 * (0.5 * t).sin()).powf(1.0 + 2.0 * s) - n2 * t.powf(1.0 - 2.0 * s)
            };
            let acc: f64 = (0..m).map(|k| f(h * (k as f64 + 0.5)) * h).sum();
            let oracle = 2.0 * (acc + n2 * PI.powf(p) / p);
            assert_relative_eq!(douglas_weight(n, s).unwrap(), oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn douglas_multiplier_comparability() {
        for k in 1..=9 {
            let s = 0.1 * k as f64;
            let ratios: Vec<f64> = (1..=64).map(|n| douglas_weight(n, s).unwrap() / (n as f64).powf(2.0 * s)).collect();
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
            assert!(lo > 0.0 && hi / lo < 10.0, "s={s}: {lo} {hi}");
        }
    }

    #[test]
    fn douglas_to_disk_ratio_at_half() {
        // W(n,1/2) = 2πn and w_i = w_e = 2πn at s = 1/2
        for n in 1..=64 {
            let r = douglas_weight(n, 0.5).unwrap() / (interior_weight(n, 0.5).unwrap() + exterior_weight(n, 0.5).unwrap());
            assert!((r - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn g_function_examples() {
        let z = FourierSeries::from_modes(16, &[(1, C64::new(1.0, 0.0))]).unwrap();
        assert_relative_eq!(g_function(&z, 0.7), 0.5f64.sqrt(), epsilon = 1e-12);
        let z2 = FourierSeries::from_modes(16, &[(2, C64::new(1.0, 0.0))]).unwrap();
        assert_relative_eq!(g_function(&z2, 0.0), (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        let c = FourierSeries::from_modes(16, &[(0, C64::new(2.0, 0.0))]).unwrap();
        assert_eq!(g_function(&c, 0.0), 0.0);
    }

    #[test]
    fn spectral_derivative_and_matrix_agree() {
        let n = 32;
        let period = 5.0;
        let f: Vec<C64> = (0..n).map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            C64::new((3.0 * t).sin(), t.cos())
        }).collect();
        let d = spectral_derivative(&f, period).unwrap();
        let dm = spectral_diff_matrix(n, period);
        let scale = 2.0 * PI / period;
        for k in 0..n {
            let t = 2.0 * PI * k as f64 / n as f64;
            let exact = C64::new(3.0 * (3.0 * t).cos(), -t.sin()) * scale;
            assert!((d[k] - exact).norm() < 1e-12);
            let via: C64 = (0..n).map(|j| dm[k * n + j] * f[j]).sum();
            assert!((via - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn weights_csv_has_header_and_rows() {
        let w = douglas_weights_circle(3, 0.5).unwrap();
        let csv = weights_csv(&w);
        assert!(csv.starts_with("n,W,w_i,w_e\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    fn arb_series() -> impl Strategy<Value = FourierSeries> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 15).prop_map(|v| {
            let modes: Vec<(i64, C64)> = v.iter().enumerate().map(|(k, &(a, b))| (k as i64 - 7, C64::new(a, b))).collect();
            FourierSeries::from_modes(32, &modes).unwrap()
        })
    }

    proptest! {
        #[test]
        fn parseval_round_trip(series in arb_series()) {
            let vals = series.synthesize();
            let back = analyze(&vals).unwrap();
            let lhs = back.l2_sq();
            let rhs = vals.iter().map(|v| v.norm_sqr()).sum::<f64>() / vals.len() as f64;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
        }

        #[test]
        fn real_input_conjugate_symmetric(xs in prop::collection::vec(-1.0f64..1.0, 16)) {
            let s = analyze_real(&xs).unwrap();
            for m in 1..8 {
                prop_assert!((s.coeff(-m) - s.coeff(m).conj()).norm() < 1e-12);
            }
        }

        #[test]
        fn hilbert_isometry_and_involution(series in arb_series(), s in 0.0f64..1.0) {
            let f = series.mean_zero();
            let h = hilbert_transform(&f);
            prop_assert!((hs_norm_fourier(&h, s).unwrap() - hs_norm_fourier(&f, s).unwrap()).abs() <= 1e-12 * (1.0 + hs_norm_fourier(&f, s).unwrap()));
            let hh = hilbert_transform(&h);
            for (m, c) in hh.modes() {
                prop_assert_eq!(c, -f.coeff(m));
            }
        }

        #[test]
        fn weights_nonnegative(n in 0i64..64, s in 0.01f64..0.99) {
            prop_assert!(interior_weight(n, s).unwrap() >= 0.0);
            prop_assert!(exterior_weight(n.max(1), s).unwrap() >= 0.0);
        }
    }
}

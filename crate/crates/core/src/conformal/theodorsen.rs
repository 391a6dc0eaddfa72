//! Theodorsen's method for star-shaped curves `r(θ) e^{iθ}`.
//!
//! The boundary correspondence `Θ(t)` solves `Θ = t + H[log r(Θ)]`; the
//! map is `φ(z) = z exp(G(z))` with boundary values
//! `G = log r(Θ) + i(Θ − t)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::CurveSpec;
use crate::spectral::{analyze, analyze_real, hilbert_transform};

/// Radius function of a star-shaped curve about the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum Radial {
    Polar(Vec<(u32, f64, f64)>),
    Ellipse { a: f64, b: f64 },
    Circle(f64),
}

impl Radial {
    pub fn from_spec(spec: &CurveSpec) -> Result<Radial> {
        match spec {
            CurveSpec::PolarLipschitz { .. } => Ok(Radial::Polar(spec.polar_modes()?)),
            CurveSpec::Ellipse { a, b } => Ok(Radial::Ellipse { a: *a, b: *b }),
            CurveSpec::Circle { radius } => Ok(Radial::Circle(*radius)),
            _ => Err(Error::InvalidCurve("Theodorsen maps need a star-shaped smooth curve".into())),
        }
    }

    /// `(r(θ), r′(θ))`.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        match self {
            Radial::Polar(modes) => {
                let mut r = 0.0;
                let mut dr = 0.0;
                for &(k, a, b) in modes {
                    let kf = k as f64;
                    let (s, c) = (kf * theta).sin_cos();
                    r += a * c + b * s;
                    dr += kf * (-a * s + b * c);
                }
                (r, dr)
            }
            Radial::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                let q = b * b * c * c + a * a * s * s;
                let r = a * b / q.sqrt();
                let dq = 2.0 * (a * a - b * b) * s * c;
                (r, -0.5 * r * dq / q)
            }
            Radial::Circle(r) => (*r, 0.0),
        }
    }

    /// `max |r′/r|` on a dense grid.
    pub fn epsilon(&self) -> f64 {
        let m = 8192;
        (0..m)
            .map(|k| {
                let (r, dr) = self.eval(2.0 * PI * k as f64 / m as f64);
                (dr / r).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solved Theodorsen map.
#[derive(Debug, Clone)]
pub struct TheodorsenMap {
    pub radial: Radial,
    /// `Θ(t_j)` at `t_j = 2πj/M`.
    pub theta: Vec<f64>,
    /// Taylor coefficients of `G` (index `n = 0..M/2`).
    pub g_coeffs: Vec<C64>,
    /// Taylor coefficients of `log φ′`.
    pub logd_coeffs: Vec<C64>,
    pub iterations: usize,
    pub last_change: f64,
}

fn horner(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

fn horner_deriv(c: &[C64], z: C64) -> C64 {
    c.iter().enumerate().skip(1).rev().fold(C64::new(0.0, 0.0), |acc, (k, &a)| acc * z + a * k as f64)
}

/// Taylor coefficients `n ≥ 0` from boundary samples, with the negative
/// modes folded away (they vanish for holomorphic data up to truncation).
fn taylor_from_boundary(samples: &[C64]) -> Result<Vec<C64>> {
    let s = analyze(samples)?;
    let m = samples.len();
    Ok((0..m / 2).map(|k| s.coeff(k as i64)).collect())
}

impl TheodorsenMap {
    pub fn solve(radial: Radial, m: usize, tol: f64) -> Result<TheodorsenMap> {
        if m < 16 || !m.is_power_of_two() {
            return Err(Error::InvalidInput(format!("grid size {m} must be a power of two ≥ 16")));
        }
        let eps = radial.epsilon();
        if eps >= 1.0 {
            return Err(Error::TheodorsenDiverged(eps));
        }
        let t: Vec<f64> = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
        let mut theta = t.clone();
        let mut change = f64::INFINITY;
        let mut iterations = 0;
        for it in 0..2000 {
            iterations = it + 1;
            let logr: Vec<f64> = theta.iter().map(|&th| radial.eval(th).0.ln()).collect();
            let conj = hilbert_transform(&analyze_real(&logr)?).synthesize();
            let next: Vec<f64> = t.iter().zip(&conj).map(|(tj, c)| tj + c.re).collect();
            let new_change = next.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            theta = next;
            if !new_change.is_finite() || (it > 50 && new_change > change * 1.5) {
                return Err(Error::TheodorsenDiverged(eps));
            }
            change = new_change;
            if change < tol {
                break;
            }
        }
        if change >= tol.max(1e-13) * 10.0 {
            return Err(Error::TheodorsenDiverged(eps));
        }
        // Θ′ by spectral differentiation of the periodic part
        let periodic: Vec<f64> = theta.iter().zip(&t).map(|(a, b)| a - b).collect();
        let dper = analyze_real(&periodic)?.derivative().synthesize();
        let mut gb = Vec::with_capacity(m);
        let mut lb = Vec::with_capacity(m);
        for j in 0..m {
            let th = theta[j];
            let dth = 1.0 + dper[j].re;
            if dth <= 0.0 {
                return Err(Error::CorrespondenceDegenerate(t[j]));
            }
            let (r, dr) = radial.eval(th);
            gb.push(C64::new(r.ln(), th - t[j]));
            let l = C64::new(dth.ln(), 0.0) + C64::new(dr, r).ln() + C64::new(0.0, th - t[j] - 0.5 * PI);
            lb.push(l);
        }
        let mut g_coeffs = taylor_from_boundary(&gb)?;
        let mut logd_coeffs = taylor_from_boundary(&lb)?;
        // φ′(0) > 0
        g_coeffs[0].im = 0.0;
        logd_coeffs[0].im = 0.0;
        Ok(TheodorsenMap { radial, theta, g_coeffs, logd_coeffs, iterations, last_change: change })
    }

    pub fn eval(&self, z: C64) -> C64 {
        z * horner(&self.g_coeffs, z).exp()
    }

    pub fn log_deriv(&self, z: C64) -> C64 {
        horner(&self.logd_coeffs, z)
    }

    pub fn deriv_ratio(&self, z: C64) -> C64 {
        horner_deriv(&self.logd_coeffs, z)
    }

    /// Max over the grid of `| |φ(e^{it})| − r(arg φ(e^{it})) |`.
    pub fn on_curve_residual(&self) -> f64 {
        let m = self.theta.len();
        (0..m)
            .map(|j| {
                let w = self.eval(C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64));
                (w.norm() - self.radial.eval(w.arg()).0).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_is_identity() {
        let m = TheodorsenMap::solve(Radial::Circle(1.0), 64, 1e-12).unwrap();
        for (j, th) in m.theta.iter().enumerate() {
            assert!((th - 2.0 * PI * j as f64 / 64.0).abs() < 1e-15);
        }
        let z = C64::new(0.3, 0.2);
        assert!((m.eval(z) - z).norm() < 1e-14);
    }

    #[test]
    fn cosine_perturbation_converges_and_is_monotone() {
        let spec = CurveSpec::polar_cosine(1.0, 1, 0.2);
        let m = TheodorsenMap::solve(Radial::from_spec(&spec).unwrap(), 256, 1e-10).unwrap();
        assert!(m.theta.windows(2).all(|w| w[1] > w[0]));
        for j in 0..256 {
            let z = C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / 256.0);
            assert!(m.log_deriv(z).re.exp() > 0.0);
        }
    }

    #[test]
    fn three_fold_curve_boundary_on_curve() {
        let spec = CurveSpec::polar_cosine(1.0, 3, 0.1);
        let m = TheodorsenMap::solve(Radial::from_spec(&spec).unwrap(), 512, 1e-13).unwrap();
        assert!(m.on_curve_residual() < 1e-8, "{}", m.on_curve_residual());
    }

    #[test]
    fn derivative_series_consistent_with_map() {
        let spec = CurveSpec::polar_cosine(1.0, 2, 0.15);
        let m = TheodorsenMap::solve(Radial::from_spec(&spec).unwrap(), 512, 1e-13).unwrap();
        let z = C64::new(0.4, -0.5);
        let h = 1e-5;
        let fd = (m.eval(z + h) - m.eval(z - h)) / (2.0 * h);
        assert!((fd - m.log_deriv(z).exp()).norm() < 1e-8);
    }

    #[test]
    fn ellipse_converges() {
        let m = TheodorsenMap::solve(Radial::Ellipse { a: 2.0, b: 1.0 }, 1024, 1e-12).unwrap();
        assert!(m.on_curve_residual() < 1e-8, "{}", m.on_curve_residual());
    }

    #[test]
    fn non_contracting_curve_diverges() {
        let spec = CurveSpec::polar_cosine(1.0, 8, 0.3);
        assert!(matches!(
            TheodorsenMap::solve(Radial::from_spec(&spec).unwrap(), 256, 1e-10),
            Err(Error::TheodorsenDiverged(_))
        ));
    }
}

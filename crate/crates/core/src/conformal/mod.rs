//! Riemann maps `φ: 𝔻 → Ω`, the boundary correspondence `h` with
//! `φ = λ ∘ h`, and conjugation of boundary functions through `h`.

mod sc;
mod theodorsen;

pub use sc::{interior_angles, ScMap};
pub use theodorsen::{Radial, TheodorsenMap};

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{CurveSpec, DistanceIndex, SampledCurve};
use crate::interp::{MonotoneCubic, PeriodicSamples};
use crate::quadrature::gauss_legendre;
use crate::spectral::{analyze, analyze_real, FourierSeries};

/// Conformal map of the unit disk onto the interior of a Jordan curve,
/// normalized by `φ′(0) > 0`.
#[derive(Debug, Clone)]
pub enum RiemannMap {
    /// `φ(z) = radius · z`.
    Disk { radius: f64 },
    Sc(ScMap),
    Theodorsen(TheodorsenMap),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    IdentityDisk,
    SchwarzChristoffel,
    Theodorsen,
}

impl RiemannMap {
    pub fn identity() -> RiemannMap {
        RiemannMap::Disk { radius: 1.0 }
    }

    pub fn kind(&self) -> MapKind {
        match self {
            RiemannMap::Disk { .. } => MapKind::IdentityDisk,
            RiemannMap::Sc(_) => MapKind::SchwarzChristoffel,
            RiemannMap::Theodorsen(_) => MapKind::Theodorsen,
        }
    }

    fn check(&self, z: C64) -> Result<()> {
        if !(z.norm() <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("|z| = {} outside the closed disk", z.norm())));
        }
        Ok(())
    }

    /// `φ(z)`.
    pub fn eval(&self, z: C64) -> Result<C64> {
        self.check(z)?;
        match self {
            RiemannMap::Disk { radius } => Ok(z * radius),
            RiemannMap::Sc(m) => m.eval(z),
            RiemannMap::Theodorsen(m) => Ok(m.eval(z)),
        }
    }

    /// `log φ′(z)` on the branch continuous in 𝔻 and real at 0.
    pub fn log_deriv(&self, z: C64) -> Result<C64> {
        self.check(z)?;
        match self {
            RiemannMap::Disk { radius } => Ok(C64::new(radius.ln(), 0.0)),
            RiemannMap::Sc(m) => m.log_deriv(z),
            RiemannMap::Theodorsen(m) => Ok(m.log_deriv(z)),
        }
    }

    /// `φ′(z)`.
    pub fn deriv(&self, z: C64) -> Result<C64> {
        Ok(self.log_deriv(z)?.exp())
    }

    /// `φ″(z)/φ′(z)`.
    pub fn deriv_ratio(&self, z: C64) -> C64 {
        match self {
            RiemannMap::Disk { .. } => C64::new(0.0, 0.0),
            RiemannMap::Sc(m) => m.deriv_ratio(z),
            RiemannMap::Theodorsen(m) => m.deriv_ratio(z),
        }
    }

    /// `φ(0)`.
    pub fn anchor(&self) -> C64 {
        match self {
            RiemannMap::Disk { .. } => C64::new(0.0, 0.0),
            RiemannMap::Sc(m) => m.center,
            RiemannMap::Theodorsen(m) => m.eval(C64::new(0.0, 0.0)),
        }
    }

    /// Boundary angles where `φ′` is singular (prevertex arguments).
    pub fn singular_args(&self) -> Vec<f64> {
        match self {
            RiemannMap::Sc(m) => m.prevertex_args(),
            _ => vec![],
        }
    }

    /// `φ(e^{it})`, finite at prevertices.
    pub fn boundary_point(&self, t: f64) -> C64 {
        let z = C64::from_polar(1.0, t);
        match self {
            RiemannMap::Disk { radius } => z * radius,
            RiemannMap::Sc(m) => m.eval_unchecked(z),
            RiemannMap::Theodorsen(m) => m.eval(z),
        }
    }

    /// `|φ′(e^{it})|` (infinite or zero at prevertices).
    pub fn boundary_speed(&self, t: f64) -> f64 {
        let z = C64::from_polar(1.0, t);
        match self {
            RiemannMap::Disk { radius } => *radius,
            RiemannMap::Sc(m) => m.log_deriv_unchecked(z).re.exp(),
            RiemannMap::Theodorsen(m) => m.log_deriv(z).re.exp(),
        }
    }

    /// JSON cache of a solved map (disk and Schwarz–Christoffel maps).
    pub fn to_cache_json(&self) -> Result<String> {
        let cache = match self {
            RiemannMap::Disk { radius } => MapCache::Disk { radius: *radius },
            RiemannMap::Sc(m) => MapCache::SchwarzChristoffel(m.clone()),
            RiemannMap::Theodorsen(_) => {
                return Err(Error::InvalidInput("Theodorsen maps are re-solved, not cached".into()))
            }
        };
        serde_json::to_string_pretty(&cache).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_cache_json(s: &str) -> Result<RiemannMap> {
        let cache: MapCache = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(match cache {
            MapCache::Disk { radius } => RiemannMap::Disk { radius },
            MapCache::SchwarzChristoffel(m) => RiemannMap::Sc(m.with_rules()),
        })
    }

    pub fn save_cache(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_cache_json()?)?;
        Ok(())
    }

    pub fn load_cache(path: &Path) -> Result<RiemannMap> {
        RiemannMap::from_cache_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MapCache {
    Disk { radius: f64 },
    SchwarzChristoffel(ScMap),
}

/// `φ(z)`.
pub fn eval_map(map: &RiemannMap, z: C64) -> Result<C64> {
    map.eval(z)
}

/// `φ′(z)`.
pub fn eval_map_derivative(map: &RiemannMap, z: C64) -> Result<C64> {
    map.deriv(z)
}

/// Schwarz–Christoffel map of a polygon spec (≤ 24 vertices).
pub fn solve_sc_parameters(spec: &CurveSpec, tol: f64) -> Result<RiemannMap> {
    spec.validate()?;
    let v = spec
        .polygon_vertices()
        .ok_or_else(|| Error::InvalidCurve("Schwarz–Christoffel needs a polygonal curve".into()))?;
    Ok(RiemannMap::Sc(ScMap::solve(&v, tol)?))
}

/// Theodorsen map of a star-shaped smooth curve on a grid of `m` points.
pub fn theodorsen_solve(spec: &CurveSpec, m: usize, tol: f64) -> Result<RiemannMap> {
    spec.validate()?;
    Ok(RiemannMap::Theodorsen(TheodorsenMap::solve(Radial::from_spec(spec)?, m, tol)?))
}

/// Default map for a curve spec.
pub fn riemann_map(spec: &CurveSpec) -> Result<RiemannMap> {
    match spec {
        CurveSpec::Circle { radius } => Ok(RiemannMap::Disk { radius: *radius }),
        CurveSpec::Polygon { .. } | CurveSpec::Koch { .. } => solve_sc_parameters(spec, 1e-10),
        CurveSpec::Ellipse { .. } | CurveSpec::PolarLipschitz { .. } => theodorsen_solve(spec, 1024, 1e-13),
    }
}

/// `h = λ⁻¹ ∘ φ` on a grid of the circle, with quadrature weights in `t`.
#[derive(Debug, Clone)]
pub struct BoundaryCorrespondence {
    /// Grid angles, increasing, spanning one period.
    pub t: Vec<f64>,
    /// Quadrature weights for `dt` on the grid.
    pub weights: Vec<f64>,
    /// Arc-length coordinate `h(e^{it})`, unwrapped and increasing.
    pub h_values: Vec<f64>,
    /// `|h′| = |φ′(e^{it})|`.
    pub h_prime_abs: Vec<f64>,
    pub total_length: f64,
    /// `h⁻¹` through monotone cubic interpolation.
    inverse: MonotoneCubic,
    period_start: f64,
    /// `h(t) − Lt/2π` on uniform grids, for Newton refinement of `h⁻¹`.
    periodic: Option<(FourierSeries, FourierSeries)>,
}

/// Composite Gauss–Legendre grid on one period, graded geometrically toward
/// the breakpoints.
pub(crate) fn graded_grid(breaks: &[f64], levels: u32, max_panel: f64) -> (Vec<f64>, Vec<f64>) {
    let gl = gauss_legendre(16);
    let mut t = Vec::new();
    let mut w = Vec::new();
    let nb = breaks.len();
    for k in 0..nb {
        let a = breaks[k];
        let b = if k + 1 < nb { breaks[k + 1] } else { breaks[0] + 2.0 * PI };
        let len = b - a;
        let mut edges = vec![a];
        for l in (1..=levels).rev() {
            edges.push(a + 0.5 * len * 0.5f64.powi(l as i32));
        }
        let inner_a = a + 0.25 * len;
        let inner_b = b - 0.25 * len;
        let m = ((inner_b - inner_a) / max_panel).ceil().max(1.0) as usize;
        for j in 0..=m {
            edges.push(inner_a + (inner_b - inner_a) * j as f64 / m as f64);
        }
        for l in 1..=levels {
            edges.push(b - 0.5 * len * 0.5f64.powi(l as i32));
        }
        edges.push(b);
        edges.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        for e in edges.windows(2) {
            for (x, wt) in gl.mapped(e[0], e[1]) {
                t.push(x);
                w.push(wt);
            }
        }
    }
    (t, w)
}

/// Arc length of a radial curve from angle 0 to `theta` (any real `theta`).
fn radial_arclength(radial: &Radial, theta: f64, total: f64) -> f64 {
    let gl = gauss_legendre(16);
    let turns = (theta / (2.0 * PI)).floor();
    let rem = theta - turns * 2.0 * PI;
    let panels = 128usize;
    let h = 2.0 * PI / panels as f64;
    let speed = |x: f64| {
        let (r, dr) = radial.eval(x);
        (r * r + dr * dr).sqrt()
    };
    let full = (rem / h).floor() as usize;
    let mut acc = 0.0;
    for p in 0..full {
        acc += gl.mapped(h * p as f64, h * (p + 1) as f64).map(|(x, w)| w * speed(x)).sum::<f64>();
    }
    acc += gl.mapped(h * full as f64, rem).map(|(x, w)| w * speed(x)).sum::<f64>();
    turns * total + acc
}

/// Tabulates `h` on a grid and checks that `φ(𝕋)` lies on the sampled curve.
pub fn boundary_correspondence(map: &RiemannMap, curve: &SampledCurve) -> Result<BoundaryCorrespondence> {
    let n = curve.len();
    let length = curve.total_length;
    let kappa = curve.curvature.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let tol = curve.spacing().powi(2) * kappa + 1e-8 * length;
    let (t, weights) = match map {
        RiemannMap::Sc(m) => graded_grid(&m.prevertex_args(), 40, 2.0 * PI / 128.0),
        _ => {
            let m = (4 * n).next_power_of_two().max(1024);
            ((0..m).map(|j| 2.0 * PI * (j as f64 + 0.5) / m as f64).collect(), vec![2.0 * PI / m as f64; m])
        }
    };
    let index = DistanceIndex::new(curve);
    let h = curve.spacing();
    let images: Vec<C64> = exec::map_slice(&t, |&tj| map.boundary_point(tj));
    let mut sigma = Vec::with_capacity(t.len());
    let mut worst = 0.0f64;
    for &w in &images {
        let (d, seg, frac) = index.nearest(w);
        worst = worst.max(d);
        let s = match map {
            RiemannMap::Theodorsen(tm) => {
                let theta = w.arg();
                let theta = if theta < 0.0 { theta + 2.0 * PI } else { theta };
                radial_arclength(&tm.radial, theta, length)
            }
            RiemannMap::Disk { radius } => {
                let a = w.arg();
                radius * if a < 0.0 { a + 2.0 * PI } else { a }
            }
            RiemannMap::Sc(_) => (seg as f64 + frac) * h,
        };
        sigma.push(s);
    }
    if worst > tol {
        return Err(Error::CurveMapMismatch(worst));
    }
    // unwrap to an increasing sequence
    let mut h_values = Vec::with_capacity(sigma.len());
    let mut offset = 0.0;
    for (j, &s) in sigma.iter().enumerate() {
        let mut v = s + offset;
        if let Some(&prev) = h_values.last() {
            if v < prev - 0.5 * length {
                offset += length;
                v += length;
            }
            if v <= prev {
                return Err(Error::CorrespondenceDegenerate(t[j]));
            }
        }
        h_values.push(v);
    }
    if h_values.last().unwrap() - h_values[0] >= length {
        return Err(Error::CorrespondenceDegenerate(*t.last().unwrap()));
    }
    let h_prime_abs: Vec<f64> = exec::map_slice(&t, |&tj| map.boundary_speed(tj));
    // h⁻¹ with one period of padding on each side
    let m = t.len();
    let mut xs = Vec::with_capacity(3 * m);
    let mut ys = Vec::with_capacity(3 * m);
    for shift in [-1.0, 0.0, 1.0] {
        for j in 0..m {
            xs.push(h_values[j] + shift * length);
            ys.push(t[j] + shift * 2.0 * PI);
        }
    }
    let inverse = MonotoneCubic::new(xs, ys).ok_or(Error::CorrespondenceDegenerate(t[0]))?;
    let periodic = match map {
        RiemannMap::Sc(_) => None,
        _ => {
            let slope = length / (2.0 * PI);
            let p: Vec<f64> = h_values.iter().zip(&t).map(|(hv, tj)| hv - slope * tj).collect();
            let series = analyze_real(&p)?;
            let d = series.derivative();
            Some((series, d))
        }
    };
    Ok(BoundaryCorrespondence {
        period_start: h_values[0],
        t,
        weights,
        h_values,
        h_prime_abs,
        total_length: length,
        inverse,
        periodic,
    })
}

impl BoundaryCorrespondence {
    /// `h⁻¹(σ)` as an angle.
    pub fn h_inverse(&self, sigma: f64) -> f64 {
        let s = self.period_start + (sigma - self.period_start).rem_euclid(self.total_length);
        let mut t = self.inverse.eval(s);
        if let Some((p, dp)) = &self.periodic {
            let slope = self.total_length / (2.0 * PI);
            let shift = PI / self.t.len() as f64;
            for _ in 0..3 {
                let r = slope * t + p.eval(t - shift).re - s;
                t -= r / (slope + dp.eval(t - shift).re);
            }
        }
        t
    }

    /// `∫ |h′| dt` by the grid quadrature.
    pub fn integral_h_prime(&self) -> f64 {
        exec::pairwise_sum(&self.h_prime_abs.iter().zip(&self.weights).map(|(a, w)| a * w).collect::<Vec<_>>())
    }
}

/// Conjugate `f̃ = V_h⁻¹ H V_h f` of node samples: `f ∘ λ ∘ h` is resampled on
/// the circle grid, conjugated, and read back at `h⁻¹(σ_k)`.
pub fn conjugate_on_curve(curve: &SampledCurve, f: &[C64], bc: &BoundaryCorrespondence) -> Result<Vec<C64>> {
    if f.len() != curve.len() {
        return Err(Error::InvalidInput(format!("{} samples for {} nodes", f.len(), curve.len())));
    }
    let g: Vec<C64> = if curve.corners.is_empty() {
        let series = analyze(f)?;
        let scale = 2.0 * PI / curve.total_length;
        exec::map_slice(&bc.h_values, |&s| series.eval(s * scale))
    } else {
        let interp = PeriodicSamples::new(f, curve.total_length, &curve.corners);
        bc.h_values.iter().map(|&s| interp.eval(s)).collect()
    };
    let h = curve.spacing();
    let out = exec::map_range(curve.len(), |k| {
        let ts = bc.h_inverse(h * k as f64);
        let fk = f[k];
        let mut terms = Vec::with_capacity(g.len());
        for ((&tj, &wj), &gj) in bc.t.iter().zip(&bc.weights).zip(&g) {
            let d = 0.5 * (ts - tj);
            if d.sin().abs() < 1e-14 {
                continue;
            }
            terms.push((gj - fk) * (wj / d.tan()));
        }
        crate::exec::pairwise_sum_c(&terms) / (2.0 * PI)
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_curve;

    #[test]
    fn identity_map_values() {
        let m = RiemannMap::identity();
        let z = C64::new(0.2, -0.3);
        assert_eq!(eval_map(&m, z).unwrap(), z);
        assert_eq!(eval_map_derivative(&m, z).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(m.kind(), MapKind::IdentityDisk);
    }

    #[test]
    fn square_map_koebe_bounds() {
        let spec = CurveSpec::square(1.0);
        let m = solve_sc_parameters(&spec, 1e-10).unwrap();
        let c = build_curve(&spec, 256).unwrap();
        let z0 = m.eval(C64::new(0.0, 0.0)).unwrap();
        assert!(z0.norm() < 1e-14);
        assert!(m.deriv(C64::new(0.0, 0.0)).unwrap().im.abs() < 1e-14);
        let idx = DistanceIndex::new(&c);
        let mut rng = 12345u64;
        for _ in 0..1000 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let r = ((rng >> 11) as f64 / (1u64 << 53) as f64).sqrt() * 0.999;
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = 2.0 * PI * (rng >> 11) as f64 / (1u64 << 53) as f64;
            let z = C64::from_polar(r, a);
            let ratio = idx.distance(m.eval(z).unwrap()) / ((1.0 - r) * m.deriv(z).unwrap().norm());
            assert!((0.25..=4.0).contains(&ratio), "{ratio} at {z}");
        }
    }

    #[test]
    fn disk_correspondence_is_identity() {
        let c = build_curve(&CurveSpec::Circle { radius: 1.0 }, 64).unwrap();
        let bc = boundary_correspondence(&RiemannMap::identity(), &c).unwrap();
        for (t, h) in bc.t.iter().zip(&bc.h_values) {
            assert!((t - h).abs() < 1e-12);
        }
        assert!(bc.h_prime_abs.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn square_correspondence_integrates_to_perimeter() {
        let spec = CurveSpec::square(1.0);
        let m = riemann_map(&spec).unwrap();
        let c = build_curve(&spec, 128).unwrap();
        let bc = boundary_correspondence(&m, &c).unwrap();
        let v = bc.integral_h_prime() / (2.0 * PI);
        assert!((v - 8.0 / (2.0 * PI)).abs() < 1e-6, "{v}");
        assert!(bc.h_values.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn polar_correspondence_monotone() {
        let spec = CurveSpec::polar_cosine(1.0, 1, 0.2);
        let m = riemann_map(&spec).unwrap();
        let c = build_curve(&spec, 256).unwrap();
        let bc = boundary_correspondence(&m, &c).unwrap();
        assert!(bc.h_values.windows(2).all(|w| w[1] > w[0]));
        assert!((bc.integral_h_prime() - c.total_length).abs() < 1e-9 * c.total_length);
    }

    #[test]
    fn mismatched_curve_rejected() {
        let m = riemann_map(&CurveSpec::square(1.0)).unwrap();
        let c = build_curve(&CurveSpec::Circle { radius: 1.0 }, 64).unwrap();
        assert!(matches!(boundary_correspondence(&m, &c), Err(Error::CurveMapMismatch(_))));
    }

    #[test]
    fn circle_conjugates_cosine_to_sine() {
        let c = build_curve(&CurveSpec::Circle { radius: 1.0 }, 64).unwrap();
        let bc = boundary_correspondence(&RiemannMap::identity(), &c).unwrap();
        let f: Vec<C64> = c.nodes.iter().map(|z| C64::new(z.re, 0.0)).collect();
        let g = conjugate_on_curve(&c, &f, &bc).unwrap();
        for (z, v) in c.nodes.iter().zip(&g) {
            assert!((v - z.im).norm() < 1e-10, "{v} vs {}", z.im);
        }
        let one = vec![C64::new(1.0, 0.0); 64];
        assert!(conjugate_on_curve(&c, &one, &bc).unwrap().iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn square_conjugate_of_real_part_is_imaginary_part() {
        let spec = CurveSpec::square(1.0);
        let m = riemann_map(&spec).unwrap();
        let c = build_curve(&spec, 128).unwrap();
        let bc = boundary_correspondence(&m, &c).unwrap();
        let f: Vec<C64> = c.nodes.iter().map(|z| C64::new(z.re, 0.0)).collect();
        let g = conjugate_on_curve(&c, &f, &bc).unwrap();
        let err = c.nodes.iter().zip(&g).map(|(z, v)| (v - z.im).norm()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        // H² = −I on mean-zero data
        let gg = conjugate_on_curve(&c, &g, &bc).unwrap();
        let err2 = f.iter().zip(&gg).map(|(a, b)| (a + b).norm()).fold(0.0, f64::max);
        assert!(err2 < 5e-3, "{err2}");
    }

    #[test]
    fn cache_round_trip_through_json() {
        let m = riemann_map(&CurveSpec::square(1.0)).unwrap();
        let js = m.to_cache_json().unwrap();
        assert!(js.contains("prevertices") && js.contains("residual"));
        let back = RiemannMap::from_cache_json(&js).unwrap();
        let z = C64::new(0.1, 0.5);
        assert!((back.eval(z).unwrap() - m.eval(z).unwrap()).norm() < 1e-15);
    }
}

//! Fractional Sobolev norms on curves and weighted Dirichlet energies.
//!
//! * [`douglas_norm`]: the double integral `∬ |f(z)−f(ζ)|² / |z−ζ|^{1+2s}`
//!   over `Γ×Γ` by tensor trapezoid with a local model on the diagonal band.
//! * [`pullback_energy`]: `∬_𝔻 |V_s(F)′|² (1−|z|)^{1−2s}` for holomorphic `F`.
//! * [`direct_weighted_energy`]: `∬_Ω |∇u|² w(z)` on a quadtree graded
//!   toward the curve.
//! * [`hardy_norm_e2`] and [`gradient_decay_check`].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::conformal::{graded_grid, RiemannMap};
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{CurveSpec, DistanceIndex, SampledCurve};
use crate::harmonic::Harmonic;
use crate::holomorphic::Holo;
use crate::quadrature::{beta, endpoint_power_rule, gauss_legendre};
use crate::spectral::{analyze, FourierSeries};

/// Complex samples at the nodes of a sampled curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunction {
    pub values: Vec<C64>,
    pub descriptor: Option<String>,
}

impl BoundaryFunction {
    pub fn new(curve: &SampledCurve, values: Vec<C64>) -> Result<BoundaryFunction> {
        if values.len() != curve.len() {
            return Err(Error::InvalidInput(format!("{} samples for {} nodes", values.len(), curve.len())));
        }
        Ok(BoundaryFunction { values, descriptor: None })
    }

    pub fn from_fn(curve: &SampledCurve, f: impl Fn(C64) -> C64, descriptor: &str) -> BoundaryFunction {
        BoundaryFunction { values: curve.nodes.iter().map(|&z| f(z)).collect(), descriptor: Some(descriptor.into()) }
    }

    /// `e^{inθ}` with `θ = 2πσ/L` the normalized arc-length parameter.
    pub fn fourier_mode(curve: &SampledCurve, n: i64) -> BoundaryFunction {
        let m = curve.len() as f64;
        BoundaryFunction {
            values: (0..curve.len()).map(|k| C64::from_polar(1.0, 2.0 * PI * n as f64 * k as f64 / m)).collect(),
            descriptor: Some(format!("fourier mode {n} through arc length")),
        }
    }

    /// Restriction of a holomorphic function.
    pub fn from_holo(curve: &SampledCurve, f: &Holo) -> BoundaryFunction {
        BoundaryFunction::from_fn(curve, |z| f.value(z), &f.label())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// dσ-mean.
    pub fn mean(&self, curve: &SampledCurve) -> C64 {
        let terms: Vec<C64> = self.values.iter().zip(&curve.node_weights).map(|(v, w)| v * w).collect();
        exec::pairwise_sum_c(&terms) / curve.total_length
    }

    pub fn centered(&self, curve: &SampledCurve) -> BoundaryFunction {
        let m = self.mean(curve);
        BoundaryFunction { values: self.values.iter().map(|v| v - m).collect(), descriptor: self.descriptor.clone() }
    }

    pub fn scaled(&self, c: C64) -> BoundaryFunction {
        BoundaryFunction { values: self.values.iter().map(|v| v * c).collect(), descriptor: self.descriptor.clone() }
    }
}

/// Douglas norm with its diagonal-band part reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DouglasNorm {
    /// Total, band included.
    pub value: f64,
    /// Local-model contribution of the band `|k−j| ≤ 1`.
    pub band: f64,
}

fn check_open_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("s = {s} outside (0, 1)")))
    }
}

/// `∬_{band} |t−τ|^{1−2s}` summed over the cell pairs of one node:
/// the diagonal cell plus both neighbours.
fn band_factor(h: f64, s: f64) -> f64 {
    let a = 1.0 - 2.0 * s;
    let p = h.powf(a + 2.0);
    let b0 = 2.0 * p / ((a + 1.0) * (a + 2.0));
    let b1 = p * (1.0 / (a + 2.0) + 2.0 * (2f64.powf(a + 1.0) - 1.0) / (a + 1.0) - (2f64.powf(a + 2.0) - 1.0) / (a + 2.0));
    b0 + 2.0 * b1
}

fn is_band(k: usize, j: usize, n: usize) -> bool {
    let d = k.abs_diff(j);
    d.min(n - d) <= 1
}

/// Off-band kernel `h² / |z_k − z_j|^{1+2s}`.
fn douglas_kernel(curve: &SampledCurve, k: usize, j: usize, s: f64) -> f64 {
    let w = curve.node_weights[k] * curve.node_weights[j];
    w / (curve.nodes[k] - curve.nodes[j]).norm().powf(1.0 + 2.0 * s)
}

fn centered_difference(f: &[C64], k: usize, h: f64) -> C64 {
    let n = f.len();
    (f[(k + 1) % n] - f[(k + n - 1) % n]) / (2.0 * h)
}

pub fn douglas_norm(curve: &SampledCurve, f: &BoundaryFunction, s: f64) -> Result<f64> {
    Ok(douglas_norm_parts(curve, f, s)?.value)
}

pub fn douglas_norm_parts(curve: &SampledCurve, f: &BoundaryFunction, s: f64) -> Result<DouglasNorm> {
    check_open_s(s)?;
    let n = curve.len();
    if f.len() != n {
        return Err(Error::InvalidInput(format!("{} samples for {} nodes", f.len(), n)));
    }
    let v = &f.centered(curve).values;
    let h = curve.spacing();
    let rows = exec::map_range(n, |k| {
        let terms: Vec<f64> = (0..n)
            .filter(|&j| !is_band(k, j, n))
            .map(|j| (v[k] - v[j]).norm_sqr() * douglas_kernel(curve, k, j, s))
            .collect();
        exec::pairwise_sum(&terms)
    });
    let slopes: Vec<f64> = (0..n).map(|k| centered_difference(v, k, h).norm_sqr()).collect();
    let band = band_factor(h, s) * exec::pairwise_sum(&slopes);
    Ok(DouglasNorm { value: exec::pairwise_sum(&rows) + band, band })
}

/// Real symmetric `G` with `f* G f` equal to the discrete Douglas norm.
pub fn douglas_gram(curve: &SampledCurve, s: f64) -> Result<DMatrix<f64>> {
    douglas_gram_nodes(&curve.nodes, &curve.node_weights, s)
}

/// [`douglas_gram`] on a closed node sequence with trapezoid weights `w`;
/// the band model uses `w_k` as the local spacing.
pub fn douglas_gram_nodes(nodes: &[C64], w: &[f64], s: f64) -> Result<DMatrix<f64>> {
    check_open_s(s)?;
    let n = nodes.len();
    if w.len() != n || n < 4 {
        return Err(Error::InvalidInput(format!("{} weights for {} nodes", w.len(), n)));
    }
    let rows = exec::map_range(n, |k| {
        (0..n)
            .map(|j| if is_band(k, j, n) { 0.0 } else { w[k] * w[j] / (nodes[k] - nodes[j]).norm().powf(1.0 + 2.0 * s) })
            .collect::<Vec<f64>>()
    });
    let mut g = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let sum = exec::pairwise_sum(&rows[k]);
        g[(k, k)] += 2.0 * sum;
        for j in 0..n {
            g[(k, j)] -= 2.0 * rows[k][j];
        }
    }
    // band term Σ c_k |f_{k+1} − f_{k−1}|²
    for k in 0..n {
        let c = band_factor(w[k], s) / (4.0 * w[k] * w[k]);
        let (p, q) = ((k + 1) % n, (k + n - 1) % n);
        g[(p, p)] += c;
        g[(q, q)] += c;
        g[(p, q)] -= c;
        g[(q, p)] -= c;
    }
    Ok(g)
}

/// Gauss–Legendre on a segment, bisected until halves agree.
fn adaptive_segment<F>(f: &F, a: C64, b: C64, tol: f64) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let gl = gauss_legendre(16);
    let panel = |a: C64, b: C64| -> Result<C64> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            acc += f(mid + half * *x)? * *w;
        }
        Ok(acc * half)
    };
    fn rec<P: Fn(C64, C64) -> Result<C64>>(p: &P, a: C64, b: C64, whole: C64, tol: f64, depth: u32) -> Result<C64> {
        let m = 0.5 * (a + b);
        let (l, r) = (p(a, m)?, p(m, b)?);
        let both = l + r;
        if depth >= 40 || (both - whole).norm() <= tol * (1.0 + both.norm()) {
            return Ok(both);
        }
        Ok(rec(p, a, m, l, 0.5 * tol, depth + 1)? + rec(p, m, b, r, 0.5 * tol, depth + 1)?)
    }
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let whole = panel(a, b)?;
    rec(&panel, a, b, whole, tol, 0)
}

fn check_disk(z: C64) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::BranchError(format!("{z} is not in the open unit disk")))
    }
}

fn log_deriv(map: &RiemannMap, z: C64) -> Result<C64> {
    let l = map.log_deriv(z)?;
    if l.re.is_finite() && l.im.is_finite() {
        Ok(l)
    } else {
        Err(Error::BranchError(format!("log φ′ not finite at {z}")))
    }
}

/// `T_s F(z) = F(φ(z)) φ′(z)^{1/2−s}`.
pub fn ts_transform(map: &RiemannMap, f: &Holo, s: f64, z: C64) -> Result<C64> {
    check_disk(z)?;
    Ok(f.value(map.eval(z)?) * ((0.5 - s) * log_deriv(map, z)?).exp())
}

/// `V_s(F)′(z) = (F∘φ)′(z) φ′(z)^{1/2−s}`.
pub fn vs_derivative(map: &RiemannMap, f: &Holo, s: f64, z: C64) -> Result<C64> {
    check_disk(z)?;
    let l = log_deriv(map, z)?;
    let fprime = if f.is_affine() { f.deriv(C64::new(0.0, 0.0)) } else { f.deriv(map.eval(z)?) };
    Ok(fprime * ((1.5 - s) * l).exp())
}

/// `V_s(F)(z) = ∫_0^z (F∘φ)′ φ′^{1/2−s}` along the segment from 0.
pub fn vs_transform(map: &RiemannMap, f: &Holo, s: f64, z: C64) -> Result<C64> {
    check_disk(z)?;
    adaptive_segment(&|u| vs_derivative(map, f, s, u), C64::new(0.0, 0.0), z, 1e-13)
}

/// `S G(z) = ∫_0^z G φ″/φ′`.
pub fn s_operator<G>(map: &RiemannMap, g: G, z: C64) -> Result<C64>
where
    G: Fn(C64) -> Result<C64>,
{
    check_disk(z)?;
    adaptive_segment(&|u| Ok(g(u)? * map.deriv_ratio(u)), C64::new(0.0, 0.0), z, 1e-13)
}

/// Polar quadrature of a function on the disk with radial weight
/// `(1−r)^{a}`: nodes `(r, θ, weight)` with `r dr dθ` included.
struct DiskGrid {
    radii: Vec<f64>,
    radial_w: Vec<f64>,
    thetas: Vec<f64>,
    angular_w: Vec<f64>,
}

fn angular_grid(args: &[f64], levels: u32, max_panel: f64) -> (Vec<f64>, Vec<f64>) {
    if !args.is_empty() {
        return graded_grid(args, levels, max_panel);
    }
    let gl = gauss_legendre(16);
    let m = (2.0 * PI / max_panel).ceil() as usize;
    let h = 2.0 * PI / m as f64;
    let mut t = Vec::new();
    let mut w = Vec::new();
    for p in 0..m {
        for (x, wt) in gl.mapped(h * p as f64, h * (p + 1) as f64) {
            t.push(x);
            w.push(wt);
        }
    }
    (t, w)
}

impl DiskGrid {
    /// Radial panels `[0, ½], [½, ¾], …` with `levels` geometric panels and a
    /// final endpoint-weighted panel.
    fn new(a: f64, order: usize, levels: u32, args: &[f64], max_panel: f64) -> DiskGrid {
        let gl = gauss_legendre(order);
        let mut radii = Vec::new();
        let mut radial_w = Vec::new();
        let mut lo = 0.0;
        for l in 1..=levels {
            let hi = 1.0 - 0.5f64.powi(l as i32);
            for (r, w) in gl.mapped(lo, hi) {
                radii.push(r);
                radial_w.push(w * (1.0 - r).powf(a) * r);
            }
            lo = hi;
        }
        for (x, w) in endpoint_power_rule(order, a, 1.0 - lo) {
            let r = 1.0 - x;
            radii.push(r);
            radial_w.push(w * r);
        }
        let (thetas, angular_w) = angular_grid(args, levels + 2, max_panel);
        DiskGrid { radii, radial_w, thetas, angular_w }
    }
}

/// `φ` along the ray at angle `theta` at increasing radii; Schwarz–Christoffel
/// maps integrate `φ′` outward, others evaluate directly.
fn phi_on_ray(map: &RiemannMap, theta: f64, radii: &[f64]) -> Result<Vec<C64>> {
    if !matches!(map, RiemannMap::Sc(_)) {
        return radii.iter().map(|&r| map.eval(C64::from_polar(r, theta))).collect();
    }
    let gl = gauss_legendre(16);
    let dir = C64::from_polar(1.0, theta);
    let mut out = Vec::with_capacity(radii.len());
    let mut rho = 0.0;
    let mut w = map.anchor();
    for &target in radii {
        while rho < target {
            let next = target.min(rho + 0.5 * (1.0 - rho));
            let mut acc = C64::new(0.0, 0.0);
            for (x, wt) in gl.mapped(rho, next) {
                acc += log_deriv(map, dir * x)?.exp() * wt;
            }
            w += acc * dir;
            rho = next;
        }
        out.push(w);
    }
    Ok(out)
}

/// Pullback energy with its two-resolution error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullbackEnergy {
    pub value: f64,
    /// Relative difference between the two resolutions.
    pub richardson: f64,
}

fn pullback_on(map: &RiemannMap, f: &Holo, s: f64, grid: &DiskGrid) -> Result<f64> {
    let need_phi = !f.is_affine();
    let mut order: Vec<usize> = (0..grid.radii.len()).collect();
    order.sort_by(|&i, &j| grid.radii[i].total_cmp(&grid.radii[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| grid.radii[i]).collect();
    let rays = exec::map_range(grid.thetas.len(), |i| -> Result<f64> {
        let theta = grid.thetas[i];
        let phis = if need_phi { Some(phi_on_ray(map, theta, &sorted)?) } else { None };
        let mut terms = Vec::with_capacity(sorted.len());
        for (pos, &ri) in order.iter().enumerate() {
            let z = C64::from_polar(sorted[pos], theta);
            let l = log_deriv(map, z)?;
            let fp = match &phis {
                Some(p) => f.deriv(p[pos]),
                None => f.deriv(C64::new(0.0, 0.0)),
            };
            terms.push(fp.norm_sqr() * ((3.0 - 2.0 * s) * l.re).exp() * grid.radial_w[ri]);
        }
        Ok(exec::pairwise_sum(&terms) * grid.angular_w[i])
    });
    let rays: Vec<f64> = rays.into_iter().collect::<Result<_>>()?;
    Ok(exec::pairwise_sum(&rays))
}

/// `∬_𝔻 |(F∘φ)′|² |φ′|^{1−2s} (1−|z|)^{1−2s} dxdy`.
pub fn pullback_energy(map: &RiemannMap, f: &Holo, s: f64) -> Result<PullbackEnergy> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1)")));
    }
    let a = 1.0 - 2.0 * s;
    let args = map.singular_args();
    let (levels, order) = if args.is_empty() { (8, 16) } else { (28, 8) };
    let coarse = pullback_on(map, f, s, &DiskGrid::new(a, order, levels, &args, 2.0 * PI / 32.0))?;
    let fine = pullback_on(map, f, s, &DiskGrid::new(a, order + 4, levels + 6, &args, 2.0 * PI / 64.0))?;
    let richardson = (fine - coarse).abs() / fine.abs().max(1e-300);
    if richardson > 0.02 {
        return Err(Error::QuadratureFailure { achieved: richardson, wanted: 0.02 });
    }
    Ok(PullbackEnergy { value: fine, richardson })
}

/// `∬_𝔻 (|A′|² + |B′|²) |φ′|^{1−2s} (1−|z|)^{1−2s} dxdy` where
/// `g = a₀ + A + conj(B)` on 𝕋 and `g` is sampled at `t_j = 2πj/M`.
///
/// For the trace of a holomorphic `F`, `g = F∘φ` and the value matches
/// [`pullback_energy`]. Each radius is summed by FFT on the uniform angles.
pub fn trace_pullback_energy(map: &RiemannMap, g: &[C64], s: f64) -> Result<PullbackEnergy> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1)")));
    }
    let m = g.len();
    let series = analyze(g)?;
    let half = m as i64 / 2;
    let a = 1.0 - 2.0 * s;
    let on = |grid: &DiskGrid| -> Result<f64> {
        let rows = exec::map_range(grid.radii.len(), |i| -> Result<f64> {
            let r = grid.radii[i];
            // A′(z) = Σ n a_n z^{n−1}, B′(z) = Σ n conj(a_{−n}) z^{n−1}
            let mut da = vec![];
            let mut db = vec![];
            for n in 1..half {
                let rn = r.powi(n as i32 - 1) * n as f64;
                da.push((n - 1, series.coeff(n) * rn));
                db.push((n - 1, series.coeff(-n).conj() * rn));
            }
            let va = FourierSeries::from_modes(m, &da)?.synthesize();
            let vb = FourierSeries::from_modes(m, &db)?.synthesize();
            let mut terms = Vec::with_capacity(m);
            for j in 0..m {
                let z = C64::from_polar(r, 2.0 * PI * j as f64 / m as f64);
                let w = (a * log_deriv(map, z)?.re).exp();
                terms.push((va[j].norm_sqr() + vb[j].norm_sqr()) * w);
            }
            Ok(exec::pairwise_sum(&terms) * 2.0 * PI / m as f64 * grid.radial_w[i])
        });
        let rows: Vec<f64> = rows.into_iter().collect::<Result<_>>()?;
        Ok(exec::pairwise_sum(&rows))
    };
    let coarse = on(&DiskGrid::new(a, 8, 20, &[], 2.0 * PI))?;
    let fine = on(&DiskGrid::new(a, 12, 26, &[], 2.0 * PI))?;
    Ok(PullbackEnergy { value: fine, richardson: (fine - coarse).abs() / fine.abs().max(1e-300) })
}

/// Exterior pullback energy on the circle of radius `R` through
/// `ψ(z) = R/z`: `R^{1−2s} Σ_n |ĝ(n)|² 2π n² B(2|n|−2+4s, 2−2s)` for samples
/// `g(R e^{2πij/M})`.
pub fn circle_exterior_pullback(g: &[C64], radius: f64, s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1)")));
    }
    let series = analyze(g)?;
    let terms: Vec<f64> = series
        .modes()
        .filter(|(n, _)| *n != 0)
        .map(|(n, c)| {
            let nf = n.unsigned_abs() as f64;
            c.norm_sqr() * 2.0 * PI * nf * nf * beta(2.0 * nf - 2.0 + 4.0 * s, 2.0 - 2.0 * s)
        })
        .collect();
    Ok(radius.powf(1.0 - 2.0 * s) * exec::pairwise_sum(&terms))
}

/// Weight of the direct grid energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergyWeight {
    /// `d(z,Γ)^{1−2s}`.
    Distance,
    /// `((R² − |z−c|²)/R)^{1−2s}`, the disk defect, equal to `(1−|z|²)^{1−2s}`
    /// on the unit disk.
    DiskDefect { center: C64, radius: f64 },
}

/// Quadtree options for [`direct_weighted_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectOptions {
    /// Base grid cells per side of the bounding square.
    pub base: usize,
    /// Maximum refinement depth below the base grid.
    pub max_depth: u32,
    pub weight: EnergyWeight,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions { base: 256, max_depth: 6, weight: EnergyWeight::Distance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectEnergy {
    pub value: f64,
    /// Share of the value coming from cells that hit the depth cap.
    pub capped_fraction: f64,
    /// Set when `capped_fraction > 1%`.
    pub partial: bool,
    pub cells: usize,
}

struct Quadtree<'a, U: Harmonic + ?Sized> {
    u: &'a U,
    index: &'a DistanceIndex,
    /// Radius of an origin-centred circle curve, located exactly.
    disk: Option<f64>,
    s: f64,
    opts: DirectOptions,
}

#[derive(Default)]
struct CellSums {
    terms: Vec<f64>,
    capped: f64,
    cells: usize,
}

impl<U: Harmonic + ?Sized> Quadtree<'_, U> {
    /// Base `b` of the weight `b^{1−2s}` at `z` and its gradient norm.
    fn base(&self, z: C64, d: f64) -> (f64, f64) {
        match self.opts.weight {
            EnergyWeight::Distance => (d, 1.0),
            EnergyWeight::DiskDefect { center, radius } => ((radius * radius - (z - center).norm_sqr()) / radius, 2.0 * (z - center).norm() / radius),
        }
    }

    /// Weight at the centre, or on capped cells its mean over the inside
    /// part of the normal slab `b ± g·size/2`, which resolves `b^{1−2s}`
    /// when it is singular on Γ.
    fn weight(&self, z: C64, d: f64, size: f64, capped: bool) -> f64 {
        let a = 1.0 - 2.0 * self.s;
        let (b, g) = self.base(z, d);
        if !capped || g * size <= 0.0 {
            return b.max(0.0).powf(a);
        }
        let hi = b + 0.5 * g * size;
        let lo = (b - 0.5 * g * size).max(0.0);
        if hi <= lo {
            return 0.0;
        }
        (hi.powf(a + 1.0) - lo.powf(a + 1.0)) / ((a + 1.0) * (hi - lo))
    }

    fn midpoint(&self, c: C64, size: f64, d: f64, capped: bool) -> f64 {
        let step = size / 8.0;
        let i = C64::i();
        let ux = (self.u.value(c + step) - self.u.value(c - step)) / (2.0 * step);
        let uy = (self.u.value(c + i * step) - self.u.value(c - i * step)) / (2.0 * step);
        (ux.norm_sqr() + uy.norm_sqr()) * self.weight(c, d, size, capped) * size * size
    }

    fn locate(&self, z: C64) -> (f64, bool) {
        match self.disk {
            Some(r) => ((r - z.norm()).abs(), z.norm() < r),
            None => self.index.locate(z),
        }
    }

    fn visit(&self, c: C64, size: f64, depth: u32, out: &mut CellSums) {
        let (d, inside) = self.locate(c);
        let half_diag = size * std::f64::consts::FRAC_1_SQRT_2;
        if d > half_diag && !inside {
            return;
        }
        if d > half_diag && size < d / 4.0 {
            out.terms.push(self.midpoint(c, size, d, false));
            out.cells += 1;
            return;
        }
        if depth >= self.opts.max_depth {
            if inside {
                let v = self.midpoint(c, size, d, true);
                out.terms.push(v);
                out.capped += v;
                out.cells += 1;
            }
            return;
        }
        let q = size / 4.0;
        for (dx, dy) in [(-q, -q), (q, -q), (-q, q), (q, q)] {
            self.visit(c + C64::new(dx, dy), size / 2.0, depth + 1, out);
        }
    }
}

/// `∬_{Ω_i} |∇u|² w(z) dxdy` with cells split until `size < d/4`.
pub fn direct_weighted_energy<U: Harmonic + ?Sized>(
    curve: &SampledCurve,
    u: &U,
    s: f64,
    opts: DirectOptions,
) -> Result<DirectEnergy> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1)")));
    }
    if opts.base == 0 {
        return Err(Error::InvalidParameter("base grid must be nonempty".into()));
    }
    let index = DistanceIndex::new(curve);
    let (mut lo, mut hi) = (curve.nodes[0], curve.nodes[0]);
    for z in &curve.nodes {
        lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let side = (hi.re - lo.re).max(hi.im - lo.im) * (1.0 + 1e-9);
    let center = 0.5 * (lo + hi);
    let corner = center - C64::new(0.5 * side, 0.5 * side);
    let size = side / opts.base as f64;
    let disk = match curve.spec {
        Some(CurveSpec::Circle { radius }) if (curve.nodes[0] - C64::new(radius, 0.0)).norm() < 1e-12 * radius => Some(radius),
        _ => None,
    };
    let tree = Quadtree { u, index: &index, disk, s, opts };
    let rows = exec::map_range(opts.base, |j| {
        let mut sums = CellSums::default();
        for i in 0..opts.base {
            let c = corner + C64::new((i as f64 + 0.5) * size, (j as f64 + 0.5) * size);
            tree.visit(c, size, 0, &mut sums);
        }
        (exec::pairwise_sum(&sums.terms), sums.capped, sums.cells)
    });
    let value = exec::pairwise_sum(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let capped = exec::pairwise_sum(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let cells = rows.iter().map(|r| r.2).sum();
    let capped_fraction = if value > 0.0 { capped / value } else { 0.0 };
    Ok(DirectEnergy { value, capped_fraction, partial: capped_fraction > 0.01, cells })
}

/// Radii at which [`hardy_norm_e2`] samples the level curves.
pub const HARDY_RADII: [f64; 3] = [0.9, 0.99, 0.999];

/// `(1/2π) ∫ |F(φ(re^{it}))|² |φ′(re^{it})| dt` on one level curve.
pub fn level_curve_mean(map: &RiemannMap, f: &Holo, r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("radius {r} not in [0, 1)")));
    }
    let levels = ((1.0 / (1.0 - r)).log2().ceil() as u32 + 4).min(50);
    let (t, w) = angular_grid(&map.singular_args(), levels, 2.0 * PI / 64.0);
    let vals = exec::map_range(t.len(), |i| -> Result<f64> {
        let z = C64::from_polar(r, t[i]);
        let phi = if f.is_constant() { C64::new(0.0, 0.0) } else { phi_on_ray(map, t[i], &[r])?[0] };
        Ok(f.value(phi).norm_sqr() * log_deriv(map, z)?.re.exp() * w[i])
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(exec::pairwise_sum(&vals) / (2.0 * PI))
}

/// `sup_r` of [`level_curve_mean`] over [`HARDY_RADII`].
pub fn hardy_norm_e2(map: &RiemannMap, f: &Holo) -> Result<f64> {
    let mut best = 0.0f64;
    for r in HARDY_RADII {
        best = best.max(level_curve_mean(map, f, r)?);
    }
    Ok(best)
}

/// Result of [`gradient_decay_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `max |∇u(z)| d(z,Γ)^{3/2−s} / √E` over the probes.
    pub max_ratio: f64,
    /// Mean-value constant `C_mv`.
    pub bound: f64,
    pub within_bound: bool,
}

/// `C_mv = 2·(3/2)^{|s−1/2|}/√π · 2`.
///
/// Mean value over `D(z, d/2)`: `|∇u(z)| ≤ (d/2)^{-1} (π (d/2)²)^{-1/2}
/// ‖∇u‖_{L²(D)}`, and on `D` the weight `d(·,Γ)^{1−2s}` is within
/// `(3/2)^{|1−2s|}` of `d^{1−2s}`; the outer factor 2 absorbs the
/// half-radius Cauchy estimate.
pub fn mean_value_constant(s: f64) -> f64 {
    2.0 * 1.5f64.powf((s - 0.5).abs()) / PI.sqrt() * 2.0
}

pub fn gradient_decay_check<U: Harmonic + ?Sized>(
    u: &U,
    curve: &SampledCurve,
    s: f64,
    probes: &[C64],
    energy: f64,
) -> DecayReport {
    let index = DistanceIndex::new(curve);
    let bound = mean_value_constant(s);
    if energy <= 0.0 {
        return DecayReport { max_ratio: 0.0, bound, within_bound: true };
    }
    let ratios = exec::map_slice(probes, |&z| {
        let (ux, uy) = u.gradient(z);
        let g = (ux.norm_sqr() + uy.norm_sqr()).sqrt();
        g * index.distance(z).powf(1.5 - s) / energy.sqrt()
    });
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    DecayReport { max_ratio, bound, within_bound: max_ratio <= bound }
}

/// One row of the norms table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub s: f64,
    pub douglas: f64,
    pub pullback_interior: f64,
    pub pullback_exterior: Option<f64>,
    pub direct_grid: Option<f64>,
    pub hardy_e2: Option<f64>,
    pub band_correction: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "curve_id,s,N,douglas,pullback_i,pullback_e,direct,band_corr";

    pub fn csv_row(&self, curve_id: &str, n: usize) -> String {
        format!(
            "{curve_id},{},{n},{:.12e},{:.12e},{},{},{:.12e}",
            self.s,
            self.douglas,
            self.pullback_interior,
            opt(self.pullback_exterior),
            opt(self.direct_grid),
            self.band_correction
        )
    }
}

//! Jordan curves: specifications, arc-length sampling and geometric constants.
//!
//! A [`CurveSpec`] describes a positively oriented closed curve. [`build_curve`]
//! turns it into a [`SampledCurve`] whose nodes sit at equal arc-length
//! spacing. Polygonal curves (polygons, Koch prefractals, reparametrized
//! polylines) are sampled exactly: the node polyline coincides with the curve
//! and corner vertices are nodes whenever the spacing divides every edge.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;

/// Validation threshold on the spacing of consecutive nodes.
pub const EPS_GEOM: f64 = 0.05;

/// Turning angle above which a polyline vertex counts as a corner.
const CORNER_TURN: f64 = 0.05;

/// Closed-curve description. Orientation is always positive (counterclockwise);
/// clockwise polygons are reversed on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSpec {
    Circle {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// `r(θ) = Σ coeffs[k] cos(kθ)` for keys `k ≥ 0`, plus `coeffs[-k] sin(kθ)`
    /// for negative keys.
    PolarLipschitz {
        coeffs: BTreeMap<String, f64>,
    },
    /// Koch snowflake prefractal built on a counterclockwise equilateral
    /// triangle with the given side.
    Koch {
        level: u32,
        side: f64,
    },
}

/// Whether the sampled curve is a polyline (exact) or a smooth curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveClass {
    Smooth,
    Polygonal,
}

/// Equal-arc-length samples of a Jordan curve.
#[derive(Debug, Clone)]
pub struct SampledCurve {
    /// `z_k = λ(k L / N)`.
    pub nodes: Vec<C64>,
    pub total_length: f64,
    /// Unit tangents (for polygonal curves: direction of the outgoing edge).
    pub tangents: Vec<C64>,
    /// Trapezoid weights in dσ (all equal to `L/N`).
    pub node_weights: Vec<f64>,
    /// Signed curvature at the nodes (zero on polygonal curves).
    pub curvature: Vec<f64>,
    /// Node indices that are corners of a polygonal curve.
    pub corners: Vec<usize>,
    /// Corner vertices of the polyline (polygonal curves only).
    pub vertices: Vec<C64>,
    pub class: CurveClass,
    pub spec: Option<CurveSpec>,
    /// A point of the interior domain, used for winding checks.
    pub interior_probe: C64,
}

/// Chord-arc constant, diameter and (for polar graphs) the Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    pub chord_arc_k: f64,
    pub diameter: f64,
    pub lipschitz_m: Option<f64>,
}

impl CurveSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CurveSpec::Circle { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidCurve(format!("circle radius {radius} must be positive")));
                }
            }
            CurveSpec::Ellipse { a, b } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(Error::InvalidCurve("ellipse semi-axes must be positive".into()));
                }
            }
            CurveSpec::Polygon { vertices } => {
                let v = to_complex(vertices);
                check_simple_polygon(&v)?;
            }
            CurveSpec::PolarLipschitz { .. } => {
                let modes = self.polar_modes()?;
                let n = 4096;
                let min_r = (0..n)
                    .map(|k| polar_eval(&modes, 2.0 * PI * k as f64 / n as f64).0)
                    .fold(f64::INFINITY, f64::min);
                if !(min_r > 0.0) {
                    return Err(Error::InvalidCurve(format!("polar radius reaches {min_r:.3e} ≤ 0")));
                }
            }
            CurveSpec::Koch { level, side } => {
                if *level > 8 {
                    return Err(Error::InvalidCurve(format!("Koch level {level} exceeds 8")));
                }
                if !(*side > 0.0) {
                    return Err(Error::InvalidCurve("Koch side must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Parsed polar modes `(k, cos coefficient, sin coefficient)`.
    pub fn polar_modes(&self) -> Result<Vec<(u32, f64, f64)>> {
        let CurveSpec::PolarLipschitz { coeffs } = self else {
            return Err(Error::InvalidCurve("not a polar_lipschitz curve".into()));
        };
        let mut modes: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
        for (key, &c) in coeffs {
            let k: i64 = key
                .trim()
                .parse()
                .map_err(|_| Error::InvalidCurve(format!("bad polar mode key {key:?}")))?;
            let entry = modes.entry(k.unsigned_abs() as u32).or_insert((0.0, 0.0));
            if k >= 0 {
                entry.0 += c;
            } else {
                entry.1 += c;
            }
        }
        Ok(modes.into_iter().map(|(k, (a, b))| (k, a, b)).collect())
    }

    /// `(r, r', r'')` of a polar curve at angle `theta`.
    pub fn polar_radius(&self, theta: f64) -> Result<(f64, f64, f64)> {
        Ok(polar_eval(&self.polar_modes()?, theta))
    }

    /// Corner vertices (counterclockwise) of polygonal specs.
    pub fn polygon_vertices(&self) -> Option<Vec<C64>> {
        match self {
            CurveSpec::Polygon { vertices } => Some(orient_ccw(to_complex(vertices))),
            CurveSpec::Koch { level, side } => Some(koch_vertices(*level, *side)),
            _ => None,
        }
    }

    /// Convenience constructor for `r(θ) = r0 + a cos(kθ)`.
    pub fn polar_cosine(r0: f64, k: u32, a: f64) -> CurveSpec {
        let mut coeffs = BTreeMap::new();
        coeffs.insert("0".to_string(), r0);
        if k == 0 {
            coeffs.insert("0".to_string(), r0 + a);
        } else {
            coeffs.insert(k.to_string(), a);
        }
        CurveSpec::PolarLipschitz { coeffs }
    }

    pub fn square(half_side: f64) -> CurveSpec {
        let h = half_side;
        CurveSpec::Polygon { vertices: vec![[h, -h], [h, h], [-h, h], [-h, -h]] }
    }
}

fn polar_eval(modes: &[(u32, f64, f64)], theta: f64) -> (f64, f64, f64) {
    let mut r = 0.0;
    let mut dr = 0.0;
    let mut d2r = 0.0;
    for &(k, a, b) in modes {
        let kf = k as f64;
        let (s, c) = (kf * theta).sin_cos();
        r += a * c + b * s;
        dr += kf * (-a * s + b * c);
        d2r += -kf * kf * (a * c + b * s);
    }
    (r, dr, d2r)
}

fn to_complex(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

/// Signed area of a closed polyline (positive when counterclockwise).
pub fn signed_area(v: &[C64]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|k| {
        let a = v[k];
        let b = v[(k + 1) % n];
        a.re * b.im - b.re * a.im
    }).sum::<f64>()
}

fn orient_ccw(mut v: Vec<C64>) -> Vec<C64> {
    if signed_area(&v) < 0.0 {
        v.reverse();
    }
    v
}

fn koch_vertices(level: u32, side: f64) -> Vec<C64> {
    let mut pts = vec![C64::new(0.0, 0.0), C64::new(side, 0.0), C64::from_polar(side, PI / 3.0)];
    let rot = C64::from_polar(1.0, -PI / 3.0);
    for _ in 0..level {
        let n = pts.len();
        let mut next = Vec::with_capacity(4 * n);
        for k in 0..n {
            let a = pts[k];
            let b = pts[(k + 1) % n];
            let d = (b - a) / 3.0;
            let p1 = a + d;
            next.push(a);
            next.push(p1);
            next.push(p1 + d * rot);
            next.push(a + 2.0 * d);
        }
        pts = next;
    }
    pts
}

fn segments_intersect(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    fn orient(a: C64, b: C64, c: C64) -> f64 {
        (b - a).re * (c - a).im - (b - a).im * (c - a).re
    }
    fn on_seg(a: C64, b: C64, c: C64) -> bool {
        c.re >= a.re.min(b.re) - 1e-15
            && c.re <= a.re.max(b.re) + 1e-15
            && c.im >= a.im.min(b.im) - 1e-15
            && c.im <= a.im.max(b.im) + 1e-15
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_seg(q1, q2, p1))
        || (d2 == 0.0 && on_seg(q1, q2, p2))
        || (d3 == 0.0 && on_seg(p1, p2, q1))
        || (d4 == 0.0 && on_seg(p1, p2, q2))
}

/// Segment-pair simplicity test for a closed polygon.
pub fn check_simple_polygon(v: &[C64]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return Err(Error::InvalidCurve("polygon needs at least 3 vertices".into()));
    }
    for k in 0..n {
        if (v[(k + 1) % n] - v[k]).norm() == 0.0 {
            return Err(Error::InvalidCurve(format!("repeated vertex {k}")));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Err(Error::InvalidCurve(format!("edges {i} and {j} intersect")));
            }
        }
    }
    if signed_area(v).abs() == 0.0 {
        return Err(Error::InvalidCurve("zero-area polygon".into()));
    }
    Ok(())
}

/// Samples `spec` at `n` equal arc-length nodes.
pub fn build_curve(spec: &CurveSpec, n: usize) -> Result<SampledCurve> {
    if n < 16 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!("node count {n} must be even and ≥ 16")));
    }
    spec.validate()?;
    let mut curve = match spec {
        CurveSpec::Circle { radius } => {
            let r = *radius;
            let nodes: Vec<C64> = (0..n).map(|k| C64::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect();
            let tangents = (0..n).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64) * C64::i()).collect();
            let length = 2.0 * PI * r;
            SampledCurve {
                nodes,
                total_length: length,
                tangents,
                node_weights: vec![length / n as f64; n],
                curvature: vec![1.0 / r; n],
                corners: vec![],
                vertices: vec![],
                class: CurveClass::Smooth,
                spec: None,
                interior_probe: C64::new(0.0, 0.0),
            }
        }
        CurveSpec::Ellipse { a, b } => {
            let (a, b) = (*a, *b);
            sample_smooth(
                n,
                move |t| {
                    let (s, c) = t.sin_cos();
                    (C64::new(a * c, b * s), C64::new(-a * s, b * c), C64::new(-a * c, -b * s))
                },
                C64::new(0.0, 0.0),
            )
        }
        CurveSpec::PolarLipschitz { .. } => {
            let modes = spec.polar_modes()?;
            sample_smooth(
                n,
                move |t| {
                    let (r, dr, d2r) = polar_eval(&modes, t);
                    let e = C64::from_polar(1.0, t);
                    let i = C64::i();
                    let z = r * e;
                    let dz = (dr + i * r) * e;
                    let d2z = (d2r + 2.0 * i * dr - r) * e;
                    (z, dz, d2z)
                },
                C64::new(0.0, 0.0),
            )
        }
        CurveSpec::Polygon { .. } | CurveSpec::Koch { .. } => {
            let verts = spec.polygon_vertices().expect("polygonal spec");
            sample_polyline(&verts, n)?
        }
    };
    curve.spec = Some(spec.clone());
    curve.check_invariants()?;
    Ok(curve)
}

/// Smooth-curve sampler: arc length by spectral integration of the speed,
/// inverted with Newton's method.
fn sample_smooth<F>(n: usize, param: F, probe: C64) -> SampledCurve
where
    F: Fn(f64) -> (C64, C64, C64) + Sync + Send,
{
    let m = (8 * n).max(4096);
    let speed: Vec<C64> = (0..m)
        .map(|j| C64::new(param(2.0 * PI * j as f64 / m as f64).1.norm(), 0.0))
        .collect();
    let mut spec = speed.clone();
    FftPlanner::new().plan_fft_forward(m).process(&mut spec);
    let inv_m = 1.0 / m as f64;
    let c0 = spec[0].re * inv_m;
    let length = 2.0 * PI * c0;
    // periodic part of s(θ) = c0 θ + Σ c_k (e^{ikθ} - 1)/(ik)
    let mut modes: Vec<(f64, C64)> = Vec::new();
    for j in 1..m / 2 {
        let c = spec[j] * inv_m;
        let cm = spec[m - j] * inv_m;
        let k = j as f64;
        if c.norm() > 1e-17 * c0 || cm.norm() > 1e-17 * c0 {
            modes.push((k, c));
            modes.push((-k, cm));
        }
    }
    let arc = |theta: f64| -> f64 {
        let mut s = c0 * theta;
        for &(k, c) in &modes {
            let e = C64::from_polar(1.0, k * theta) - 1.0;
            s += (c * e / C64::new(0.0, k)).re;
        }
        s
    };
    let thetas: Vec<f64> = exec::map_range(n, |k| {
        let target = length * k as f64 / n as f64;
        let mut theta = 2.0 * PI * k as f64 / n as f64;
        for _ in 0..50 {
            let f = arc(theta) - target;
            let ds = param(theta).1.norm();
            let step = f / ds;
            theta -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        theta
    });
    let mut nodes = Vec::with_capacity(n);
    let mut tangents = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    for &t in &thetas {
        let (z, dz, d2z) = param(t);
        let sp = dz.norm();
        nodes.push(z);
        tangents.push(dz / sp);
        curvature.push((dz.conj() * d2z).im / sp.powi(3));
    }
    SampledCurve {
        nodes,
        total_length: length,
        tangents,
        node_weights: vec![length / n as f64; n],
        curvature,
        corners: vec![],
        vertices: vec![],
        class: CurveClass::Smooth,
        spec: None,
        interior_probe: probe,
    }
}

fn corner_vertices(path: &[C64]) -> Vec<usize> {
    let m = path.len();
    (0..m)
        .filter(|&k| {
            let din = path[k] - path[(k + m - 1) % m];
            let dout = path[(k + 1) % m] - path[k];
            (dout / din).arg().abs() > CORNER_TURN
        })
        .collect()
}

/// Equal arc-length sampling of a closed polyline by linear interpolation of
/// the cumulative chord length.
fn sample_polyline(path: &[C64], n: usize) -> Result<SampledCurve> {
    let m = path.len();
    for k in 0..m {
        if (path[(k + 1) % m] - path[k]).norm() <= 1e-14 * (1.0 + path[k].norm()) {
            return Err(Error::DegeneratePath(format!("repeated consecutive points at index {k}")));
        }
    }
    let path = orient_ccw(path.to_vec());
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    for k in 0..m {
        cum.push(cum[k] + (path[(k + 1) % m] - path[k]).norm());
    }
    let length = cum[m];
    let h = length / n as f64;
    let corner_idx = corner_vertices(&path);
    let mut nodes = Vec::with_capacity(n);
    let mut tangents = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let sigma = h * k as f64;
        while seg + 1 < m && cum[seg + 1] <= sigma + 1e-12 * length {
            seg += 1;
        }
        let a = path[seg];
        let b = path[(seg + 1) % m];
        let frac = ((sigma - cum[seg]) / (cum[seg + 1] - cum[seg])).clamp(0.0, 1.0);
        let frac = if frac < 1e-12 { 0.0 } else { frac };
        nodes.push(a + (b - a) * frac);
        tangents.push((b - a) / (b - a).norm());
    }
    let mut corners = Vec::new();
    for &ci in &corner_idx {
        let s = cum[ci];
        let k = (s / h).round() as usize % n;
        if (nodes[k] - path[ci]).norm() <= 1e-9 * length {
            corners.push(k);
        }
    }
    corners.sort_unstable();
    let vertices: Vec<C64> = corner_idx.iter().map(|&i| path[i]).collect();
    let probe = interior_point(&path);
    Ok(SampledCurve {
        nodes,
        total_length: length,
        tangents,
        node_weights: vec![h; n],
        curvature: vec![0.0; n],
        corners,
        vertices,
        class: CurveClass::Polygonal,
        spec: None,
        interior_probe: probe,
    })
}

/// Reparametrizes a closed polyline by arc length with `n` nodes.
pub fn reparametrize_arclength(path: &[C64], n: usize) -> Result<SampledCurve> {
    if path.len() < 3 {
        return Err(Error::DegeneratePath("need at least 3 points".into()));
    }
    if n < 4 {
        return Err(Error::InvalidInput("need at least 4 output nodes".into()));
    }
    sample_polyline(path, n)
}

/// A point strictly inside a simple polygon (midpoint of the first crossing
/// interval on the horizontal line through the vertex mean).
pub fn interior_point(v: &[C64]) -> C64 {
    let m = v.len();
    let (ymin, ymax) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), z| (a.min(z.im), b.max(z.im)));
    let mean_y = v.iter().map(|z| z.im).sum::<f64>() / m as f64;
    for trial in 0..64 {
        let frac = 0.5 + 0.37 * ((trial as f64 * 0.618_033_988_7) % 1.0 - 0.5);
        let y = if trial == 0 { mean_y } else { ymin + frac * (ymax - ymin) };
        let mut xs: Vec<f64> = (0..m)
            .filter_map(|k| {
                let a = v[k];
                let b = v[(k + 1) % m];
                if (a.im <= y && b.im > y) || (b.im <= y && a.im > y) {
                    Some(a.re + (y - a.im) / (b.im - a.im) * (b.re - a.re))
                } else {
                    None
                }
            })
            .collect();
        if xs.len() >= 2 {
            xs.sort_by(f64::total_cmp);
            let widest = xs.chunks(2).filter(|c| c.len() == 2).max_by(|p, q| (p[1] - p[0]).total_cmp(&(q[1] - q[0])));
            if let Some(c) = widest {
                if c[1] - c[0] > 1e-12 {
                    return C64::new(0.5 * (c[0] + c[1]), y);
                }
            }
        }
    }
    v.iter().sum::<C64>() / m as f64
}

/// Winding number of a closed polyline about `z`.
pub fn winding_number(nodes: &[C64], z: C64) -> i64 {
    let n = nodes.len();
    let total: f64 = (0..n).map(|k| ((nodes[(k + 1) % n] - z) / (nodes[k] - z)).arg()).sum();
    (total / (2.0 * PI)).round() as i64
}

/// Crossing-number point-in-polygon test.
pub fn point_in_polygon(nodes: &[C64], z: C64) -> bool {
    let n = nodes.len();
    let mut inside = false;
    for k in 0..n {
        let a = nodes[k];
        let b = nodes[(k + 1) % n];
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if z.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Inside mask for cell centers `(xs[i], ys[j])`, stored row-major (`j * nx + i`).
pub fn inside_mask(nodes: &[C64], xs: &[f64], ys: &[f64]) -> Vec<bool> {
    let n = nodes.len();
    let nx = xs.len();
    let rows: Vec<Vec<bool>> = exec::map_slice(ys, |&y| {
        let mut cross: Vec<f64> = (0..n)
            .filter_map(|k| {
                let a = nodes[k];
                let b = nodes[(k + 1) % n];
                if (a.im > y) != (b.im > y) {
                    Some(a.re + (y - a.im) / (b.im - a.im) * (b.re - a.re))
                } else {
                    None
                }
            })
            .collect();
        cross.sort_by(f64::total_cmp);
        let mut row = vec![false; nx];
        let mut c = 0;
        for (i, &x) in xs.iter().enumerate() {
            while c < cross.len() && cross[c] <= x {
                c += 1;
            }
            row[i] = c % 2 == 1;
        }
        row
    });
    rows.into_iter().flatten().collect()
}

fn point_segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

impl SampledCurve {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.total_length / self.nodes.len() as f64
    }

    /// Arc-length coordinate of node `k`.
    pub fn arclength(&self, k: usize) -> f64 {
        self.spacing() * k as f64
    }

    pub fn diameter(&self) -> f64 {
        let n = self.nodes.len();
        let rows = exec::map_range(n, |i| {
            let zi = self.nodes[i];
            self.nodes[i + 1..].iter().map(|z| (z - zi).norm()).fold(0.0, f64::max)
        });
        exec::max_of(&rows)
    }

    /// Outward unit normal at node `k` (tangent rotated clockwise).
    pub fn outward_normal(&self, k: usize) -> C64 {
        -C64::i() * self.tangents[k]
    }

    /// Point on the node polyline at arc-length `sigma` (periodic).
    pub fn point_at(&self, sigma: f64) -> C64 {
        let n = self.nodes.len();
        let h = self.spacing();
        let s = sigma.rem_euclid(self.total_length) / h;
        let k = (s.floor() as usize).min(n - 1);
        let frac = s - k as f64;
        let a = self.nodes[k];
        let b = self.nodes[(k + 1) % n];
        a + (b - a) * frac
    }

    /// Arc-length coordinate of the nearest point on the node polyline.
    pub fn project(&self, z: C64) -> (f64, f64) {
        let n = self.nodes.len();
        let h = self.spacing();
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..n {
            let a = self.nodes[k];
            let b = self.nodes[(k + 1) % n];
            let d = b - a;
            let t = (((z - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
            let dist = (z - (a + d * t)).norm();
            if dist < best.0 {
                best = (dist, (k as f64 + t) * h);
            }
        }
        (best.1, best.0)
    }

    pub fn is_inside(&self, z: C64) -> bool {
        point_in_polygon(&self.nodes, z)
    }

    /// Length normalized copy with total length 2π (scaled about the origin).
    pub fn normalized_to_2pi(&self) -> SampledCurve {
        let scale = 2.0 * PI / self.total_length;
        self.scaled(scale, C64::new(0.0, 0.0))
    }

    /// Image under `z ↦ scale·e^{i·0} z + shift`.
    pub fn scaled(&self, scale: f64, shift: C64) -> SampledCurve {
        self.similarity(C64::new(scale, 0.0), shift)
    }

    /// Image under the similarity `z ↦ a z + b` with `a ≠ 0`.
    pub fn similarity(&self, a: C64, b: C64) -> SampledCurve {
        let rot = a / a.norm();
        let s = a.norm();
        SampledCurve {
            nodes: self.nodes.iter().map(|z| a * z + b).collect(),
            total_length: self.total_length * s,
            tangents: self.tangents.iter().map(|t| t * rot).collect(),
            node_weights: self.node_weights.iter().map(|w| w * s).collect(),
            curvature: self.curvature.iter().map(|k| k / s).collect(),
            corners: self.corners.clone(),
            vertices: self.vertices.iter().map(|z| a * z + b).collect(),
            class: self.class,
            spec: None,
            interior_probe: a * self.interior_probe + b,
        }
    }

    fn check_invariants(&self) -> Result<()> {
        let n = self.nodes.len();
        let h = self.spacing();
        for k in 0..n {
            let gap = (self.nodes[(k + 1) % n] - self.nodes[k]).norm();
            if gap > h * (1.0 + EPS_GEOM) {
                return Err(Error::InvalidCurve(format!("node gap {gap:.3e} exceeds spacing {h:.3e}")));
            }
            if gap == 0.0 {
                return Err(Error::InvalidCurve(format!("coincident nodes at {k}")));
            }
        }
        let w = winding_number(&self.nodes, self.interior_probe);
        if w != 1 {
            return Err(Error::InvalidCurve(format!("winding number {w} about interior probe")));
        }
        Ok(())
    }
}

/// Max over node pairs of (shorter arc)/(chord).
pub fn chord_arc_constant(curve: &SampledCurve) -> f64 {
    let n = curve.len();
    let h = curve.spacing();
    let len = curve.total_length;
    let rows = exec::map_range(n, |i| {
        let zi = curve.nodes[i];
        let mut best: f64 = 1.0;
        for j in (i + 1)..n {
            let arc = (h * (j - i) as f64).min(len - h * (j - i) as f64);
            let chord = (curve.nodes[j] - zi).norm();
            best = best.max(arc / chord);
        }
        best
    });
    exec::max_of(&rows).max(1.0)
}

/// Distance from `z` to the node polyline (exact for polygonal curves).
pub fn distance_to_curve(curve: &SampledCurve, z: C64) -> f64 {
    let n = curve.len();
    (0..n)
        .map(|k| point_segment_distance(z, curve.nodes[k], curve.nodes[(k + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// `max_θ |r'(θ)|` for polar curves: dense grid then golden-section refinement.
pub fn lipschitz_constant(spec: &CurveSpec) -> Result<f64> {
    let modes = spec.polar_modes()?;
    let m = 16384;
    let step = 2.0 * PI / m as f64;
    let f = |t: f64| polar_eval(&modes, t).1.abs();
    let (kbest, _) = (0..m)
        .map(|k| (k, f(step * k as f64)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let (mut a, mut b) = (step * (kbest as f64 - 1.0), step * (kbest as f64 + 1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(f(0.5 * (a + b)).max(f(step * kbest as f64)))
}

/// Chord-arc constant, diameter and Lipschitz constant in one call.
pub fn geometry_constants(curve: &SampledCurve) -> GeometryConstants {
    let lipschitz_m = match &curve.spec {
        Some(s @ CurveSpec::PolarLipschitz { .. }) => lipschitz_constant(s).ok(),
        _ => None,
    };
    GeometryConstants { chord_arc_k: chord_arc_constant(curve), diameter: curve.diameter(), lipschitz_m }
}

/// Uniform-bucket spatial index over the segments of a closed polyline for
/// bulk distance queries.
#[derive(Debug, Clone)]
pub struct DistanceIndex {
    segs: Vec<(C64, C64)>,
    origin: C64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl DistanceIndex {
    pub fn new(curve: &SampledCurve) -> Self {
        Self::from_polyline(&curve.nodes, true)
    }

    pub fn from_polyline(points: &[C64], closed: bool) -> Self {
        let n = points.len();
        let nseg = if closed { n } else { n.saturating_sub(1) };
        let segs: Vec<(C64, C64)> = (0..nseg).map(|k| (points[k], points[(k + 1) % n])).collect();
        let (mut lo, mut hi) = (C64::new(f64::INFINITY, f64::INFINITY), C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = C64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = C64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let extent = (hi.re - lo.re).max(hi.im - lo.im).max(1e-300);
        let mean_len = segs.iter().map(|s| (s.1 - s.0).norm()).sum::<f64>() / nseg.max(1) as f64;
        let cell = (2.0 * mean_len).max(extent / 1024.0);
        let nx = ((hi.re - lo.re) / cell).floor() as usize + 1;
        let ny = ((hi.im - lo.im) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (idx, &(a, b)) in segs.iter().enumerate() {
            let i0 = ((a.re.min(b.re) - lo.re) / cell).floor().max(0.0) as usize;
            let i1 = (((a.re.max(b.re) - lo.re) / cell).floor() as usize).min(nx - 1);
            let j0 = ((a.im.min(b.im) - lo.im) / cell).floor().max(0.0) as usize;
            let j1 = (((a.im.max(b.im) - lo.im) / cell).floor() as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(idx as u32);
                }
            }
        }
        DistanceIndex { segs, origin: lo, cell, nx, ny, buckets }
    }

    /// Euclidean distance from `z` to the polyline.
    pub fn distance(&self, z: C64) -> f64 {
        self.nearest(z).0
    }

    /// Distance to a closed counterclockwise polyline and whether `z` lies
    /// to its left (inside). Vertices use the sum of the adjacent edge
    /// normals.
    pub fn locate(&self, z: C64) -> (f64, bool) {
        let (dist, s, t) = self.nearest(z);
        let n = self.segs.len();
        let left = |k: usize| {
            let (a, b) = self.segs[k];
            C64::i() * (b - a) / (b - a).norm()
        };
        let (a, b) = self.segs[s];
        let (p, normal) = if t <= 0.0 {
            (a, left(s) + left((s + n - 1) % n))
        } else if t >= 1.0 {
            (b, left(s) + left((s + 1) % n))
        } else {
            (a + (b - a) * t, left(s))
        };
        (dist, ((z - p) * normal.conj()).re > 0.0)
    }

    /// `(distance, segment index, parameter in [0,1])` of the nearest point.
    pub fn nearest(&self, z: C64) -> (f64, usize, f64) {
        let fi = ((z.re - self.origin.re) / self.cell).floor();
        let fj = ((z.im - self.origin.im) / self.cell).floor();
        let ci = fi.clamp(0.0, (self.nx - 1) as f64) as i64;
        let cj = fj.clamp(0.0, (self.ny - 1) as f64) as i64;
        // distance from z to the clamped cell
        let outside = ((fi - ci as f64).abs().max((fj - cj as f64).abs()) - 1.0).max(0.0) * self.cell;
        let mut best = (f64::INFINITY, 0usize, 0.0);
        let max_ring = self.nx.max(self.ny) as i64;
        for ring in 0..=max_ring {
            let lower = outside.max((ring as f64 - 1.0).max(0.0) * self.cell);
            if lower > best.0 {
                break;
            }
            for j in (cj - ring)..=(cj + ring) {
                if j < 0 || j >= self.ny as i64 {
                    continue;
                }
                let edge_row = j == cj - ring || j == cj + ring;
                let mut i = ci - ring;
                while i <= ci + ring {
                    if i >= 0 && i < self.nx as i64 {
                        for &s in &self.buckets[j as usize * self.nx + i as usize] {
                            let (a, b) = self.segs[s as usize];
                            let d = b - a;
                            let t = (((z - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
                            let dist = (z - (a + d * t)).norm();
                            if dist < best.0 {
                                best = (dist, s as usize, t);
                            }
                        }
                    }
                    i += if edge_row || ring == 0 { 1 } else { 2 * ring };
                }
            }
        }
        best
    }
}

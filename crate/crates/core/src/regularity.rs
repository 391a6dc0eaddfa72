//! Fractal regularity of curves: Minkowski contents, δ-regularity, the
//! exponent `h(Γ)`, porosity, Muckenhoupt constants and the solvable
//! interval.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{CurveClass, DistanceIndex, SampledCurve};

/// Seed of every Monte Carlo and sampling step.
pub const DEFAULT_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
/// Cap on the cells of one dilation bitmap.
pub const MAX_CELLS: u64 = 1 << 26;
/// Pixels per dilation radius.
pub const PIXELS_PER_T: f64 = 16.0;
/// Allowed variation of the regularity constant across the scale window.
pub const STABILITY_FACTOR: f64 = 1.15;
/// Bisection steps of [`estimate_h`].
pub const BISECTION_STEPS: usize = 8;
/// Deepest ladder step below the diameter of the measured set.
pub const LOCAL_LADDER: u32 = 8;

pub type Segment = (C64, C64);

/// Segments of the exact polyline of a curve (the vertex polygon when
/// available).
pub fn curve_segments(curve: &SampledCurve) -> Vec<Segment> {
    let pts = if curve.class == CurveClass::Polygonal && curve.vertices.len() >= 3 { &curve.vertices } else { &curve.nodes };
    let n = pts.len();
    (0..n).map(|k| (pts[k], pts[(k + 1) % n])).collect()
}

fn segments_bbox(segs: &[Segment]) -> (C64, C64) {
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(a, b) in segs {
        for p in [a, b] {
            lo = C64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = C64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
    }
    (lo, hi)
}

/// Diameter of the segment endpoints (subsampled to 512 points).
fn segments_diameter(segs: &[Segment]) -> f64 {
    let mut pts: Vec<C64> = segs.iter().flat_map(|s| [s.0, s.1]).collect();
    if pts.len() > 512 {
        let step = pts.len() / 512 + 1;
        pts = pts.into_iter().step_by(step).collect();
        for s in [segs[0].0, segs[segs.len() - 1].1] {
            pts.push(s);
        }
    }
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max((pts[i] - pts[j]).norm());
        }
    }
    d
}

/// `x` range of the horizontal line `y` inside the stadium of radius `t`
/// around segment `ab`.
fn stadium_row(a: C64, b: C64, t: f64, y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in [a, b] {
        let dy = y - c.im;
        if dy.abs() <= t {
            let w = (t * t - dy * dy).sqrt();
            lo = lo.min(c.re - w);
            hi = hi.max(c.re + w);
        }
    }
    let d = b - a;
    let len = d.norm();
    if len > 0.0 {
        // band {0 ≤ ⟨p−a, u⟩ ≤ len, |⟨p−a, n⟩| ≤ t} with u = d/len, n = iu
        let u = d / len;
        let nrm = C64::i() * u;
        let (mut xl, mut xr) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut ok = true;
        for (dir, lo_c, hi_c) in [(u, 0.0, len), (nrm, -t, t)] {
            // ⟨(x − a.re, y − a.im), dir⟩ = dir.re·x + const
            let c0 = -dir.re * a.re + dir.im * (y - a.im);
            if dir.re.abs() < 1e-300 {
                if c0 < lo_c || c0 > hi_c {
                    ok = false;
                }
            } else {
                let (p, q) = ((lo_c - c0) / dir.re, (hi_c - c0) / dir.re);
                xl = xl.max(p.min(q));
                xr = xr.min(p.max(q));
            }
        }
        if ok && xl <= xr {
            lo = lo.min(xl);
            hi = hi.max(xr);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Pixel bitmap of `E + B(0, t)`.
#[derive(Debug, Clone)]
pub struct DilationBitmap {
    pub origin: C64,
    pub pixel: f64,
    pub nx: usize,
    pub ny: usize,
    bits: Vec<u64>,
}

impl DilationBitmap {
    /// Rasterizes the cells whose centres lie within `t` of the segments.
    pub fn new(segs: &[Segment], t: f64, pixel: f64) -> Result<DilationBitmap> {
        let (lo, hi) = segments_bbox(segs);
        let origin = lo - C64::new(t + pixel, t + pixel);
        let nx = ((hi.re - lo.re + 2.0 * t) / pixel).ceil() as u64 + 2;
        let ny = ((hi.im - lo.im + 2.0 * t) / pixel).ceil() as u64 + 2;
        if nx * ny > MAX_CELLS {
            return Err(Error::GridTooFine(nx * ny));
        }
        let (nx, ny) = (nx as usize, ny as usize);
        let mut bits = vec![0u64; (nx * ny).div_ceil(64)];
        for &(a, b) in segs {
            let y0 = ((a.im.min(b.im) - t - origin.im) / pixel - 0.5).floor().max(0.0) as usize;
            let y1 = (((a.im.max(b.im) + t - origin.im) / pixel - 0.5).ceil() as usize).min(ny - 1);
            for j in y0..=y1 {
                let y = origin.im + (j as f64 + 0.5) * pixel;
                if let Some((xl, xr)) = stadium_row(a, b, t, y) {
                    let i0 = ((xl - origin.re) / pixel - 0.5).ceil().max(0.0) as usize;
                    let i1 = ((xr - origin.re) / pixel - 0.5).floor();
                    if i1 < 0.0 {
                        continue;
                    }
                    let i1 = (i1 as usize).min(nx - 1);
                    for i in i0..=i1 {
                        let k = j * nx + i;
                        bits[k / 64] |= 1 << (k % 64);
                    }
                }
            }
        }
        Ok(DilationBitmap { origin, pixel, nx, ny, bits })
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.pixel * self.pixel
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        let k = j * self.nx + i;
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }

    /// Plain PBM (P1), top row first.
    pub fn write_pbm(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "P1\n{} {}", self.nx, self.ny)?;
        for j in (0..self.ny).rev() {
            let row: Vec<&str> = (0..self.nx).map(|i| if self.get(i, j) { "1" } else { "0" }).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Areas `|E + B(0, t_j)|` for a ladder of radii, each rasterized with
/// pixel `t_j / 16`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationTable {
    pub t: Vec<f64>,
    pub area: Vec<f64>,
    /// `perimeter · pixel` bound on the pixel error of each area.
    pub pixel_error: Vec<f64>,
    pub length: f64,
}

impl DilationTable {
    pub fn new(segs: &[Segment], ladder: &[f64]) -> Result<DilationTable> {
        let length: f64 = segs.iter().map(|s| (s.1 - s.0).norm()).sum();
        let mut area = Vec::with_capacity(ladder.len());
        let mut pixel_error = Vec::with_capacity(ladder.len());
        for &t in ladder {
            let pixel = t / PIXELS_PER_T;
            area.push(DilationBitmap::new(segs, t, pixel)?.area());
            pixel_error.push((2.0 * length + 2.0 * PI * t) * pixel);
        }
        Ok(DilationTable { t: ladder.to_vec(), area, pixel_error, length })
    }

    /// `M_δ(E, t) = |E + B(0,t)| / t^{2−δ}`.
    pub fn m_delta(&self, delta: f64) -> Vec<f64> {
        self.t.iter().zip(&self.area).map(|(t, a)| a / t.powf(2.0 - delta)).collect()
    }

    /// `sup_t M_δ(E, t)` over the ladder.
    pub fn h_delta(&self, delta: f64) -> f64 {
        exec::max_of(&self.m_delta(delta))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("δ = {delta} outside [1, 2]")));
    }
    Ok(())
}

/// `t_j = diam · 2^{−j}`, `j = 0..=levels`.
pub fn ladder(diam: f64, levels: u32) -> Vec<f64> {
    (0..=levels).map(|j| diam * 0.5f64.powi(j as i32)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiContent {
    pub delta: f64,
    /// `sup_t M_δ(E, t)`.
    pub value: f64,
    pub table: DilationTable,
}

/// `h_δ(E) = sup_{t ≤ diam E} M_δ(E, t)` over the ladder `t_j = diam·2^{−j}`.
pub fn minkowski_content_segments(segs: &[Segment], delta: f64, levels: u32) -> Result<MinkowskiContent> {
    check_delta(delta)?;
    if levels > 12 {
        return Err(Error::InvalidParameter(format!("ladder depth {levels} > 12")));
    }
    if segs.is_empty() {
        return Err(Error::InvalidInput("empty set".into()));
    }
    let diam = segments_diameter(segs);
    let table = DilationTable::new(segs, &ladder(diam, levels))?;
    Ok(MinkowskiContent { delta, value: table.h_delta(delta), table })
}

pub fn minkowski_content(curve: &SampledCurve, delta: f64, levels: u32) -> Result<MinkowskiContent> {
    minkowski_content_segments(&curve_segments(curve), delta, levels)
}

/// Parts of the segments inside the closed disk `D(z, r)`.
fn clip_to_disk(segs: &[Segment], z: C64, r: f64) -> Vec<Segment> {
    segs.iter()
        .filter_map(|&(a, b)| {
            let d = b - a;
            let f = a - z;
            let (qa, qb, qc) = (d.norm_sqr(), 2.0 * (f.conj() * d).re, f.norm_sqr() - r * r);
            if qa == 0.0 {
                return (qc <= 0.0).then_some((a, b));
            }
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
            let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
            (t0 < t1).then(|| (a + d * t0, a + d * t1))
        })
        .collect()
}

/// Shortest edge of the exact polyline; zero for smooth curves.
pub fn feature_size(curve: &SampledCurve) -> f64 {
    if curve.class != CurveClass::Polygonal {
        return 0.0;
    }
    curve_segments(curve).iter().map(|s| (s.1 - s.0).norm()).fold(f64::INFINITY, f64::min)
}

/// Radii `diam · 2^{−k}`, `k = 1..=6`, restricted to
/// `[4 · feature, diam / 4]`; all radii up to `diam / 4` when fewer than
/// two remain.
pub fn scale_window(curve: &SampledCurve) -> Vec<f64> {
    let diam = curve.diameter();
    let all: Vec<f64> = (1..=6).map(|k| diam * 0.5f64.powi(k)).collect();
    let f = feature_size(curve);
    let upper = diam / 4.0 * (1.0 + 1e-12);
    let window: Vec<f64> = all.iter().copied().filter(|&r| r <= upper && r >= 4.0 * f).collect();
    if window.len() >= 2 {
        window
    } else {
        all.into_iter().filter(|&r| r <= upper).collect()
    }
}

/// Dilation tables of `Γ ∩ D(z, R)` for seeded centres and the given radii.
#[derive(Debug, Clone)]
pub struct RegularityTables {
    pub radii: Vec<f64>,
    /// Finest common dilation per radius.
    pub fine_t: Vec<f64>,
    pub centers: Vec<C64>,
    /// `tables[r][c]`.
    pub tables: Vec<Vec<DilationTable>>,
    pub seed: u64,
}

impl RegularityTables {
    pub fn new(curve: &SampledCurve, radii: &[f64], samples: usize, seed: u64) -> Result<RegularityTables> {
        if samples < 64 {
            return Err(Error::InvalidParameter(format!("need at least 64 disk samples, got {samples}")));
        }
        let segs = curve_segments(curve);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<C64> = (0..samples).map(|_| curve.point_at(rng.gen::<f64>() * curve.total_length)).collect();
        let diam = curve.diameter();
        let t_floor = (feature_size(curve) / 2.0).max(diam * 0.5f64.powi(12));
        let full = ladder(diam, 40);
        let fine_t: Vec<f64> = radii
            .iter()
            .map(|r| {
                let target = t_floor.max(r * 0.5f64.powi(LOCAL_LADDER as i32)) * (1.0 - 1e-12);
                full.iter().copied().filter(|&t| t >= target).fold(f64::INFINITY, f64::min)
            })
            .collect();
        let jobs: Vec<(usize, usize)> = (0..radii.len()).flat_map(|r| (0..samples).map(move |c| (r, c))).collect();
        let built = exec::map_slice(&jobs, |&(ri, ci)| -> Result<DilationTable> {
            let piece = clip_to_disk(&segs, centers[ci], radii[ri]);
            if piece.is_empty() {
                return Ok(DilationTable { t: vec![], area: vec![], pixel_error: vec![], length: 0.0 });
            }
            let de = segments_diameter(&piece).max(1e-300);
            let lowest = (de * 0.5f64.powi(LOCAL_LADDER as i32)).max(t_floor.min(de)).min(fine_t[ri]);
            let ts: Vec<f64> = full.iter().copied().filter(|&t| t <= de && t >= lowest).collect();
            let ts = if ts.is_empty() { vec![de] } else { ts };
            DilationTable::new(&piece, &ts)
        });
        let mut tables = vec![Vec::with_capacity(samples); radii.len()];
        for ((ri, _), t) in jobs.iter().zip(built) {
            tables[*ri].push(t?);
        }
        Ok(RegularityTables { radii: radii.to_vec(), fine_t, centers, tables, seed })
    }

    /// Mean over centres of `M_δ(Γ ∩ D(z,R), t₀(R)) / R^δ` at the finest
    /// common dilation `t₀(R)`.
    pub fn fine_constants(&self, delta: f64) -> Vec<f64> {
        self.radii
            .iter()
            .zip(&self.tables)
            .zip(&self.fine_t)
            .map(|((r, row), &t0)| {
                let vals: Vec<f64> = row
                    .iter()
                    .filter(|t| !t.t.is_empty())
                    .map(|tab| {
                        let j = tab.t.iter().position(|&t| t <= t0 * (1.0 + 1e-12)).unwrap_or(tab.t.len() - 1);
                        tab.area[j] / tab.t[j].powf(2.0 - delta)
                    })
                    .collect();
                vals.iter().sum::<f64>() / vals.len().max(1) as f64 / r.powf(delta)
            })
            .collect()
    }

    /// `max_z h_δ(Γ ∩ D(z,R)) / R^δ` for each radius.
    pub fn constants(&self, delta: f64) -> Vec<f64> {
        self.radii
            .iter()
            .zip(&self.tables)
            .map(|(r, row)| row.iter().filter(|t| !t.t.is_empty()).map(|t| t.h_delta(delta)).fold(0.0, f64::max) / r.powf(delta))
            .collect()
    }

    /// Least-squares slope of `ln C(R)` against `ln R` for the fine-scale
    /// constants.
    pub fn growth_exponent(&self, delta: f64) -> f64 {
        let c = self.fine_constants(delta);
        let xs: Vec<f64> = self.radii.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = c.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if sxx == 0.0 {
            0.0
        } else {
            sxy / sxx
        }
    }

    /// Whether the constant varies by at most [`STABILITY_FACTOR`] across the
    /// radii spanned by the tables.
    pub fn is_stable(&self, delta: f64) -> bool {
        let span = (self.radii.iter().copied().fold(0.0, f64::max) / self.radii.iter().copied().fold(f64::INFINITY, f64::min)).ln();
        if span <= 0.0 {
            return true;
        }
        self.growth_exponent(delta) * span <= STABILITY_FACTOR.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRegularity {
    pub delta: f64,
    /// Maximum over all samples.
    pub constant: f64,
    /// `(R, max_z h_δ(Γ∩D(z,R))/R^δ)`.
    pub per_radius: Vec<(f64, f64)>,
}

/// `max h_δ(Γ ∩ D(z,R)) / R^δ` over `samples` seeded centres and the radii
/// `diam · 2^{−k}`, `k = 1..=6`.
pub fn delta_regularity_constant(curve: &SampledCurve, delta: f64, samples: usize) -> Result<DeltaRegularity> {
    check_delta(delta)?;
    let diam = curve.diameter();
    let radii: Vec<f64> = (1..=6).map(|k| diam * 0.5f64.powi(k)).collect();
    let tables = RegularityTables::new(curve, &radii, samples, DEFAULT_SEED)?;
    let c = tables.constants(delta);
    Ok(DeltaRegularity { delta, constant: exec::max_of(&c), per_radius: radii.into_iter().zip(c).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HEstimate {
    pub h: f64,
    pub bracket: (f64, f64),
    /// Set when the stability predicate was not monotone in δ.
    pub noisy: bool,
}

/// Bisection in `δ ∈ [1, 2]` on the stability of the regularity constant
/// over the scale window.
pub fn estimate_h_with(tables: &RegularityTables) -> HEstimate {
    let probe: Vec<bool> = (0..=8).map(|k| tables.is_stable(1.0 + k as f64 / 8.0)).collect();
    let noisy = probe.windows(2).any(|w| w[0] && !w[1]);
    if tables.is_stable(1.0) {
        return HEstimate { h: 1.0, bracket: (1.0, 1.0), noisy };
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if tables.is_stable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    HEstimate { h: 0.5 * (lo + hi), bracket: (lo, hi), noisy }
}

pub fn estimate_h(curve: &SampledCurve) -> Result<HEstimate> {
    let tables = RegularityTables::new(curve, &scale_window(curve), 64, DEFAULT_SEED)?;
    Ok(estimate_h_with(&tables))
}

/// Box-counting exponent of the polyline over the scale window: slope of
/// `ln N(ε)` against `ln(1/ε)` for boxes of side `ε = R`.
pub fn box_counting_dimension(curve: &SampledCurve) -> f64 {
    let segs = curve_segments(curve);
    let window = scale_window(curve);
    let counts: Vec<(f64, f64)> = window
        .iter()
        .map(|&eps| {
            let mut boxes = std::collections::BTreeSet::new();
            for &(a, b) in &segs {
                let steps = ((b - a).norm() / (eps / 8.0)).ceil().max(1.0) as usize;
                for k in 0..=steps {
                    let p = a + (b - a) * (k as f64 / steps as f64);
                    boxes.insert(((p.re / eps).floor() as i64, (p.im / eps).floor() as i64));
                }
            }
            ((1.0 / eps).ln(), (boxes.len() as f64).ln())
        })
        .collect();
    let n = counts.len() as f64;
    let mx = counts.iter().map(|c| c.0).sum::<f64>() / n;
    let my = counts.iter().map(|c| c.1).sum::<f64>() / n;
    let sxy: f64 = counts.iter().map(|c| (c.0 - mx) * (c.1 - my)).sum();
    let sxx: f64 = counts.iter().map(|c| (c.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `min over (z, r) of (largest disk in D(z,r) missing Γ) / r`, a sampled
/// lower bound.
pub fn porosity_constant(curve: &SampledCurve, samples: usize, seed: u64) -> f64 {
    let index = DistanceIndex::from_polyline(&curve_segments(curve).iter().map(|s| s.0).collect::<Vec<_>>(), true);
    let diam = curve.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(C64, f64)> = (0..samples)
        .map(|_| {
            let z = curve.point_at(rng.gen::<f64>() * curve.total_length);
            let r = diam * 2f64.powf(-6.0 * rng.gen::<f64>());
            (z, r)
        })
        .collect();
    let ratios = exec::map_slice(&jobs, |&(z, r)| {
        let m = 64;
        let px = 2.0 * r / m as f64;
        let mut best: f64 = 0.0;
        for j in 0..m {
            for i in 0..m {
                let x = z + C64::new(-r + (i as f64 + 0.5) * px, -r + (j as f64 + 0.5) * px);
                let room = r - (x - z).norm();
                if room <= best {
                    continue;
                }
                best = best.max(index.distance(x).min(room));
            }
        }
        best / r
    });
    ratios.into_iter().fold(f64::INFINITY, f64::min)
}

/// `p` of the Muckenhoupt class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApClass {
    A1,
    A2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub alpha: f64,
    pub class: ApClass,
    pub constant: f64,
    /// `(radius, max ratio over disks of that radius)`.
    pub per_radius: Vec<(f64, f64)>,
    pub points_per_disk: usize,
    pub seed: u64,
}

/// Jittered polar points, uniform in area, in the unit disk.
fn stratified_disk(points: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let side = (points as f64).sqrt().ceil() as usize;
    let mut out = Vec::with_capacity(side * side);
    for a in 0..side {
        for b in 0..side {
            let u = (a as f64 + rng.gen::<f64>()) / side as f64;
            let v = (b as f64 + rng.gen::<f64>()) / side as f64;
            out.push(C64::from_polar(u.sqrt(), 2.0 * PI * v));
        }
    }
    out
}

/// Sampled `A_p` constant of `ω = d(z, Γ)^{α−1}` on the plane.
///
/// Disks are centred on Γ and at a random offset of up to one radius, with
/// radii `diam · 2^{−k}`, `k = 0..=8`. `A₁` uses the 1% quantile in place of
/// the essential infimum.
pub fn ap_constant_plane(curve: &SampledCurve, alpha: f64, class: ApClass, centers: usize, points: usize, seed: u64) -> Result<ApReport> {
    if points < 16 {
        return Err(Error::InvalidParameter(format!("{points} Monte Carlo points per disk")));
    }
    let index = DistanceIndex::from_polyline(&curve_segments(curve).iter().map(|s| s.0).collect::<Vec<_>>(), true);
    let diam = curve.diameter();
    let radii: Vec<f64> = (0..=8).map(|k| diam * 0.5f64.powi(k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = vec![];
    for (ri, &r) in radii.iter().enumerate() {
        for c in 0..centers {
            let z = curve.point_at(rng.gen::<f64>() * curve.total_length);
            let z = if c % 2 == 0 { z } else { z + C64::from_polar(r * rng.gen::<f64>(), 2.0 * PI * rng.gen::<f64>()) };
            jobs.push((ri, z, rng.gen::<u64>()));
        }
    }
    let ratios = exec::map_slice(&jobs, |&(ri, z, s)| {
        let r = radii[ri];
        let mut local = ChaCha8Rng::seed_from_u64(s);
        let w: Vec<f64> = stratified_disk(points, &mut local)
            .into_iter()
            .map(|u| index.distance(z + u * r).max(1e-300).powf(alpha - 1.0))
            .collect();
        let mean = exec::pairwise_sum(&w) / w.len() as f64;
        match class {
            ApClass::A2 => mean * exec::pairwise_sum(&w.iter().map(|x| 1.0 / x).collect::<Vec<_>>()) / w.len() as f64,
            ApClass::A1 => {
                let mut sorted = w.clone();
                sorted.sort_by(f64::total_cmp);
                mean / sorted[(0.01 * sorted.len() as f64) as usize]
            }
        }
    });
    let per_radius: Vec<(f64, f64)> = radii
        .iter()
        .enumerate()
        .map(|(ri, &r)| (r, jobs.iter().zip(&ratios).filter(|(j, _)| j.0 == ri).map(|(_, v)| *v).fold(0.0, f64::max)))
        .collect();
    Ok(ApReport {
        alpha,
        class,
        constant: per_radius.iter().map(|p| p.1).fold(0.0, f64::max),
        per_radius,
        points_per_disk: points,
        seed,
    })
}

/// `max over dyadic arcs of ⟨ω⟩⟨ω⁻¹⟩` for samples `ω(e^{2πik/N})`.
///
/// Arcs come from the dyadic grid and from the same grid shifted by a third
/// of the arc length.
pub fn a2_circle_constant(weights: &[f64]) -> Result<f64> {
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidWeight { index, value });
    }
    let n = weights.len();
    if n == 0 {
        return Err(Error::InvalidInput("no weight samples".into()));
    }
    let inv: Vec<f64> = weights.iter().map(|w| 1.0 / w).collect();
    // cyclic prefix sums over two periods
    let prefix = |v: &[f64]| {
        let mut p = vec![0.0; 2 * n + 1];
        for k in 0..2 * n {
            p[k + 1] = p[k] + v[k % n];
        }
        p
    };
    let (pw, pi) = (prefix(weights), prefix(&inv));
    let mut best: f64 = 1.0;
    let mut len = n;
    while len >= 1 {
        let count = n / len;
        for shift in [0, len / 3] {
            for a in 0..count.max(1) {
                let start = a * len + shift;
                let mw = (pw[start + len] - pw[start]) / len as f64;
                let mi = (pi[start + len] - pi[start]) / len as f64;
                best = best.max(mw * mi);
            }
        }
        if len == 1 {
            break;
        }
        len /= 2;
    }
    Ok(best)
}

/// `((h−1)/2, (3−h)/2)`.
pub fn solvable_interval(h: f64) -> Result<(f64, f64)> {
    if !(h.is_finite() && h >= 1.0) {
        return Err(Error::InvalidParameter(format!("h = {h} below 1")));
    }
    if h >= 2.0 {
        return Err(Error::EmptyInterval(h));
    }
    Ok(((h - 1.0) / 2.0, (3.0 - h) / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HDeltaRow {
    pub delta: f64,
    /// `sup_t M_δ(Γ, t)`.
    pub sup_m: f64,
    /// `max h_δ(Γ ∩ D)/R^δ` over the sampled disks.
    pub regularity_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub h_delta_table: Vec<HDeltaRow>,
    pub h_estimate: f64,
    pub h_bracket: (f64, f64),
    pub noisy_estimate: bool,
    /// Box-counting exponent over the same scale window.
    pub box_dimension: f64,
    /// Sampled lower bound, not a certificate.
    pub porosity_c: f64,
    /// Keys `"A2,s=0.25"` and similar; weight `d^{1−2s}`.
    pub ap_constants: BTreeMap<String, f64>,
    pub solvable_interval: Option<(f64, f64)>,
    pub seed: u64,
}

/// Full report with `s` probes for the `A_p` constants of `d^{1−2s}`.
pub fn regularity_report(curve: &SampledCurve, s_grid: &[f64], seed: u64) -> Result<RegularityReport> {
    let tables = RegularityTables::new(curve, &scale_window(curve), 64, seed)?;
    let est = estimate_h_with(&tables);
    let mut h_delta_table = vec![];
    for delta in [1.0, 1.25, 1.5, 1.75, 2.0] {
        let sup_m = minkowski_content(curve, delta, 6)?.value;
        h_delta_table.push(HDeltaRow { delta, sup_m, regularity_constant: exec::max_of(&tables.constants(delta)) });
    }
    let mut ap_constants = BTreeMap::new();
    for &s in s_grid {
        for (class, label) in [(ApClass::A1, "A1"), (ApClass::A2, "A2")] {
            let r = ap_constant_plane(curve, 2.0 - 2.0 * s, class, 8, 1024, seed)?;
            ap_constants.insert(format!("{label},s={s}"), r.constant);
        }
    }
    Ok(RegularityReport {
        h_delta_table,
        h_estimate: est.h,
        h_bracket: est.bracket,
        noisy_estimate: est.noisy,
        box_dimension: box_counting_dimension(curve),
        porosity_c: porosity_constant(curve, 64, seed),
        ap_constants,
        solvable_interval: solvable_interval(est.h).ok(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_curve, CurveSpec};

    fn circle() -> SampledCurve {
        build_curve(&CurveSpec::Circle { radius: 1.0 }, 1024).unwrap()
    }

    #[test]
    fn stadium_area_of_segment() {
        let seg = [(C64::new(0.0, 0.0), C64::new(1.0, 0.0))];
        for t in [0.5, 0.1, 0.03] {
            let b = DilationBitmap::new(&seg, t, t / 32.0).unwrap();
            let want = 2.0 * t + PI * t * t;
            assert!((b.area() - want).abs() < 0.01 * want, "{t}: {} {want}", b.area());
        }
    }

    #[test]
    fn circle_annulus_content() {
        let m = minkowski_content(&circle(), 1.0, 6).unwrap();
        for (t, a) in m.table.t.iter().zip(&m.table.area) {
            if *t <= 1.0 {
                assert!((a / t - 4.0 * PI).abs() < 0.01 * 4.0 * PI, "{t}: {}", a / t);
            }
        }
        // t = 2 covers the disk of radius 3
        assert!((m.value - 4.5 * PI).abs() < 0.01 * 4.5 * PI, "{}", m.value);
        let m2 = minkowski_content(&circle(), 2.0, 6).unwrap();
        assert!(m2.value <= 9.0 * PI * 1.01);
    }

    #[test]
    fn segment_content_is_two_plus_pi() {
        let seg = [(C64::new(0.0, 0.0), C64::new(1.0, 0.0))];
        let m = minkowski_content_segments(&seg, 1.0, 6).unwrap();
        assert!((m.value - (2.0 + PI)).abs() < 0.02 * (2.0 + PI), "{}", m.value);
    }

    #[test]
    fn ladder_algebra() {
        let m1 = minkowski_content(&circle(), 1.0, 5).unwrap();
        let m15 = minkowski_content(&circle(), 1.5, 5).unwrap();
        for ((a, b), t) in m1.table.m_delta(1.0).iter().zip(m15.table.m_delta(1.5)).zip(&m1.table.t) {
            assert!((a * t.powf(0.5) - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn grid_cap() {
        let seg = [(C64::new(0.0, 0.0), C64::new(1.0, 0.0))];
        assert!(matches!(DilationBitmap::new(&seg, 1e-5, 1e-7), Err(Error::GridTooFine(_))));
        assert!(minkowski_content(&circle(), 0.5, 4).is_err());
    }

    #[test]
    fn solvable_interval_values() {
        assert_eq!(solvable_interval(1.0).unwrap(), (0.0, 1.0));
        let (a, b) = solvable_interval(1.262).unwrap();
        assert!((a - 0.131).abs() < 1e-12 && (b - 0.869).abs() < 1e-12);
        let (a, b) = solvable_interval(1.9).unwrap();
        assert!((a - 0.45).abs() < 1e-12 && (b - 0.55).abs() < 1e-12);
        assert_eq!(solvable_interval(2.0), Err(Error::EmptyInterval(2.0)));
    }

    #[test]
    fn a2_circle_values() {
        assert_eq!(a2_circle_constant(&[1.0; 256]).unwrap(), 1.0);
        assert!(matches!(a2_circle_constant(&[1.0, 0.0, 2.0]), Err(Error::InvalidWeight { index: 1, .. })));
    }
}

//! Grid realization of the ∂̄ route to the Plemelj split.
//!
//! Fields live on a `2^m × 2^m` periodized box. The Beurling transform is the
//! Fourier multiplier `conj(ξ)/ξ`, normalized so that `B(∂̄g) = ∂g`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{inside_mask, reparametrize_arclength, CurveSpec, SampledCurve};
use crate::harmonic::{DiskPoisson, DoubleLayer, Harmonic};
use crate::spectral::Side;

/// Default box half-width in units of the curve diameter.
pub const BOX_FACTOR: f64 = 3.0;
/// Default width of the excluded band around the curve, in cells.
pub const BAND_CELLS: f64 = 2.0;
/// Boundary-ring level (relative to the field maximum) above which
/// periodization is flagged.
pub const PERIODIZATION_TOL: f64 = 1e-3;
/// A₂ ratio above which the weight is flagged.
pub const A2_LIMIT: f64 = 1e6;

/// Square box `center ± half_width` split into `n × n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub center: [f64; 2],
    pub half_width: f64,
    pub n: usize,
}

impl GridBox {
    pub fn new(center: C64, half_width: f64, m: u32) -> Result<GridBox> {
        if !(2..=13).contains(&m) {
            return Err(Error::InvalidParameter(format!("grid exponent {m} outside 2..=13")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("half-width {half_width}")));
        }
        Ok(GridBox { center: [center.re, center.im], half_width, n: 1 << m })
    }

    /// Box centred on the curve's bounding box; the half-width defaults to
    /// `BOX_FACTOR · diameter` and must leave a margin of one diameter.
    pub fn for_curve(curve: &SampledCurve, m: u32, half_width: Option<f64>) -> Result<GridBox> {
        let (lo, hi) = bbox(&curve.nodes);
        let center = (lo + hi) * 0.5;
        let diam = curve.diameter();
        let reach = 0.5 * (hi.re - lo.re).max(hi.im - lo.im);
        let hw = half_width.unwrap_or(BOX_FACTOR * diam);
        if hw < reach + diam - 1e-12 * diam {
            return Err(Error::InvalidParameter(format!("half-width {hw} leaves less than one diameter of margin")));
        }
        GridBox::new(center, hw, m)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn center(&self) -> C64 {
        C64::new(self.center[0], self.center[1])
    }

    pub fn xs(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|i| self.center[0] - self.half_width + (i as f64 + 0.5) * h).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|j| self.center[1] - self.half_width + (j as f64 + 0.5) * h).collect()
    }

    /// Cell centre of row-major index `j·n + i`.
    pub fn cell(&self, idx: usize) -> C64 {
        let h = self.spacing();
        let (i, j) = (idx % self.n, idx / self.n);
        C64::new(
            self.center[0] - self.half_width + (i as f64 + 0.5) * h,
            self.center[1] - self.half_width + (j as f64 + 0.5) * h,
        )
    }

    /// Whether `idx` lies in the outermost `width` rings of cells.
    fn on_ring(&self, idx: usize, width: usize) -> bool {
        let (i, j) = (idx % self.n, idx / self.n);
        i < width || j < width || i >= self.n - width || j >= self.n - width
    }
}

fn bbox(points: &[C64]) -> (C64, C64) {
    points.iter().fold(
        (C64::new(f64::INFINITY, f64::INFINITY), C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (C64::new(lo.re.min(p.re), lo.im.min(p.im)), C64::new(hi.re.max(p.re), hi.im.max(p.im))),
    )
}

fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Distance from every cell centre to a closed polyline.
///
/// Cells within two cells of a segment get exact distances; the nearest
/// segment is then propagated by forward and backward raster sweeps and
/// the distance recomputed exactly against the propagated segment.
pub fn distance_field(nodes: &[C64], grid: &GridBox) -> Vec<f64> {
    let n = grid.n;
    let h = grid.spacing();
    let m = nodes.len();
    let x0 = grid.center[0] - grid.half_width;
    let y0 = grid.center[1] - grid.half_width;
    let mut seg = vec![u32::MAX; n * n];
    let mut dist = vec![f64::INFINITY; n * n];
    let clamp = |v: f64| v.floor().clamp(0.0, (n - 1) as f64) as usize;
    for k in 0..m {
        let (a, b) = (nodes[k], nodes[(k + 1) % m]);
        let i0 = clamp((a.re.min(b.re) - x0) / h - 2.5);
        let i1 = clamp((a.re.max(b.re) - x0) / h + 2.5);
        let j0 = clamp((a.im.min(b.im) - y0) / h - 2.5);
        let j1 = clamp((a.im.max(b.im) - y0) / h + 2.5);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let idx = j * n + i;
                let d = segment_distance(grid.cell(idx), a, b);
                if d < dist[idx] {
                    dist[idx] = d;
                    seg[idx] = k as u32;
                }
            }
        }
    }
    let relax = |dist: &mut [f64], seg: &mut [u32], idx: usize, nb: usize| {
        let s = seg[nb];
        if s == u32::MAX || s == seg[idx] {
            return;
        }
        let k = s as usize;
        let d = segment_distance(grid.cell(idx), nodes[k], nodes[(k + 1) % m]);
        if d < dist[idx] {
            dist[idx] = d;
            seg[idx] = s;
        }
    };
    for _ in 0..2 {
        for j in 0..n {
            for i in 0..n {
                let idx = j * n + i;
                if i > 0 {
                    relax(&mut dist, &mut seg, idx, idx - 1);
                }
                if j > 0 {
                    relax(&mut dist, &mut seg, idx, idx - n);
                    if i > 0 {
                        relax(&mut dist, &mut seg, idx, idx - n - 1);
                    }
                    if i + 1 < n {
                        relax(&mut dist, &mut seg, idx, idx - n + 1);
                    }
                }
            }
            for i in (0..n.saturating_sub(1)).rev() {
                relax(&mut dist, &mut seg, j * n + i, j * n + i + 1);
            }
        }
        for j in (0..n).rev() {
            for i in (0..n).rev() {
                let idx = j * n + i;
                if i + 1 < n {
                    relax(&mut dist, &mut seg, idx, idx + 1);
                }
                if j + 1 < n {
                    relax(&mut dist, &mut seg, idx, idx + n);
                    if i + 1 < n {
                        relax(&mut dist, &mut seg, idx, idx + n + 1);
                    }
                    if i > 0 {
                        relax(&mut dist, &mut seg, idx, idx + n - 1);
                    }
                }
            }
            for i in 1..n {
                relax(&mut dist, &mut seg, j * n + i, j * n + i - 1);
            }
        }
    }
    dist
}

/// Complex samples on a grid box, with the interior mask of the curve.
#[derive(Debug, Clone)]
pub struct GridField {
    pub grid: GridBox,
    /// Row-major values, index `j·n + i` with `j` the row (y).
    pub values: Vec<C64>,
    /// Interior membership of each cell centre.
    pub inside_mask: Vec<bool>,
    /// Distance of each cell centre to the curve.
    pub distance: Vec<f64>,
    /// Area of the cells zeroed next to the curve.
    pub excluded_band: f64,
    /// L² bound of the field outside the box (exterior fields).
    pub tail_bound: f64,
    /// Supremum of `|value|` over the two outermost cell rings.
    pub boundary_ring_sup: f64,
    /// Set when the boundary ring exceeded the periodization tolerance.
    pub periodization_warning: bool,
}

impl GridField {
    /// Field with the curve's mask and distances and all values zero.
    pub fn for_curve(curve: &SampledCurve, grid: GridBox) -> GridField {
        let inside_mask = inside_mask(&curve.nodes, &grid.xs(), &grid.ys());
        let distance = distance_field(&curve.nodes, &grid);
        GridField {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.n * grid.n],
            inside_mask,
            distance,
            excluded_band: 0.0,
            tail_bound: 0.0,
            boundary_ring_sup: 0.0,
            periodization_warning: false,
        }
    }

    /// Field sampled from a function, with no curve (empty mask).
    pub fn from_fn(grid: GridBox, f: impl Fn(C64) -> C64 + Sync) -> GridField {
        let values = exec::map_range(grid.n * grid.n, |idx| f(grid.cell(idx)));
        let mut field = GridField {
            grid,
            values,
            inside_mask: vec![false; grid.n * grid.n],
            distance: vec![f64::INFINITY; grid.n * grid.n],
            excluded_band: 0.0,
            tail_bound: 0.0,
            boundary_ring_sup: 0.0,
            periodization_warning: false,
        };
        field.boundary_ring_sup = field.ring_sup();
        field
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn ring_sup(&self) -> f64 {
        (0..self.len()).filter(|&i| self.grid.on_ring(i, 2)).map(|i| self.values[i].norm()).fold(0.0, f64::max)
    }

    fn with_values(&self, values: Vec<C64>) -> GridField {
        let mut out = self.clone();
        out.values = values;
        out.boundary_ring_sup = out.ring_sup();
        out.periodization_warning = false;
        out
    }

    /// `(∬ |v|² ω)^{1/2}` over the cells selected by `keep`.
    pub fn weighted_norm(&self, weight: impl Fn(usize) -> f64, keep: impl Fn(usize) -> bool) -> f64 {
        let h2 = self.grid.spacing().powi(2);
        let terms: Vec<f64> = (0..self.len()).map(|i| if keep(i) { self.values[i].norm_sqr() * weight(i) * h2 } else { 0.0 }).collect();
        exec::pairwise_sum(&terms).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.weighted_norm(|_| 1.0, |_| true)
    }

    /// Value at `z` by bilinear interpolation of cell centres.
    pub fn sample(&self, z: C64) -> C64 {
        let n = self.grid.n;
        let h = self.grid.spacing();
        let fx = ((z.re - self.grid.center[0] + self.grid.half_width) / h - 0.5).clamp(0.0, (n - 1) as f64 - 1e-9);
        let fy = ((z.im - self.grid.center[1] + self.grid.half_width) / h - 0.5).clamp(0.0, (n - 1) as f64 - 1e-9);
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let v = |i: usize, j: usize| self.values[j * n + i];
        v(i, j) * (1.0 - tx) * (1.0 - ty) + v(i + 1, j) * tx * (1.0 - ty) + v(i, j + 1) * (1.0 - tx) * ty + v(i + 1, j + 1) * tx * ty
    }

    /// SHA-256 of the mask bits, hex encoded.
    pub fn mask_hash(&self) -> String {
        let mut hasher = Sha256::new();
        let bytes: Vec<u8> = self.inside_mask.chunks(8).map(|c| c.iter().enumerate().fold(0u8, |b, (k, &v)| b | ((v as u8) << k))).collect();
        hasher.update(&bytes);
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Flat little-endian complex128 values (row-major) at `path`, and a JSON
    /// sidecar at `path.json`.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.values {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        out.flush()?;
        let meta = GridSidecar {
            center: self.grid.center,
            half_width: self.grid.half_width,
            resolution: [self.grid.n, self.grid.n],
            layout: "row-major complex128 little-endian".into(),
            mask_hash: self.mask_hash(),
            excluded_band: self.excluded_band,
            tail_bound: self.tail_bound,
            periodization_warning: self.periodization_warning,
        };
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        std::fs::write(side, serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?)?;
        Ok(())
    }
}

/// JSON sidecar of a grid dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub center: [f64; 2],
    pub half_width: f64,
    pub resolution: [usize; 2],
    pub layout: String,
    pub mask_hash: String,
    pub excluded_band: f64,
    pub tail_bound: f64,
    pub periodization_warning: bool,
}

/// `∂̄u = (u_x + i u_y)/2` by central differences on one side of the curve.
///
/// Cells of the other side, cells within `band_cells` spacings of the curve
/// and the outermost cell ring are zero.
pub fn dbar_field(curve: &SampledCurve, u: &dyn Harmonic, side: Side, grid: GridBox, band_cells: f64) -> GridField {
    let mut field = GridField::for_curve(curve, grid);
    let n = grid.n;
    let h = grid.spacing();
    let on_side = |idx: usize| field.inside_mask[idx] == (side == Side::Interior);
    let needed: Vec<bool> = (0..n * n).map(|i| on_side(i) && field.distance[i] >= (band_cells - 1.0).max(0.0) * h).collect();
    let uvals = exec::map_range(n * n, |i| if needed[i] { u.value(grid.cell(i)) } else { C64::new(0.0, 0.0) });
    let mut excluded = 0usize;
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    for idx in 0..n * n {
        if !on_side(idx) {
            continue;
        }
        if field.distance[idx] < band_cells * h {
            excluded += 1;
            continue;
        }
        if grid.on_ring(idx, 1) {
            continue;
        }
        let ux = (uvals[idx + 1] - uvals[idx - 1]) / (2.0 * h);
        let uy = (uvals[idx + n] - uvals[idx - n]) / (2.0 * h);
        values[idx] = 0.5 * (ux + C64::i() * uy);
    }
    field.values = values;
    field.excluded_band = excluded as f64 * h * h;
    field.boundary_ring_sup = field.ring_sup();
    if side == Side::Exterior {
        // |∂̄u| ≤ C/|z|² fitted on the outer ring; tail L² = C √π / R
        let c = field.grid.center();
        let amp = (0..n * n)
            .filter(|&i| grid.on_ring(i, 3) && !grid.on_ring(i, 1))
            .map(|i| field.values[i].norm() * (grid.cell(i) - c).norm_sqr())
            .fold(0.0, f64::max);
        field.tail_bound = amp * PI.sqrt() / grid.half_width;
    }
    field
}

/// In-place 2D FFT of a row-major `n × n` array.
fn fft2(values: &mut [C64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let rows: Vec<Vec<C64>> = exec::map_range(n, |j| {
        let mut row = values[j * n..(j + 1) * n].to_vec();
        fft.process(&mut row);
        row
    });
    let cols: Vec<Vec<C64>> = exec::map_range(n, |i| {
        let mut col: Vec<C64> = (0..n).map(|j| rows[j][i]).collect();
        fft.process(&mut col);
        col
    });
    for (i, col) in cols.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            values[j * n + i] = *v;
        }
    }
}

/// Beurling transform by the multiplier `conj(ξ)/ξ`, `m(0) = 0`.
pub fn beurling_transform(field: &GridField) -> GridField {
    let n = field.grid.n;
    let mut buf = field.values.clone();
    fft2(&mut buf, n, false);
    let freq = |k: usize| if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    let scale = 1.0 / (n * n) as f64;
    for j in 0..n {
        for i in 0..n {
            let xi = C64::new(freq(i), freq(j));
            let idx = j * n + i;
            buf[idx] = if i == 0 && j == 0 { C64::new(0.0, 0.0) } else { buf[idx] * (xi.conj() / xi) * scale };
        }
    }
    fft2(&mut buf, n, true);
    let max = field.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut out = field.with_values(buf);
    out.periodization_warning = field.boundary_ring_sup > PERIODIZATION_TOL * max;
    out
}

/// Relative L² error of `B(∂̄g)` against `∂g` for the Gaussian
/// `g = exp(−|z|²/(2σ²))` on a `2^m` grid over `[−1, 1]²`.
pub fn multiplier_calibration(m: u32, sigma: f64) -> Result<f64> {
    let grid = GridBox::new(C64::new(0.0, 0.0), 1.0, m)?;
    let g = |z: C64| (-z.norm_sqr() / (2.0 * sigma * sigma)).exp();
    let dbar = GridField::from_fn(grid, |z| -z / (2.0 * sigma * sigma) * g(z));
    let exact = GridField::from_fn(grid, |z| -z.conj() / (2.0 * sigma * sigma) * g(z));
    let b = beurling_transform(&dbar);
    let diff = b.with_values(b.values.iter().zip(&exact.values).map(|(a, e)| a - e).collect());
    Ok(diff.l2_norm() / exact.l2_norm())
}

/// Sets each zeroed band cell on one side to the mean of its already
/// filled neighbours, sweeping outward from the valid region.
fn fill_band(field: &mut GridField, side: Side, band_cells: f64) {
    let n = field.grid.n;
    let h = field.grid.spacing();
    let want = |f: &GridField, i: usize| f.inside_mask[i] == (side == Side::Interior) && !f.grid.on_ring(i, 1);
    let mut filled: Vec<bool> = (0..n * n).map(|i| want(field, i) && field.distance[i] >= band_cells * h).collect();
    for _ in 0..(band_cells.ceil() as usize + 4) {
        let mut updates = vec![];
        for idx in 0..n * n {
            if filled[idx] || !want(field, idx) {
                continue;
            }
            let (i, j) = (idx % n, idx / n);
            let mut acc = C64::new(0.0, 0.0);
            let mut count = 0;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                    continue;
                }
                let nb = b as usize * n + a as usize;
                if filled[nb] {
                    acc += field.values[nb];
                    count += 1;
                }
            }
            if count > 0 {
                updates.push((idx, acc / count as f64));
            }
        }
        if updates.is_empty() {
            break;
        }
        for (idx, v) in updates {
            field.values[idx] = v;
            filled[idx] = true;
        }
    }
}

/// Harmonic extensions `(u_i, u_e)` of node data.
///
/// Circles use the Poisson series. Other curves use a double layer inside,
/// and outside the double layer on the image of the curve under the
/// inversion `z ↦ a + 1/conj(z − a)` about the interior probe `a`.
pub fn harmonic_extensions(curve: &SampledCurve, f: &[C64]) -> Result<(Box<dyn Harmonic>, Box<dyn Harmonic>)> {
    if f.len() != curve.len() {
        return Err(Error::InvalidInput(format!("{} samples for {} nodes", f.len(), curve.len())));
    }
    if let Some(CurveSpec::Circle { radius }) = curve.spec {
        if (curve.nodes[0] - C64::new(radius, 0.0)).norm() < 1e-12 * radius {
            let zero = C64::new(0.0, 0.0);
            return Ok((
                Box::new(DiskPoisson::new(f, zero, radius, Side::Interior)?),
                Box::new(DiskPoisson::new(f, zero, radius, Side::Exterior)?),
            ));
        }
    }
    let interior = DoubleLayer::solve(curve, f)?;
    let a = curve.interior_probe;
    let inv = move |z: C64| a + 1.0 / (z - a).conj();
    let image: Vec<C64> = curve.nodes.iter().map(|&z| inv(z)).collect();
    let star = reparametrize_arclength(&image, curve.len())?;
    // data carried to the new nodes by arc-length linear interpolation
    let n = image.len();
    let mut cum = vec![0.0; n + 1];
    for k in 0..n {
        cum[k + 1] = cum[k] + (image[(k + 1) % n] - image[k]).norm();
    }
    let total = cum[n];
    let offset = {
        let (s, _) = star.project(image[0]);
        s
    };
    let g: Vec<C64> = (0..star.len())
        .map(|k| {
            let s = (star.arclength(k) - offset).rem_euclid(total) * total / star.total_length;
            let i = cum.partition_point(|&c| c <= s).clamp(1, n) - 1;
            let t = ((s - cum[i]) / (cum[i + 1] - cum[i]).max(1e-300)).clamp(0.0, 1.0);
            f[i] * (1.0 - t) + f[(i + 1) % n] * t
        })
        .collect();
    let exterior = DoubleLayer::solve(&star, &g)?;
    Ok((Box::new(interior), Box::new(move |z: C64| exterior.value(inv(z)))))
}

/// Norms of the grid split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitNorms {
    pub s: f64,
    /// `(∬_{Ω_i} |F_i′|² d^{1−2s})^{1/2}`.
    pub fi_weighted: f64,
    pub fe_weighted: f64,
    /// `(∬_{Ω_e} |∂̄u_e|² d^{1−2s})^{1/2}`.
    pub input_e_weighted: f64,
    pub input_i_weighted: f64,
    /// `fi_weighted / input_e_weighted` (absent when the input vanishes).
    pub ratio_i: Option<f64>,
    pub ratio_e: Option<f64>,
    pub fi_l2: f64,
    pub fe_l2: f64,
    pub input_e_l2: f64,
    pub input_i_l2: f64,
    pub tail_bound: f64,
    /// `‖F_i′‖ ≤ ‖∂̄u_e‖ + tail` and the same for `F_e′`, unweighted.
    pub bound_holds: bool,
    pub excluded_band: f64,
    /// Largest sampled `⟨ω⟩⟨ω⁻¹⟩` of the weight over disks centred on Γ.
    pub a2_ratio: f64,
    pub weight_ill_conditioned: bool,
}

#[derive(Debug, Clone)]
pub struct GridSplit {
    /// `F_i′ = B(∂̄u_e χ_e)` on interior cells (zero elsewhere).
    pub fi_prime: GridField,
    /// `F_e′ = −B(∂̄u_i χ_i)` on exterior cells (zero elsewhere).
    pub fe_prime: GridField,
    pub norms: SplitNorms,
}

/// Options for [`dirichlet_split_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub m: u32,
    pub half_width: Option<f64>,
    pub band_cells: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { m: 9, half_width: None, band_cells: BAND_CELLS }
    }
}

/// Sampled A₂ ratio of `ω` on disks centred at curve nodes.
fn a2_on_grid(field: &GridField, curve: &SampledCurve, weight: &(dyn Fn(usize) -> f64 + Sync)) -> f64 {
    let grid = field.grid;
    let h = grid.spacing();
    let n = grid.n;
    let stride = (curve.len() / 16).max(1);
    let centers: Vec<C64> = curve.nodes.iter().step_by(stride).copied().collect();
    let mut radii = vec![];
    let mut r = 4.0 * h;
    while r <= 0.5 * curve.diameter() {
        radii.push(r);
        r *= 2.0;
    }
    let jobs: Vec<(C64, f64)> = centers.iter().flat_map(|&c| radii.iter().map(move |&r| (c, r))).collect();
    let ratios = exec::map_slice(&jobs, |&(c, r)| {
        let to = |v: f64, o: f64| ((v - o + grid.half_width) / h).floor().clamp(0.0, (n - 1) as f64) as usize;
        let (i0, i1) = (to(c.re - r, grid.center[0]), to(c.re + r, grid.center[0]));
        let (j0, j1) = (to(c.im - r, grid.center[1]), to(c.im + r, grid.center[1]));
        let (mut sw, mut si, mut cnt) = (0.0, 0.0, 0usize);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let idx = j * n + i;
                if (grid.cell(idx) - c).norm() <= r {
                    let w = weight(idx);
                    sw += w;
                    si += 1.0 / w;
                    cnt += 1;
                }
            }
        }
        if cnt == 0 {
            1.0
        } else {
            sw * si / (cnt * cnt) as f64
        }
    });
    exec::max_of(&ratios).max(1.0)
}

/// `F_i′ = B(∂̄u_e χ_e)`, `F_e′ = −B(∂̄u_i χ_i)` with weighted norms against
/// the input ∂̄ energies.
pub fn dirichlet_split_grid(curve: &SampledCurve, f: &[C64], s: f64, opts: GridOptions) -> Result<GridSplit> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} outside (0, 1)")));
    }
    let grid = GridBox::for_curve(curve, opts.m, opts.half_width)?;
    let (ui, ue) = harmonic_extensions(curve, f)?;
    let mut di = dbar_field(curve, ui.as_ref(), Side::Interior, grid, opts.band_cells);
    let mut de = dbar_field(curve, ue.as_ref(), Side::Exterior, grid, opts.band_cells);
    let excluded_band = di.excluded_band + de.excluded_band;
    fill_band(&mut di, Side::Interior, opts.band_cells);
    fill_band(&mut de, Side::Exterior, opts.band_cells);
    let mask = di.inside_mask.clone();
    let mut fi = beurling_transform(&de);
    let mut fe = beurling_transform(&di);
    for (idx, (a, b)) in fi.values.iter_mut().zip(fe.values.iter_mut()).enumerate() {
        if mask[idx] {
            *b = C64::new(0.0, 0.0);
        } else {
            *a = C64::new(0.0, 0.0);
            *b = -*b;
        }
    }
    fi.boundary_ring_sup = fi.ring_sup();
    fe.boundary_ring_sup = fe.ring_sup();
    let dist = &di.distance;
    let wexp = 1.0 - 2.0 * s;
    let floor = 1e-3 * grid.spacing();
    let weight = |idx: usize| dist[idx].max(floor).powf(wexp);
    let inside = |idx: usize| mask[idx];
    let outside = |idx: usize| !mask[idx];
    let fi_weighted = fi.weighted_norm(weight, inside);
    let fe_weighted = fe.weighted_norm(weight, outside);
    let input_e_weighted = de.weighted_norm(weight, outside);
    let input_i_weighted = di.weighted_norm(weight, inside);
    let (fi_l2, fe_l2) = (fi.l2_norm(), fe.l2_norm());
    let (input_e_l2, input_i_l2) = (de.l2_norm(), di.l2_norm());
    let tail_bound = de.tail_bound;
    let slack = 1e-9 * (input_e_l2 + input_i_l2).max(1e-300);
    let bound_holds = fi_l2 <= input_e_l2 + tail_bound + slack && fe_l2 <= input_i_l2 + slack;
    let ratio = |a: f64, b: f64| if b > 1e-12 * (1.0 + a) { Some(a / b) } else { None };
    let a2_ratio = a2_on_grid(&di, curve, &weight);
    Ok(GridSplit {
        norms: SplitNorms {
            s,
            fi_weighted,
            fe_weighted,
            input_e_weighted,
            input_i_weighted,
            ratio_i: ratio(fi_weighted, input_e_weighted),
            ratio_e: ratio(fe_weighted, input_i_weighted),
            fi_l2,
            fe_l2,
            input_e_l2,
            input_i_l2,
            tail_bound,
            bound_holds,
            excluded_band,
            a2_ratio,
            weight_ill_conditioned: a2_ratio > A2_LIMIT,
        },
        fi_prime: fi,
        fe_prime: fe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_curve, distance_to_curve};

    #[test]
    fn distance_field_matches_direct() {
        let c = build_curve(&CurveSpec::square(1.0), 64).unwrap();
        let g = GridBox::for_curve(&c, 6, None).unwrap();
        let d = distance_field(&c.nodes, &g);
        for idx in (0..g.n * g.n).step_by(37) {
            let e = distance_to_curve(&c, g.cell(idx));
            assert!((d[idx] - e).abs() < 1e-12, "{idx}: {} {}", d[idx], e);
        }
    }

    #[test]
    fn dbar_trivial_fields() {
        let c = build_curve(&CurveSpec::Circle { radius: 1.0 }, 256).unwrap();
        let g = GridBox::for_curve(&c, 7, None).unwrap();
        let check = |u: fn(C64) -> C64, want: C64| {
            let f = dbar_field(&c, &u, Side::Interior, g, BAND_CELLS);
            for (idx, v) in f.values.iter().enumerate() {
                if f.inside_mask[idx] && f.distance[idx] >= 2.0 * g.spacing() {
                    assert!((v - want).norm() < 1e-9, "{v}");
                }
            }
            assert!(f.excluded_band > 0.0);
        };
        check(|z| C64::new(z.re, 0.0), C64::new(0.5, 0.0));
        check(|z| z, C64::new(0.0, 0.0));
        check(|z| z.conj(), C64::new(1.0, 0.0));
    }

    #[test]
    fn calibration_on_gaussian() {
        let e = multiplier_calibration(8, 0.1).unwrap();
        assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn isometry_on_mean_zero_field() {
        let g = GridBox::new(C64::new(0.0, 0.0), 1.0, 7).unwrap();
        let f = GridField::from_fn(g, |z| z * (-8.0 * z.norm_sqr()).exp() + C64::new(0.0, 1.0) * (z - 0.2).conj() * (-20.0 * (z - 0.2).norm_sqr()).exp());
        let b = beurling_transform(&f);
        assert!((b.l2_norm() / f.l2_norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn disk_indicator_pattern() {
        let c = build_curve(&CurveSpec::Circle { radius: 1.0 }, 512).unwrap();
        let g = GridBox::for_curve(&c, 9, None).unwrap();
        let mut chi = GridField::for_curve(&c, g);
        chi.values = chi.inside_mask.iter().map(|&m| C64::new(if m { 1.0 } else { 0.0 }, 0.0)).collect();
        let b = beurling_transform(&chi);
        for z in [C64::new(1.5, 0.0), C64::new(0.0, 1.7), C64::new(-1.2, 1.1), C64::new(1.4, -1.4)] {
            let want = -1.0 / (z * z);
            assert!((b.sample(z) - want).norm() < 0.02 * want.norm(), "{z}: {} {want}", b.sample(z));
        }
        assert!(b.sample(C64::new(0.1, 0.2)).norm() < 0.02);
    }

    #[test]
    fn split_of_constant_is_zero() {
        let c = build_curve(&CurveSpec::Circle { radius: 1.0 }, 128).unwrap();
        let sp = dirichlet_split_grid(&c, &vec![C64::new(3.0, 0.0); 128], 0.5, GridOptions { m: 7, ..Default::default() }).unwrap();
        assert!(sp.fi_prime.l2_norm() < 1e-10 && sp.fe_prime.l2_norm() < 1e-10);
    }

    #[test]
    fn split_of_cosine_on_circle() {
        let c = build_curve(&CurveSpec::Circle { radius: 1.0 }, 256).unwrap();
        let f: Vec<C64> = c.nodes.iter().map(|z| C64::new(z.re, 0.0)).collect();
        let sp = dirichlet_split_grid(&c, &f, 0.5, GridOptions { m: 9, ..Default::default() }).unwrap();
        // F_i = z/2, F_e = −1/(2z)
        for z in [C64::new(0.2, 0.1), C64::new(-0.4, 0.3)] {
            assert!((sp.fi_prime.sample(z) - 0.5).norm() < 0.05 * 0.5, "{}", sp.fi_prime.sample(z));
        }
        for z in [C64::new(1.5, 0.3), C64::new(-0.5, -1.6)] {
            let want = 0.5 / (z * z);
            assert!((sp.fe_prime.sample(z) - want).norm() < 0.05 * want.norm());
        }
        assert!(sp.norms.bound_holds, "{:?}", sp.norms);
    }
}

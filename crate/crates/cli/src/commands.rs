//! Subcommand bodies.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use plemelj_core::beurling::harmonic_extensions;
use plemelj_core::cauchy::{build_sio, operator_norm, plemelj_split, Space};
use plemelj_core::conformal::{riemann_map, RiemannMap};
use plemelj_core::geometry::{build_curve, CurveSpec, SampledCurve};
use plemelj_core::harmonic::Harmonic;
use plemelj_core::regularity::regularity_report;
use plemelj_core::sobolev::{
    circle_exterior_pullback, direct_weighted_energy, douglas_norm_parts, pullback_energy, trace_pullback_energy, BoundaryFunction,
    DirectOptions, EnergyReport, EnergyWeight,
};
use plemelj_core::C64;
use serde::Serialize;

use crate::config::{curve_id, Bump, Coeff, ExperimentConfig, FunctionSpec};
use crate::output::{sci, write_json, Table};
use crate::{CliError, Kind};

/// Boundary samples per trace for the pullback of non-holomorphic data.
pub const TRACE_SAMPLES: usize = 2048;

/// Default Lipschitz constants of the `murai` family.
pub const MURAI_M: [f64; 4] = [0.2, 0.5, 1.0, 2.0];

/// Petal count of the `murai` family `r = 1 + (M/k) cos kθ`.
pub const MURAI_K: u32 = 4;

pub fn run(kind: Kind, cfg: &ExperimentConfig) -> Result<(), CliError> {
    match kind {
        Kind::Norms => norms(cfg),
        Kind::Plemelj => plemelj(cfg),
        Kind::Regularity => regularity(cfg),
        Kind::SweepEquivalence => sweep(cfg),
        Kind::Murai => murai(cfg),
    }
}

fn sample(f: &FunctionSpec, curve: &SampledCurve, z: C64) -> C64 {
    f.value(z, curve.total_length, |w| curve.project(w).0)
}

fn boundary_function(f: &FunctionSpec, curve: &SampledCurve) -> BoundaryFunction {
    BoundaryFunction::from_fn(curve, |z| sample(f, curve, z), &f.label())
}

/// Samples of the trace on `𝕋` at `2πj/M`, through the boundary map.
fn disk_trace(f: &FunctionSpec, map: &RiemannMap, curve: &SampledCurve) -> Vec<C64> {
    (0..TRACE_SAMPLES).map(|j| sample(f, curve, map.boundary_point(2.0 * PI * j as f64 / TRACE_SAMPLES as f64))).collect()
}

fn interior_pullback(f: &FunctionSpec, map: &RiemannMap, curve: &SampledCurve, s: f64) -> Result<f64, CliError> {
    Ok(match f.holo() {
        Some(h) => pullback_energy(map, &h, s)?.value,
        None => trace_pullback_energy(map, &disk_trace(f, map, curve), s)?.value,
    })
}

fn exterior_pullback(f: &FunctionSpec, map: &RiemannMap, curve: &SampledCurve, s: f64) -> Result<Option<f64>, CliError> {
    match map {
        RiemannMap::Disk { radius } => Ok(Some(circle_exterior_pullback(&disk_trace(f, map, curve), *radius, s)?)),
        _ => Ok(None),
    }
}

#[derive(Serialize)]
struct NormsSidecar {
    curve_id: String,
    /// Function label of each block of rows, in file order.
    functions: Vec<String>,
    rows_per_function: usize,
}

fn norms(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let id = curve_id(&cfg.curve);
    let functions = if cfg.functions.is_empty() { vec![FunctionSpec::monomial(1)] } else { cfg.functions.clone() };
    write_json(
        &cfg.outputs,
        "norms.json",
        &NormsSidecar {
            curve_id: id.clone(),
            functions: functions.iter().map(FunctionSpec::label).collect(),
            rows_per_function: cfg.s_grid.len() * cfg.resolutions.len(),
        },
    )?;
    let mut table = Table::create(&cfg.outputs, "norms.csv", EnergyReport::CSV_HEADER)?;
    let map = riemann_map(&cfg.curve)?;
    let curves: Vec<SampledCurve> = cfg.resolutions.iter().map(|&n| build_curve(&cfg.curve, n)).collect::<Result<_, _>>()?;
    for f in &functions {
        let extension: Option<Box<dyn Harmonic>> = match (cfg.direct_grid, f.holo()) {
            (Some(_), None) => {
                let finest = curves.last().expect("validated nonempty");
                Some(harmonic_extensions(finest, &boundary_function(f, finest).values)?.0)
            }
            _ => None,
        };
        for &s in &cfg.s_grid {
            let pullback_interior = interior_pullback(f, &map, &curves[0], s)?;
            let pullback_exterior = exterior_pullback(f, &map, &curves[0], s)?;
            for curve in &curves {
                let d = douglas_norm_parts(curve, &boundary_function(f, curve), s)?;
                let direct_grid = match cfg.direct_grid {
                    None => None,
                    Some(base) => {
                        let opts = DirectOptions { base, max_depth: 6, weight: EnergyWeight::Distance };
                        let e = match (&extension, f.holo()) {
                            (Some(u), _) => direct_weighted_energy(curve, u.as_ref(), s, opts)?,
                            (None, Some(h)) => direct_weighted_energy(curve, &move |z: C64| h.value(z), s, opts)?,
                            (None, None) => unreachable!("extension built for non-holomorphic data"),
                        };
                        Some(e.value)
                    }
                };
                let report = EnergyReport {
                    s,
                    douglas: d.value,
                    pullback_interior,
                    pullback_exterior,
                    direct_grid,
                    hardy_e2: None,
                    band_correction: d.band,
                };
                table.row(&report.csv_row(&id, curve.len()))?;
            }
        }
    }
    Ok(())
}

fn spaces(s_grid: &[f64]) -> Vec<Space> {
    let mut out = vec![Space::L2, Space::H1];
    out.extend(s_grid.iter().map(|&s| Space::Hs { s }));
    out
}

fn space_s(space: Space) -> String {
    match space {
        Space::Hs { s } => s.to_string(),
        _ => String::new(),
    }
}

fn plemelj(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let id = curve_id(&cfg.curve);
    let functions = if cfg.functions.is_empty() {
        vec![FunctionSpec::monomial(1), FunctionSpec::Pole { pole: [0.0, 0.0] }]
    } else {
        cfg.functions.clone()
    };
    let mut splits = Table::create(&cfg.outputs, "plemelj.csv", "curve_id,N,function,jump_residual,involution_residual")?;
    let mut norms = Table::create(&cfg.outputs, "operator_norms.csv", "curve_id,N,space,s,norm,iterations,regularized")?;
    for &n in &cfg.resolutions {
        let curve = build_curve(&cfg.curve, n)?;
        let op = build_sio(&curve)?;
        for f in &functions {
            let values = op.mesh.sample(|z| sample(f, &curve, z));
            let split = plemelj_split(&op, &values)?;
            splits.row(&format!("{id},{n},{},{},{}", f.label(), sci(split.jump_residual), sci(op.involution_residual(&values))))?;
        }
        for space in spaces(&cfg.s_grid) {
            let r = operator_norm(&op, space)?;
            let label = match space {
                Space::L2 => "L2",
                Space::H1 => "H1",
                Space::Hs { .. } => "Hs",
            };
            norms.row(&format!("{id},{n},{label},{},{},{},{}", space_s(space), sci(r.value), r.iterations, r.regularized))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RegularityOutput {
    curve_id: String,
    n: usize,
    #[serde(flatten)]
    report: plemelj_core::regularity::RegularityReport,
}

fn regularity(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let id = curve_id(&cfg.curve);
    let n = *cfg.resolutions.last().expect("validated nonempty");
    let curve = build_curve(&cfg.curve, n)?;
    let report = regularity_report(&curve, &cfg.s_grid, cfg.seed)?;
    let mut table = Table::create(&cfg.outputs, "h_delta.csv", "curve_id,delta,sup_m,regularity_constant")?;
    for row in &report.h_delta_table {
        table.row(&format!("{id},{},{},{}", row.delta, sci(row.sup_m), sci(row.regularity_constant)))?;
    }
    write_json(&cfg.outputs, "regularity.json", &RegularityOutput { curve_id: id, n, report })
}

/// Sweep family used when the config lists no functions.
pub fn default_family(curve: &CurveSpec) -> Vec<FunctionSpec> {
    let probe = build_curve(curve, 64).map(|c| (c.interior_probe, c.diameter())).unwrap_or((C64::new(0.0, 0.0), 2.0));
    let (c, diam) = probe;
    vec![
        FunctionSpec::monomial(1),
        FunctionSpec::monomial(2),
        FunctionSpec::Pole { pole: [c.re + 1.5 * diam, c.im] },
        FunctionSpec::Bump { bump: Bump { center: [c.re + 0.3 * diam, c.im + 0.1 * diam], width: 0.3 * diam } },
    ]
}

fn sweep(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let id = curve_id(&cfg.curve);
    let functions = if cfg.functions.is_empty() { default_family(&cfg.curve) } else { cfg.functions.clone() };
    let curves: Vec<SampledCurve> = cfg.resolutions.iter().map(|&n| build_curve(&cfg.curve, n)).collect::<Result<_, _>>()?;
    let mut table = Table::create(&cfg.outputs, "sweep.csv", "curve_id,s,N,function,douglas,pullback,ratio")?;
    let map = riemann_map(&cfg.curve)?;
    let mut ratios: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (si, &s) in cfg.s_grid.iter().enumerate() {
        for f in &functions {
            let pullback = interior_pullback(f, &map, &curves[0], s)? + exterior_pullback(f, &map, &curves[0], s)?.unwrap_or(0.0);
            for (ni, curve) in curves.iter().enumerate() {
                let douglas = douglas_norm_parts(curve, &boundary_function(f, curve), s)?.value;
                let ratio = douglas / pullback;
                ratios.entry((si, ni)).or_default().push(ratio);
                table.row(&format!("{id},{s},{},{},{},{},{}", curve.len(), f.label(), sci(douglas), sci(pullback), sci(ratio)))?;
            }
        }
    }
    let mut summary = Table::create(&cfg.outputs, "sweep_summary.csv", "curve_id,s,N,min_ratio,max_ratio,spread")?;
    for ((si, ni), r) in &ratios {
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.iter().copied().fold(0.0, f64::max);
        summary.row(&format!("{id},{},{},{},{},{}", cfg.s_grid[*si], cfg.resolutions[*ni], sci(lo), sci(hi), sci(hi / lo)))?;
    }
    Ok(())
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn murai(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let ms = cfg.murai_m.clone().unwrap_or_else(|| MURAI_M.to_vec());
    let n = *cfg.resolutions.last().expect("validated nonempty");
    let family = spaces(&cfg.s_grid);
    let mut table = Table::create(&cfg.outputs, "murai.csv", "curve_id,M,N,space,s,norm,iterations,regularized")?;
    let mut norms: Vec<Vec<f64>> = vec![vec![]; family.len()];
    for &m in &ms {
        let spec = CurveSpec::polar_cosine(1.0, MURAI_K, m / MURAI_K as f64);
        let id = curve_id(&spec);
        let op = build_sio(&build_curve(&spec, n)?)?;
        for (i, &space) in family.iter().enumerate() {
            let r = operator_norm(&op, space)?;
            norms[i].push(r.value);
            let label = space.label().replace(',', ";");
            table.row(&format!("{id},{m},{n},{label},{},{},{},{}", space_s(space), sci(r.value), r.iterations, r.regularized))?;
        }
    }
    let xs: Vec<f64> = ms.iter().map(|m| (1.0 + m).ln()).collect();
    let mut summary = Table::create(&cfg.outputs, "murai_summary.csv", "space,s,slope,max_over_min")?;
    for (space, v) in family.iter().zip(&norms) {
        let ys: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(0.0, f64::max);
        let label = space.label().replace(',', ";");
        summary.row(&format!("{label},{},{},{}", space_s(*space), sci(fit_slope(&xs, &ys)), sci(hi / lo)))?;
    }
    Ok(())
}

impl FunctionSpec {
    /// `z^k`.
    pub fn monomial(k: usize) -> FunctionSpec {
        let mut coeffs = vec![Coeff::Real(0.0); k + 1];
        coeffs[k] = Coeff::Real(1.0);
        FunctionSpec::Entire { entire: "poly".into(), coeffs }
    }
}

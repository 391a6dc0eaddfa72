use plemelj_core::conformal::riemann_map;
use plemelj_core::geometry::{build_curve, CurveSpec, SampledCurve};
use plemelj_core::regularity::*;
use plemelj_core::{Error, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn circle() -> SampledCurve {
    build_curve(&CurveSpec::Circle { radius: 1.0 }, 1024).unwrap()
}

fn square() -> SampledCurve {
    build_curve(&CurveSpec::square(1.0), 1024).unwrap()
}

fn koch(level: u32, side: f64) -> SampledCurve {
    build_curve(&CurveSpec::Koch { level, side }, 3 * 4usize.pow(level)).unwrap()
}

#[test]
fn circle_delta_one_constant_bounded_and_stable() {
    let r = delta_regularity_constant(&circle(), 1.0, 64).unwrap();
    assert!(r.constant <= 4.0 * PI * 1.02, "{}", r.constant);
    let c: Vec<f64> = r.per_radius.iter().map(|p| p.1).collect();
    for w in c.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.05, "{c:?}");
    }
}

#[test]
fn circle_is_one_and_a_half_regular() {
    // arcs flatten as R shrinks, so the δ = 1.5 constant does not grow
    let r = delta_regularity_constant(&circle(), 1.5, 64).unwrap();
    let c: Vec<f64> = r.per_radius.iter().map(|p| p.1).collect();
    assert!(c.last().unwrap() <= &(c[0] * 1.01), "{c:?}");
    assert!(c.iter().all(|v| v.is_finite()));
}

#[test]
fn koch_level5_fine_constant_grows_with_radius() {
    let curve = koch(5, 1.0);
    let tables = RegularityTables::new(&curve, &scale_window(&curve), 64, DEFAULT_SEED).unwrap();
    let c = tables.fine_constants(1.0);
    // oracle: N(t) ~ (R/t)^d at fixed t gives a factor 2^{d−1} per doubling
    let oracle = 2f64.powf(4f64.ln() / 3f64.ln() - 1.0);
    for w in c.windows(2) {
        let factor = w[0] / w[1];
        assert!(factor > 1.1 && factor < oracle * 1.1, "{factor} vs {oracle}: {c:?}");
    }
}

#[test]
fn estimate_h_smooth_and_polygonal() {
    for curve in [circle(), square()] {
        let e = estimate_h(&curve).unwrap();
        assert!((e.h - 1.0).abs() <= 0.05, "{e:?}");
    }
}

#[test]
fn estimate_h_koch_level5_and_scale_invariance() {
    let oracle = 4f64.ln() / 3f64.ln();
    let a = estimate_h(&koch(5, 1.0)).unwrap();
    assert!((a.h - oracle).abs() <= 0.1, "{a:?}");
    assert!(a.bracket.0 <= a.h && a.h <= a.bracket.1);
    let b = estimate_h(&koch(5, 10.0)).unwrap();
    assert!((a.h - b.h).abs() <= 0.02, "{a:?} {b:?}");
    // independent box-counting oracle on the same polyline
    assert!((box_counting_dimension(&koch(5, 1.0)) - oracle).abs() < 0.05);
}

#[test]
fn porosity_examples() {
    assert!(porosity_constant(&circle(), 64, DEFAULT_SEED) >= 0.24);
    assert!(porosity_constant(&square(), 64, DEFAULT_SEED) >= 0.2);
    let c = porosity_constant(&koch(4, 1.0), 64, DEFAULT_SEED);
    assert!(c > 0.0 && c < 1.0, "{c}");
}

#[test]
fn ap_constant_of_unit_weight_is_one() {
    let r = ap_constant_plane(&circle(), 1.0, ApClass::A2, 4, 256, DEFAULT_SEED).unwrap();
    assert!((r.constant - 1.0).abs() < 1e-12);
    let r = ap_constant_plane(&circle(), 1.0, ApClass::A1, 4, 256, DEFAULT_SEED).unwrap();
    assert!((r.constant - 1.0).abs() < 1e-12);
}

#[test]
fn ap_constant_circle_integrable_weight_is_stable() {
    let r = ap_constant_plane(&circle(), 0.5, ApClass::A2, 4, 4096, DEFAULT_SEED).unwrap();
    let c: Vec<f64> = r.per_radius.iter().map(|p| p.1).collect();
    let (lo, hi) = (c.iter().copied().fold(f64::INFINITY, f64::min), c.iter().copied().fold(0.0, f64::max));
    assert!(hi < 3.0 && hi / lo < 1.5, "{c:?}");
}

#[test]
fn ap_constant_circle_nonintegrable_weight_diverges() {
    // d^{−1.2} has infinite mass near Γ: the MC maximum grows like n^{0.2}
    // in the sample size, so refining 64× should roughly double it
    let growth = |alpha: f64| -> f64 {
        let mut r: Vec<f64> = (0..5u64)
            .map(|seed| {
                let a = ap_constant_plane(&circle(), alpha, ApClass::A2, 2, 256, seed).unwrap().constant;
                let b = ap_constant_plane(&circle(), alpha, ApClass::A2, 2, 16384, seed).unwrap().constant;
                b / a
            })
            .collect();
        r.sort_by(f64::total_cmp);
        r[2]
    };
    let g = growth(-0.2);
    assert!(g > 1.8, "{g}");
    let stable: Vec<f64> = [256, 1024, 4096]
        .iter()
        .map(|&p| ap_constant_plane(&circle(), 0.5, ApClass::A2, 4, p, DEFAULT_SEED).unwrap().constant)
        .collect();
    assert!(stable[2] < 1.25 * stable[0], "{stable:?}");
}

#[test]
fn a2_circle_unit_weight() {
    assert_eq!(a2_circle_constant(&[1.0; 64]).unwrap(), 1.0);
    assert!(matches!(a2_circle_constant(&[1.0, 0.0, 1.0]), Err(Error::InvalidWeight { index: 1, .. })));
}

fn square_speed(n: usize) -> Vec<f64> {
    let map = riemann_map(&CurveSpec::square(1.0)).unwrap();
    (0..n).map(|k| map.boundary_speed(2.0 * PI * (k as f64 + 0.37) / n as f64)).collect()
}

#[test]
fn a2_square_map_derivative_stable_under_doubling() {
    let a = a2_circle_constant(&square_speed(512)).unwrap();
    let b = a2_circle_constant(&square_speed(1024)).unwrap();
    assert!(a.is_finite() && a < 3.0);
    assert!((b / a - 1.0).abs() < 0.1, "{a} {b}");
}

#[test]
fn a2_circle_power_singularity_blows_up() {
    let w = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                let t = if t > PI { t - 2.0 * PI } else { t };
                t.abs().powf(-1.5)
            })
            .collect()
    };
    let c: Vec<f64> = [256, 1024, 4096].iter().map(|&n| a2_circle_constant(&w(n)).unwrap()).collect();
    // oracle: the innermost arc pair scales like N^{1/2}
    assert!(c[1] > 1.8 * c[0] && c[2] > 1.8 * c[1], "{c:?}");
}

#[test]
fn solvable_interval_examples() {
    assert_eq!(solvable_interval(1.0).unwrap(), (0.0, 1.0));
    let (lo, hi) = solvable_interval(1.262).unwrap();
    assert!((lo - 0.131).abs() < 1e-12 && (hi - 0.869).abs() < 1e-12);
    let (lo, hi) = solvable_interval(1.9).unwrap();
    assert!((lo - 0.45).abs() < 1e-12 && (hi - 0.55).abs() < 1e-12);
    assert!(matches!(solvable_interval(2.0), Err(Error::EmptyInterval(_))));
}

#[test]
fn regularity_report_circle() {
    let r = regularity_report(&build_curve(&CurveSpec::Circle { radius: 1.0 }, 256).unwrap(), &[0.25, 0.75], 7).unwrap();
    assert_eq!(r.seed, 7);
    assert!((r.h_estimate - 1.0).abs() <= 0.05);
    assert_eq!(r.solvable_interval, Some((0.0, 1.0)));
    assert!(r.porosity_c > 0.0 && r.porosity_c < 1.0);
    assert!(r.ap_constants.contains_key("A2,s=0.25") && r.ap_constants.contains_key("A1,s=0.75"));
    assert_eq!(r.h_delta_table.len(), 5);
    let json = serde_json::to_string(&r).unwrap();
    let back: RegularityReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.h_estimate, r.h_estimate);
}

#[test]
fn bitmap_pbm_dump() {
    let segs = vec![(C64::new(0.0, 0.0), C64::new(1.0, 0.0))];
    let bm = DilationBitmap::new(&segs, 0.25, 0.25 / 16.0).unwrap();
    let path = std::env::temp_dir().join(format!("plemelj-pbm-{}.pbm", std::process::id()));
    bm.write_pbm(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(text.starts_with("P1"));
    let ones = text.lines().skip(2).flat_map(|l| l.split_whitespace()).filter(|t| *t == "1").count() as u64;
    assert_eq!(ones, bm.count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solvable_interval_symmetric(h in 1.0f64..1.999) {
        let (lo, hi) = solvable_interval(h).unwrap();
        prop_assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-15);
        prop_assert!(lo < hi);
    }

    #[test]
    fn ladder_algebra(delta in 1.0f64..2.0, len in 0.1f64..2.0) {
        let segs = vec![(C64::new(0.0, 0.0), C64::new(len, 0.0))];
        let tab = DilationTable::new(&segs, &ladder(len, 3)).unwrap();
        let m1 = tab.m_delta(1.0);
        for ((m, m1), t) in tab.m_delta(delta).iter().zip(&m1).zip(&tab.t) {
            prop_assert!((m - m1 * t.powf(delta - 1.0)).abs() <= 1e-12 * m.abs());
        }
    }

    #[test]
    fn dilation_area_monotone_in_t(len in 0.1f64..2.0) {
        let segs = vec![(C64::new(0.0, 0.0), C64::new(len, 0.3 * len))];
        let tab = DilationTable::new(&segs, &ladder(len, 4)).unwrap();
        for w in tab.area.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }
}

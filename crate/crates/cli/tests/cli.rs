use std::path::Path;
use std::process::{Command, Output};

use plemelj_core::geometry::CurveSpec;
use plemelj_lab::{curve_id, Coeff, ExperimentConfig, FunctionSpec};
use proptest::prelude::*;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plemelj-lab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn norms_on_circle_has_contract_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"curve": {"kind": "circle", "radius": 1.0}, "functions": [{"fourier": {"3": 1.0}}], "resolutions": [64]}"#);
    let out = dir.path().join("out");
    let o = lab(&["norms", "--config", &cfg, "--out", out.to_str().unwrap(), "--s", "0.25,0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("norms.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "curve_id,s,N,douglas,pullback_i,pullback_e,direct,band_corr");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let id = curve_id(&CurveSpec::Circle { radius: 1.0 });
    for r in &rows {
        assert_eq!(r.len(), 8);
        assert_eq!(r[0], id);
        assert_eq!(r[2], "64");
        assert!(r[5].parse::<f64>().is_ok(), "pullback_e on a circle");
        assert!(r[6].is_empty(), "direct only when direct_grid is set");
    }
    // e^{3iθ}: interior and exterior pullbacks agree by symmetry
    let (pi, pe): (f64, f64) = (rows[1][4].parse().unwrap(), rows[1][5].parse().unwrap());
    assert!((pi - pe).abs() < 1e-6 * pi, "{pi} {pe}");
}

#[test]
fn regularity_writes_json_with_estimate_and_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"curve": {"kind": "koch", "level": 4, "side": 1.0}, "resolutions": [768], "s_grid": [0.5]}"#);
    let out = dir.path().join("out");
    let o = lab(&["regularity", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("regularity.json")).unwrap()).unwrap();
    let h = v["h_estimate"].as_f64().unwrap();
    assert!(h > 1.05 && h < 1.4, "{h}");
    let interval = v["solvable_interval"].as_array().unwrap();
    let (lo, hi) = (interval[0].as_f64().unwrap(), interval[1].as_f64().unwrap());
    assert!((lo - (h - 1.0) / 2.0).abs() < 1e-12 && (hi - (3.0 - h) / 2.0).abs() < 1e-12);
    assert!(std::fs::read_to_string(out.join("h_delta.csv")).unwrap().starts_with("curve_id,delta,sup_m,regularity_constant\n"));
}

#[test]
fn sweep_summary_has_min_max_per_s() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"curve": {"kind": "circle", "radius": 1.0}, "resolutions": [64]}"#);
    let out = dir.path().join("out");
    let o = lab(&["sweep-equivalence", "--config", &cfg, "--s", "0.25,0.75", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "curve_id,s,N,min_ratio,max_ratio,spread");
    assert_eq!(rows.len(), 3);
    for r in &rows[1..] {
        let f: Vec<f64> = r.split(',').skip(3).map(|x| x.parse().unwrap()).collect();
        assert!(f[0] <= f[1] && (f[2] - f[1] / f[0]).abs() < 1e-9 * f[2]);
    }
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 2 * 4);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    for json in [
        r#"{"curve": {"kind": "circle", "radius": 1.0}, "s_grid": [0.5, 1.0]}"#,
        r#"{"curve": {"kind": "circle", "radius": 1.0}, "resolutions": [128, 64]}"#,
        r#"{"curve": {"kind": "circle", "radius": -1.0}}"#,
        r#"{"curve": {"kind": "circle", "radius": 1.0}, "functions": [{"bump": {"center": [0, 0], "width": 0}}]}"#,
        r#"{"curve": {"kind": "circle"}}"#,
        "not json",
    ] {
        let cfg = write_config(dir.path(), json);
        let o = lab(&["norms", "--config", &cfg, "--out", out]);
        assert_eq!(o.status.code(), Some(2), "{json}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(lab(&["norms", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(lab(&["nonsense"]).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"curve": {"kind": "circle", "radius": 1.0}}"#);
    assert_eq!(lab(&["norms", "--config", &cfg, "--s", "0.5,2"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three_and_keeps_partial_output() {
    // a Theodorsen-divergent curve: r = 1 + 0.3 cos 8θ has max |r′/r| > 1
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"curve": {"kind": "polar_lipschitz", "coeffs": {"0": 1.0, "8": 0.3}}, "resolutions": [64]}"#);
    let out = dir.path().join("out");
    let o = lab(&["sweep-equivalence", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out.join("sweep.csv")).unwrap(), "curve_id,s,N,function,douglas,pullback,ratio\n");
    let o = lab(&["murai", "--config", &cfg, "--out", out.to_str().unwrap(), "--s", "0.5"]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(out.join("murai.csv")).unwrap().lines().count() == 1 + 4 * 3);
}

#[test]
fn config_defaults_and_function_forms() {
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{"curve": {"kind": "ellipse", "a": 2.0, "b": 1.0},
            "functions": [{"fourier": {"1": 1.0, "-2": [0.0, 1.0]}}, {"entire": "poly", "coeffs": [1, [0, 2]]}, {"pole": [3, 0]}, {"bump": {"center": [1, 0], "width": 0.5}}]}"#,
    )
    .unwrap();
    assert_eq!(cfg.s_grid, vec![0.25, 0.5, 0.75]);
    cfg.validate().unwrap();
    assert!(matches!(cfg.functions[0], FunctionSpec::Fourier { .. }));
    assert!(matches!(&cfg.functions[1], FunctionSpec::Entire { coeffs, .. } if coeffs[1] == Coeff::Complex([0.0, 2.0])));
    assert!(cfg.functions[2].holo().is_some() && cfg.functions[3].holo().is_none());
    for f in &cfg.functions {
        assert!(!f.label().contains(','), "{}", f.label());
    }
    let bad: Result<ExperimentConfig, _> = serde_json::from_str(r#"{"curve": {"kind": "circle", "radius": 1.0}, "extra": 1}"#);
    assert!(bad.is_err());
}

#[test]
fn fourier_values_follow_arc_length() {
    let curve = plemelj_core::geometry::build_curve(&CurveSpec::Circle { radius: 2.0 }, 64).unwrap();
    let f: FunctionSpec = serde_json::from_str(r#"{"fourier": {"2": 1.0}}"#).unwrap();
    for &z in &curve.nodes {
        let v = f.value(z, curve.total_length, |w| curve.project(w).0);
        assert!((v - (z / 2.0).powi(2)).norm() < 1e-9, "{z}: {v}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curve_id_is_stable_hex_and_separates_radii(r in 0.1f64..10.0, dr in 1e-6f64..1.0) {
        let a = curve_id(&CurveSpec::Circle { radius: r });
        prop_assert_eq!(a.len(), 16);
        prop_assert!(a.chars().all(|c| c.is_ascii_hexdigit()));
        prop_assert_eq!(&a, &curve_id(&CurveSpec::Circle { radius: r }));
        prop_assert_ne!(a, curve_id(&CurveSpec::Circle { radius: r + dr }));
    }

    #[test]
    fn s_grid_validation_matches_open_interval(s in -1.0f64..2.0) {
        let cfg = ExperimentConfig {
            curve: CurveSpec::Circle { radius: 1.0 },
            functions: vec![],
            s_grid: vec![s],
            resolutions: vec![64],
            seed: 0,
            outputs: "out".into(),
            direct_grid: None,
            murai_m: None,
        };
        prop_assert_eq!(cfg.validate().is_ok(), s > 0.0 && s < 1.0);
    }
}

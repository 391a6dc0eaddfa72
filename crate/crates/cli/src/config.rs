//! Experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plemelj_core::geometry::CurveSpec;
use plemelj_core::holomorphic::Holo;
use plemelj_core::regularity::DEFAULT_SEED;
use plemelj_core::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Complex coefficient written as a number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Real(f64),
    Complex([f64; 2]),
}

impl Coeff {
    pub fn value(self) -> C64 {
        match self {
            Coeff::Real(x) => C64::new(x, 0.0),
            Coeff::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub width: f64,
}

/// Boundary data.
///
/// * `{"fourier": {"n": c}}`: `Σ c_n e^{2πinσ/L}` in the arc-length variable.
/// * `{"entire": "poly", "coeffs": [...]}`: `Σ c_k z^k`.
/// * `{"pole": [x, y]}`: `(z − p)^{-1}`.
/// * `{"bump": {"center": [x, y], "width": w}}`: `exp(−|z−c|²/w²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Fourier { fourier: BTreeMap<String, Coeff> },
    Entire { entire: String, coeffs: Vec<Coeff> },
    Pole { pole: [f64; 2] },
    Bump { bump: Bump },
}

impl FunctionSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            FunctionSpec::Fourier { fourier } => {
                for k in fourier.keys() {
                    k.parse::<i64>().map_err(|_| CliError::Validation(format!("fourier mode {k:?} is not an integer")))?;
                }
                Ok(())
            }
            FunctionSpec::Entire { entire, coeffs } => {
                if entire != "poly" {
                    return Err(CliError::Validation(format!("entire kind {entire:?} (only \"poly\")")));
                }
                if coeffs.is_empty() {
                    return Err(CliError::Validation("empty polynomial".into()));
                }
                Ok(())
            }
            FunctionSpec::Pole { .. } => Ok(()),
            FunctionSpec::Bump { bump } => {
                if bump.width > 0.0 {
                    Ok(())
                } else {
                    Err(CliError::Validation(format!("bump width {}", bump.width)))
                }
            }
        }
    }

    /// Holomorphic extension into the interior, for entire and pole data.
    pub fn holo(&self) -> Option<Holo> {
        match self {
            FunctionSpec::Entire { coeffs, .. } => Some(Holo::Poly { coeffs: coeffs.iter().map(|c| c.value()).collect() }),
            FunctionSpec::Pole { pole } => Some(Holo::pole(C64::new(pole[0], pole[1]))),
            _ => None,
        }
    }

    /// Value at a point of a curve with total length `length`; `sigma` maps
    /// the point to its arc-length coordinate.
    pub fn value(&self, z: C64, length: f64, sigma: impl Fn(C64) -> f64) -> C64 {
        match self {
            FunctionSpec::Fourier { fourier } => {
                let t = 2.0 * std::f64::consts::PI * sigma(z) / length;
                fourier.iter().map(|(k, c)| c.value() * C64::from_polar(1.0, k.parse::<f64>().unwrap_or(0.0) * t)).sum()
            }
            FunctionSpec::Bump { bump } => {
                let c = C64::new(bump.center[0], bump.center[1]);
                C64::new((-(z - c).norm_sqr() / (bump.width * bump.width)).exp(), 0.0)
            }
            _ => self.holo().map(|h| h.value(z)).unwrap_or_default(),
        }
    }

    /// Comma-free label for CSV rows.
    pub fn label(&self) -> String {
        match self {
            FunctionSpec::Fourier { fourier } => {
                let terms: Vec<String> = fourier.iter().map(|(k, c)| format!("{}e{k}", fmt_c(c.value()))).collect();
                format!("fourier[{}]", terms.join(" "))
            }
            FunctionSpec::Bump { bump } => format!("bump[{} {} {}]", bump.center[0], bump.center[1], bump.width),
            _ => self.holo().map(|h| h.label()).unwrap_or_default().replace(',', " "),
        }
    }
}

fn fmt_c(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

fn default_s_grid() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_resolutions() -> Vec<usize> {
    vec![256]
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub curve: CurveSpec,
    #[serde(default)]
    pub functions: Vec<FunctionSpec>,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    /// Base cells per side of the direct grid energy; omitted to skip it.
    #[serde(default)]
    pub direct_grid: Option<usize>,
    /// Lipschitz constants of the `murai` family.
    #[serde(default)]
    pub murai_m: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(s) = self.s_grid.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(CliError::Validation(format!("s = {s} outside (0, 1)")));
        }
        if self.resolutions.is_empty() {
            return Err(CliError::Validation("no resolutions".into()));
        }
        if self.resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Validation(format!("resolutions {:?} not ascending", self.resolutions)));
        }
        if let Some(n) = self.resolutions.iter().find(|n| **n < 32) {
            return Err(CliError::Validation(format!("resolution {n} below 32")));
        }
        if let Some(base) = self.direct_grid {
            if base == 0 {
                return Err(CliError::Validation("direct_grid must be positive".into()));
            }
        }
        if let Some(m) = self.murai_m.iter().flatten().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(CliError::Validation(format!("Lipschitz constant {m}")));
        }
        self.functions.iter().try_for_each(FunctionSpec::validate)
    }
}

/// First 16 hex digits of the SHA-256 of the canonical curve JSON.
pub fn curve_id(spec: &CurveSpec) -> String {
    let json = serde_json::to_string(spec).unwrap_or_default();
    Sha256::digest(json.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

//! Holomorphic test functions with analytic derivatives.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// A function holomorphic on (a neighbourhood of) the closed domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Holo {
    /// `Σ coeffs[k] z^k`.
    Poly { coeffs: Vec<C64> },
    /// `(z − pole)^{-1}`.
    Pole { pole: C64 },
    /// Sum of the terms.
    Sum { terms: Vec<Holo> },
}

impl Holo {
    pub fn monomial(k: usize) -> Holo {
        let mut coeffs = vec![C64::new(0.0, 0.0); k + 1];
        coeffs[k] = C64::new(1.0, 0.0);
        Holo::Poly { coeffs }
    }

    pub fn constant(c: C64) -> Holo {
        Holo::Poly { coeffs: vec![c] }
    }

    pub fn pole(a: C64) -> Holo {
        Holo::Pole { pole: a }
    }

    pub fn value(&self, z: C64) -> C64 {
        match self {
            Holo::Poly { coeffs } => coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c),
            Holo::Pole { pole } => 1.0 / (z - pole),
            Holo::Sum { terms } => terms.iter().map(|t| t.value(z)).sum(),
        }
    }

    pub fn deriv(&self, z: C64) -> C64 {
        match self {
            Holo::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(C64::new(0.0, 0.0), |acc, (k, &c)| acc * z + c * k as f64),
            Holo::Pole { pole } => -1.0 / ((z - pole) * (z - pole)),
            Holo::Sum { terms } => terms.iter().map(|t| t.deriv(z)).sum(),
        }
    }

    /// Degree at most one, so `F′` is constant.
    pub fn is_affine(&self) -> bool {
        match self {
            Holo::Poly { coeffs } => coeffs.iter().skip(2).all(|c| *c == C64::new(0.0, 0.0)),
            Holo::Pole { .. } => false,
            Holo::Sum { terms } => terms.iter().all(Holo::is_affine),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Holo::Poly { coeffs } => coeffs.iter().skip(1).all(|c| *c == C64::new(0.0, 0.0)),
            Holo::Pole { .. } => false,
            Holo::Sum { terms } => terms.iter().all(Holo::is_constant),
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            Holo::Poly { coeffs } => {
                let nz: Vec<usize> = (0..coeffs.len()).filter(|&k| coeffs[k] != C64::new(0.0, 0.0)).collect();
                if nz.len() == 1 && coeffs[nz[0]] == C64::new(1.0, 0.0) {
                    match nz[0] {
                        0 => "1".into(),
                        1 => "z".into(),
                        k => format!("z^{k}"),
                    }
                } else {
                    format!("poly{}", coeffs.len().saturating_sub(1))
                }
            }
            Holo::Pole { pole } => format!("1/(z-({}{:+}i))", pole.re, pole.im),
            Holo::Sum { terms } => terms.iter().map(|t| t.label()).collect::<Vec<_>>().join("+"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_difference_quotients() {
        let fs = [
            Holo::Poly { coeffs: vec![C64::new(1.0, 2.0), C64::new(0.0, -1.0), C64::new(3.0, 0.5)] },
            Holo::pole(C64::new(3.0, 0.0)),
            Holo::Sum { terms: vec![Holo::monomial(2), Holo::pole(C64::new(0.0, 2.0))] },
        ];
        let z = C64::new(0.3, -0.2);
        let h = 1e-6;
        for f in &fs {
            let fd = (f.value(z + h) - f.value(z - h)) / (2.0 * h);
            assert!((fd - f.deriv(z)).norm() < 1e-8);
        }
    }

    #[test]
    fn labels() {
        assert_eq!(Holo::monomial(1).label(), "z");
        assert_eq!(Holo::monomial(2).label(), "z^2");
    }
}

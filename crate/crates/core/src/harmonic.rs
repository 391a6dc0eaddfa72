//! Harmonic extensions of boundary data.
//!
//! Circles use the Poisson series directly. General curves use a
//! double-layer potential whose density solves the interior Dirichlet
//! boundary integral equation by Nyström discretization.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{DistanceIndex, SampledCurve};
use crate::spectral::{analyze, poisson_eval, poisson_gradient, FourierSeries, Side};

/// Evaluates a (complex-valued) harmonic function off the curve.
pub trait Harmonic: Sync {
    fn value(&self, z: C64) -> C64;

    /// `(u_x, u_y)`; central differences unless overridden.
    fn gradient(&self, z: C64) -> (C64, C64) {
        let h = 1e-6 * (1.0 + z.norm());
        let ux = (self.value(z + h) - self.value(z - h)) / (2.0 * h);
        let uy = (self.value(z + C64::i() * h) - self.value(z - C64::i() * h)) / (2.0 * h);
        (ux, uy)
    }
}

impl<F: Fn(C64) -> C64 + Sync> Harmonic for F {
    fn value(&self, z: C64) -> C64 {
        self(z)
    }
}

/// Poisson extension of samples on a circle.
#[derive(Debug, Clone)]
pub struct DiskPoisson {
    pub series: FourierSeries,
    pub center: C64,
    pub radius: f64,
    pub side: Side,
}

impl DiskPoisson {
    /// `values[k]` is the datum at `center + radius·e^{2πik/N}`.
    pub fn new(values: &[C64], center: C64, radius: f64, side: Side) -> Result<DiskPoisson> {
        Ok(DiskPoisson { series: analyze(values)?, center, radius, side })
    }

    pub fn from_series(series: FourierSeries, side: Side) -> DiskPoisson {
        DiskPoisson { series, center: C64::new(0.0, 0.0), radius: 1.0, side }
    }

    fn local(&self, z: C64) -> C64 {
        (z - self.center) / self.radius
    }
}

impl Harmonic for DiskPoisson {
    fn value(&self, z: C64) -> C64 {
        let w = self.local(z);
        poisson_eval(&self.series, w.norm(), w.arg(), self.side).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }

    fn gradient(&self, z: C64) -> (C64, C64) {
        let (ux, uy) = poisson_gradient(&self.series, self.local(z), self.side);
        (ux / self.radius, uy / self.radius)
    }
}

/// Interior Dirichlet solution `u = D[μ]` with `(½ + K) μ = f`.
#[derive(Debug, Clone)]
pub struct DoubleLayer {
    nodes: Vec<C64>,
    tangents: Vec<C64>,
    weights: Vec<f64>,
    density: Vec<C64>,
    index: DistanceIndex,
}

impl DoubleLayer {
    pub fn solve(curve: &SampledCurve, f: &[C64]) -> Result<DoubleLayer> {
        let n = curve.len();
        if f.len() != n {
            return Err(Error::InvalidInput(format!("{} samples for {} nodes", f.len(), n)));
        }
        // diagonal from the row identity (½ + K)𝟙 = 𝟙
        let rows = exec::map_range(n, |k| {
            let zk = curve.nodes[k];
            let mut row: Vec<f64> = (0..n)
                .map(|j| {
                    if j == k {
                        0.0
                    } else {
                        curve.node_weights[j] * (curve.tangents[j] / (curve.nodes[j] - zk)).im / (2.0 * PI)
                    }
                })
                .collect();
            row[k] = 1.0 - exec::pairwise_sum(&row);
            row
        });
        let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let lu = a.lu();
        let re = lu.solve(&DVector::from_iterator(n, f.iter().map(|v| v.re)));
        let im = lu.solve(&DVector::from_iterator(n, f.iter().map(|v| v.im)));
        let (re, im) = match (re, im) {
            (Some(r), Some(i)) => (r, i),
            _ => return Err(Error::IllConditioned("double-layer system is singular".into())),
        };
        let density = (0..n).map(|k| C64::new(re[k], im[k])).collect();
        Ok(DoubleLayer {
            nodes: curve.nodes.clone(),
            tangents: curve.tangents.clone(),
            weights: curve.node_weights.clone(),
            density,
            index: DistanceIndex::new(curve),
        })
    }

    pub fn density(&self) -> &[C64] {
        &self.density
    }
}

impl Harmonic for DoubleLayer {
    /// Interior values with the density at the nearest node subtracted,
    /// which keeps the quadrature accurate close to the curve.
    fn value(&self, z: C64) -> C64 {
        let (_, seg, t) = self.index.nearest(z);
        let n = self.nodes.len();
        let near = if t < 0.5 { seg } else { (seg + 1) % n };
        let mu0 = self.density[near];
        let terms: Vec<C64> = (0..n)
            .map(|j| {
                let d = self.nodes[j] - z;
                if d.norm() == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                (self.density[j] - mu0) * (self.weights[j] * (self.tangents[j] / d).im / (2.0 * PI))
            })
            .collect();
        let (_, inside) = self.index.locate(z);
        exec::pairwise_sum_c(&terms) + if inside { mu0 } else { C64::new(0.0, 0.0) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_curve, CurveSpec};

    #[test]
    fn disk_poisson_reproduces_polynomial() {
        let n = 64;
        let vals: Vec<C64> = (0..n).map(|k| C64::from_polar(1.0, 2.0 * PI * 3.0 * k as f64 / n as f64)).collect();
        let p = DiskPoisson::new(&vals, C64::new(0.0, 0.0), 1.0, Side::Interior).unwrap();
        let z = C64::new(0.3, -0.4);
        assert!((p.value(z) - z.powi(3)).norm() < 1e-13);
        let (ux, uy) = p.gradient(z);
        assert!((ux - 3.0 * z * z).norm() < 1e-12);
        assert!((uy - C64::i() * 3.0 * z * z).norm() < 1e-12);
    }

    #[test]
    fn double_layer_on_ellipse_recovers_harmonic_polynomial() {
        let c = build_curve(&CurveSpec::Ellipse { a: 2.0, b: 1.0 }, 256).unwrap();
        let u = |z: C64| C64::new((z * z).re + z.im, 0.0);
        let f: Vec<C64> = c.nodes.iter().map(|&z| u(z)).collect();
        let dl = DoubleLayer::solve(&c, &f).unwrap();
        for z in [C64::new(0.0, 0.0), C64::new(1.2, 0.3), C64::new(-1.9, 0.05)] {
            assert!((dl.value(z) - u(z)).norm() < 1e-6, "{z}: {}", (dl.value(z) - u(z)).norm());
        }
    }

    #[test]
    fn double_layer_constant_density_is_one_inside() {
        let c = build_curve(&CurveSpec::square(1.0), 256).unwrap();
        let f = vec![C64::new(2.5, -1.0); 256];
        let dl = DoubleLayer::solve(&c, &f).unwrap();
        let err = (dl.value(C64::new(0.3, 0.7)) - f[0]).norm();
        assert!(err < 1e-8, "{err}");
    }
}

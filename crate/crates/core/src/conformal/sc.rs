//! Schwarz–Christoffel maps of the unit disk onto polygons.
//!
//! `φ(z) = w_c + C ∫_0^z Π_k (1 − w/z_k)^{α_k − 1} dw` with prevertices
//! `z_k` on the unit circle and interior angles `α_k π`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{interior_point, point_in_polygon, signed_area};
use crate::quadrature::{endpoint_power_rule, gauss_legendre, Rule};

const JACOBI_ORDER: usize = 20;
const LEGENDRE_ORDER: usize = 16;
const MAX_VERTICES: usize = 24;
const MIN_ANGLE: f64 = 0.05;

/// Solved disk-to-polygon map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScMap {
    pub vertices: Vec<C64>,
    pub prevertices: Vec<C64>,
    /// Interior angles as multiples of π.
    pub angles: Vec<f64>,
    /// `φ(0)`.
    pub center: C64,
    /// `φ′(0) > 0`.
    pub constant: f64,
    /// Max-norm of the parameter equations at the solution.
    pub residual: f64,
    #[serde(skip)]
    rules: Option<Rules>,
}

#[derive(Debug, Clone)]
struct Rules {
    legendre: Rule,
    /// Unit-interval Jacobi rules `∫_0^1 τ^{e_k} g`, one per vertex.
    jacobi: Vec<Vec<(f64, f64)>>,
}

fn build_rules(angles: &[f64]) -> Rules {
    Rules {
        legendre: gauss_legendre(LEGENDRE_ORDER),
        jacobi: angles.iter().map(|a| endpoint_power_rule(JACOBI_ORDER, a - 1.0, 1.0)).collect(),
    }
}

/// Interior angles (multiples of π) of a counterclockwise polygon.
pub fn interior_angles(v: &[C64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            let din = v[k] - v[(k + n - 1) % n];
            let dout = v[(k + 1) % n] - v[k];
            1.0 - (dout / din).arg() / PI
        })
        .collect()
}

fn anchor_point(v: &[C64]) -> C64 {
    let n = v.len();
    let a = signed_area(v);
    let mut c = C64::new(0.0, 0.0);
    for k in 0..n {
        let p = v[k];
        let q = v[(k + 1) % n];
        let cross = p.re * q.im - q.re * p.im;
        c += (p + q) * cross;
    }
    let centroid = c / (6.0 * a);
    if point_in_polygon(v, centroid) {
        centroid
    } else {
        interior_point(v)
    }
}

/// Straight-segment integrator for the SC integrand.
struct Integrator<'a> {
    z: &'a [C64],
    e: Vec<f64>,
    rules: &'a Rules,
}

impl<'a> Integrator<'a> {
    fn log_integrand(&self, w: C64, skip: Option<usize>) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, (&zj, &ej)) in self.z.iter().zip(&self.e).enumerate() {
            if Some(j) != skip {
                acc += ej * (1.0 - w / zj).ln();
            }
        }
        acc
    }

    fn integrand(&self, w: C64) -> C64 {
        self.log_integrand(w, None).exp()
    }

    fn nearest_other(&self, p: C64, skip: Option<usize>) -> f64 {
        self.z
            .iter()
            .enumerate()
            .filter(|&(j, _)| Some(j) != skip)
            .map(|(_, &zj)| (zj - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    fn seg_distance(&self, a: C64, b: C64) -> f64 {
        let d = b - a;
        let l2 = d.norm_sqr();
        self.z
            .iter()
            .map(|&zj| {
                let t = (((zj - a) * d.conj()).re / l2).clamp(0.0, 1.0);
                (zj - (a + d * t)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn smooth(&self, a: C64, b: C64, depth: u32) -> C64 {
        let len = (b - a).norm();
        if len == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if depth >= 60 || len <= self.seg_distance(a, b) {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            return self
                .rules
                .legendre
                .nodes
                .iter()
                .zip(&self.rules.legendre.weights)
                .map(|(&x, &w)| self.integrand(mid + half * x) * w)
                .sum::<C64>()
                * half;
        }
        let m = 0.5 * (a + b);
        self.smooth(a, m, depth + 1) + self.smooth(m, b, depth + 1)
    }

    /// `∫_a^b` with `a = z_k` singular.
    fn singular_start(&self, k: usize, b: C64) -> C64 {
        let a = self.z[k];
        let len = (b - a).norm();
        if len == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let d = self.nearest_other(a, Some(k));
        let first = len.min(0.5 * d);
        let u = b - a;
        let tau_end = first / len;
        let ek = self.e[k];
        let dir = (-u / a).ln() * ek;
        let scale = tau_end.powf(ek + 1.0);
        let part: C64 = self.rules.jacobi[k]
            .iter()
            .map(|&(x, w)| {
                let tau = tau_end * x;
                let wpt = a + u * tau;
                (self.log_integrand(wpt, Some(k)) + dir).exp() * (w * scale)
            })
            .sum::<C64>()
            * u;
        if tau_end < 1.0 {
            part + self.smooth(a + u * tau_end, b, 0)
        } else {
            part
        }
    }

    /// `∫_a^b` along the segment, with optional singular endpoints.
    fn integrate(&self, a: C64, sa: Option<usize>, b: C64, sb: Option<usize>) -> C64 {
        match (sa, sb) {
            (Some(i), Some(j)) => {
                let m = 0.5 * (a + b);
                self.singular_start(i, m) - self.singular_start(j, m)
            }
            (Some(i), None) => self.singular_start(i, b),
            (None, Some(j)) => -self.singular_start(j, a),
            (None, None) => self.smooth(a, b, 0),
        }
    }
}

fn gaps_from(y: &[f64]) -> Vec<f64> {
    // softmax over (y, 0)
    let mx = y.iter().copied().fold(0.0f64, f64::max);
    let mut ex: Vec<f64> = y.iter().map(|v| (v - mx).exp()).collect();
    ex.push((-mx).exp());
    let total: f64 = ex.iter().sum();
    ex.iter().map(|v| 2.0 * PI * v / total).collect()
}

fn prevertices_from(y: &[f64], offset: f64) -> Vec<C64> {
    let gaps = gaps_from(y);
    let mut theta = offset;
    let mut z = Vec::with_capacity(gaps.len());
    for g in &gaps {
        z.push(C64::from_polar(1.0, theta));
        theta += g;
    }
    z
}

struct Problem<'a> {
    w: &'a [C64],
    center: C64,
    e: Vec<f64>,
    rules: Rules,
}

impl Problem<'_> {
    fn residual(&self, y: &[f64]) -> Vec<f64> {
        let n = self.w.len();
        let z = prevertices_from(y, 0.0);
        let int = Integrator { z: &z, e: self.e.clone(), rules: &self.rules };
        let side = |k: usize| int.integrate(z[k], Some(k), z[(k + 1) % n], Some((k + 1) % n));
        let i0 = side(0);
        let w = self.w;
        let l0 = (w[1] - w[0]).norm();
        let mut r = Vec::with_capacity(n - 1);
        for k in 1..=n.saturating_sub(3) {
            let ik = side(k);
            r.push((ik.norm() / i0.norm()).ln() - ((w[k + 1] - w[k]).norm() / l0).ln());
        }
        let ic = int.integrate(z[0], Some(0), C64::new(0.0, 0.0), None);
        let q = ic / i0 - (self.center - w[0]) / (w[1] - w[0]);
        r.push(q.re);
        r.push(q.im);
        r
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn levenberg_marquardt(p: &Problem, y0: Vec<f64>, tol: f64) -> (Vec<f64>, f64) {
    let m = y0.len();
    let mut y = y0;
    let mut r = p.residual(&y);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut mu = 1e-3;
    for _ in 0..400 {
        if norm_inf(&r) < tol {
            break;
        }
        let h = 1e-7;
        let mut jac = DMatrix::<f64>::zeros(r.len(), m);
        for j in 0..m {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += h;
            ym[j] -= h;
            let rp = p.residual(&yp);
            let rm = p.residual(&ym);
            for i in 0..r.len() {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_vec(r.clone());
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * rv;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[(i, i)] += mu * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                mu *= 10.0;
                continue;
            };
            let yn: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rn = p.residual(&yn);
            let cn: f64 = rn.iter().map(|v| v * v).sum();
            if cn.is_finite() && cn < cost {
                y = yn;
                r = rn;
                cost = cn;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let res = norm_inf(&r);
    (y, res)
}

impl ScMap {
    /// Solves the parameter problem for a counterclockwise simple polygon.
    pub fn solve(vertices: &[C64], tol: f64) -> Result<ScMap> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidCurve("polygon needs at least 3 vertices".into()));
        }
        if n > MAX_VERTICES {
            return Err(Error::InvalidInput(format!("{n} vertices exceeds the limit of {MAX_VERTICES}")));
        }
        let angles = interior_angles(vertices);
        if let Some((k, a)) = angles.iter().enumerate().find(|(_, &a)| a < MIN_ANGLE) {
            return Err(Error::IllConditioned(format!("interior angle {a:.4}π at vertex {k}")));
        }
        let center = anchor_point(vertices);
        let e: Vec<f64> = angles.iter().map(|a| a - 1.0).collect();
        let problem = Problem { w: vertices, center, e: e.clone(), rules: build_rules(&angles) };
        // equal gaps, then gaps proportional to side lengths
        let lengths: Vec<f64> = (0..n).map(|k| (vertices[(k + 1) % n] - vertices[k]).norm()).collect();
        let starts = [
            vec![0.0; n - 1],
            (0..n - 1).map(|k| (lengths[k] / lengths[n - 1]).ln()).collect::<Vec<_>>(),
        ];
        let mut best: Option<(Vec<f64>, f64)> = None;
        for y0 in starts {
            let (y, res) = levenberg_marquardt(&problem, y0, tol);
            if best.as_ref().map_or(true, |b| res < b.1) {
                best = Some((y, res));
            }
            if res < tol {
                break;
            }
        }
        let (y, res) = best.expect("at least one start");
        if !(res < tol) {
            return Err(Error::ScNoConvergence(res));
        }
        let z0 = prevertices_from(&y, 0.0);
        let int = Integrator { z: &z0, e: e.clone(), rules: &problem.rules };
        let i0 = int.integrate(z0[0], Some(0), z0[1], Some(1));
        let c0 = (vertices[1] - vertices[0]) / i0;
        let rot = c0.arg();
        let prevertices = prevertices_from(&y, rot);
        let map = ScMap {
            vertices: vertices.to_vec(),
            prevertices,
            angles: angles.clone(),
            center,
            constant: c0.norm(),
            residual: res,
            rules: Some(build_rules(&angles)),
        };
        Ok(map)
    }

    fn rules(&self) -> std::borrow::Cow<'_, Rules> {
        match &self.rules {
            Some(r) => std::borrow::Cow::Borrowed(r),
            None => std::borrow::Cow::Owned(build_rules(&self.angles)),
        }
    }

    /// Restores quadrature tables after deserialization.
    pub fn with_rules(mut self) -> Self {
        if self.rules.is_none() {
            self.rules = Some(build_rules(&self.angles));
        }
        self
    }

    fn exponents(&self) -> Vec<f64> {
        self.angles.iter().map(|a| a - 1.0).collect()
    }

    /// Prevertex arguments, increasing and unwrapped from the first one.
    pub fn prevertex_args(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.prevertices.len());
        for z in &self.prevertices {
            let mut a = z.arg();
            if let Some(&prev) = out.last() {
                while a <= prev {
                    a += 2.0 * PI;
                }
            }
            out.push(a);
        }
        out
    }

    fn nearest_prevertex(&self, z: C64) -> (usize, f64) {
        self.prevertices
            .iter()
            .enumerate()
            .map(|(k, p)| (k, (p - z).norm()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    fn check_domain(&self, z: C64) -> Result<()> {
        if !(z.norm() <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("|z| = {} > 1", z.norm())));
        }
        let (k, d) = self.nearest_prevertex(z);
        if d < 1e-14 {
            return Err(Error::SingularPoint(format!("prevertex {k}")));
        }
        Ok(())
    }

    /// `φ(z)` for `|z| ≤ 1`, integrating from the nearest of 0 and the prevertices.
    pub fn eval(&self, z: C64) -> Result<C64> {
        self.check_domain(z)?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: C64) -> C64 {
        let rules = self.rules();
        let int = Integrator { z: &self.prevertices, e: self.exponents(), rules: &rules };
        let (k, d) = self.nearest_prevertex(z);
        if d < z.norm() {
            self.vertices[k] + self.constant * int.integrate(self.prevertices[k], Some(k), z, None)
        } else {
            self.center + self.constant * int.integrate(C64::new(0.0, 0.0), None, z, None)
        }
    }

    /// `log φ′(z)` on the branch continuous in the disk with `log φ′(0)` real.
    pub fn log_deriv(&self, z: C64) -> Result<C64> {
        self.check_domain(z)?;
        Ok(self.log_deriv_unchecked(z))
    }

    pub(crate) fn log_deriv_unchecked(&self, z: C64) -> C64 {
        let mut acc = C64::new(self.constant.ln(), 0.0);
        for (zk, a) in self.prevertices.iter().zip(&self.angles) {
            acc += (a - 1.0) * (1.0 - z / zk).ln();
        }
        acc
    }

    /// `φ″(z)/φ′(z) = Σ (α_k − 1)/(z − z_k)`.
    pub fn deriv_ratio(&self, z: C64) -> C64 {
        self.prevertices.iter().zip(&self.angles).map(|(zk, a)| (a - 1.0) / (z - zk)).sum()
    }

    /// Max distance between `φ(z_k)`, integrated radially from the centre,
    /// and `w_k`.
    pub fn vertex_mismatch(&self) -> f64 {
        let rules = self.rules();
        let int = Integrator { z: &self.prevertices, e: self.exponents(), rules: &rules };
        let origin = C64::new(0.0, 0.0);
        self.prevertices
            .iter()
            .zip(&self.vertices)
            .enumerate()
            .map(|(k, (&zk, &wk))| {
                (self.center + self.constant * int.integrate(origin, None, zk, Some(k)) - wk).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Side-length residual of the solved map: max relative error of
    /// `|φ(z_{k+1}) − φ(z_k)|` against the polygon sides.
    pub fn side_residual(&self) -> f64 {
        let rules = self.rules();
        let int = Integrator { z: &self.prevertices, e: self.exponents(), rules: &rules };
        let n = self.vertices.len();
        (0..n)
            .map(|k| {
                let j = (k + 1) % n;
                let s = self.constant * int.integrate(self.prevertices[k], Some(k), self.prevertices[j], Some(j));
                let target = self.vertices[j] - self.vertices[k];
                (s - target).norm() / target.norm()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square() -> Vec<C64> {
        vec![C64::new(1.0, -1.0), C64::new(1.0, 1.0), C64::new(-1.0, 1.0), C64::new(-1.0, -1.0)]
    }

    #[test]
    fn angles_sum_rule() {
        let a = interior_angles(&square());
        assert!(a.iter().all(|&x| (x - 0.5).abs() < 1e-15));
        assert_relative_eq!(a.iter().map(|x| 1.0 - x).sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn square_prevertices_are_fourfold_symmetric() {
        let m = ScMap::solve(&square(), 1e-10).unwrap();
        assert!(m.residual < 1e-10);
        let args = m.prevertex_args();
        for k in 0..4 {
            let gap = if k < 3 { args[k + 1] - args[k] } else { args[0] + 2.0 * PI - args[3] };
            assert!((gap - PI / 2.0).abs() < 1e-8);
        }
        // each prevertex sits on an odd multiple of π/4
        for z in &m.prevertices {
            let q = z.arg() / (PI / 4.0);
            assert!((q - q.round()).abs() < 1e-8 && (q.round() as i64).rem_euclid(2) == 1);
        }
        assert!(m.center.norm() < 1e-14);
        assert!(m.vertex_mismatch() < 1e-8);
        assert!(m.side_residual() < 1e-9);
    }

    #[test]
    fn square_map_at_origin() {
        let m = ScMap::solve(&square(), 1e-10).unwrap();
        assert!(m.eval(C64::new(0.0, 0.0)).unwrap().norm() < 1e-14);
        let ld = m.log_deriv(C64::new(0.0, 0.0)).unwrap();
        assert!(ld.im.abs() < 1e-14 && m.constant > 0.0);
        assert!(matches!(m.eval(m.prevertices[2]), Err(Error::SingularPoint(_))));
    }

    #[test]
    fn triangle_prevertices_equispaced() {
        let v = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::from_polar(1.0, PI / 3.0)];
        let m = ScMap::solve(&v, 1e-10).unwrap();
        let args = m.prevertex_args();
        assert!((args[1] - args[0] - 2.0 * PI / 3.0).abs() < 1e-8);
        assert!((args[2] - args[1] - 2.0 * PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn rectangle_side_lengths_reproduced() {
        let v = vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 1.0), C64::new(0.0, 1.0)];
        let m = ScMap::solve(&v, 1e-10).unwrap();
        assert!(m.side_residual() < 1e-8);
        assert!(m.vertex_mismatch() < 1e-8);
    }

    #[test]
    fn l_shape_and_derivative_consistency() {
        let v: Vec<C64> = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]
            .iter()
            .map(|p| C64::new(p[0], p[1]))
            .collect();
        let m = ScMap::solve(&v, 1e-10).unwrap();
        assert!(m.vertex_mismatch() < 1e-8);
        let z = C64::new(0.31, -0.45);
        let h = 1e-5;
        let fd = (m.eval(z + h).unwrap() - m.eval(z - h).unwrap()) / (2.0 * h);
        assert!((fd - m.log_deriv(z).unwrap().exp()).norm() < 1e-8);
        let fd2 = (m.log_deriv(z + h).unwrap() - m.log_deriv(z - h).unwrap()) / (2.0 * h);
        assert!((fd2 - m.deriv_ratio(z)).norm() < 1e-7);
    }

    #[test]
    fn sharp_angle_is_ill_conditioned() {
        let v = vec![C64::new(0.0, 0.0), C64::new(10.0, 0.0), C64::new(10.0, 0.5)];
        assert!(matches!(ScMap::solve(&v, 1e-10), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn cache_round_trip() {
        let m = ScMap::solve(&square(), 1e-10).unwrap();
        let js = serde_json::to_string(&m).unwrap();
        let back: ScMap = serde_json::from_str::<ScMap>(&js).unwrap().with_rules();
        let z = C64::new(0.2, 0.7);
        assert!((back.eval(z).unwrap() - m.eval(z).unwrap()).norm() < 1e-15);
    }
}

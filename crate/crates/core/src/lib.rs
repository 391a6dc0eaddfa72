//! Numerical toolkit for fractional Sobolev norms, Cauchy and Beurling
//! splittings and fractal regularity of planar Jordan curves.

pub mod beurling;
pub mod cauchy;
pub mod conformal;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod harmonic;
pub mod holomorphic;
pub mod interp;
pub mod quadrature;
pub mod regularity;
pub mod sobolev;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

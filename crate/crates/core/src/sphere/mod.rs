//! Quadrature, real spherical harmonics, spectral Sobolev norms, Hölder
//! seminorms and Bessel zeros on the unit sphere `S^{N-1}`, `N ∈ {2, 3}`.

mod bessel;
mod harmonics;
mod norms;
mod quadrature;

pub use bessel::{bessel_first_zero, bessel_j, gamma};
pub use harmonics::{HarmonicBasis, HarmonicIndex, PointEval};
pub use norms::{holder_seminorm, holder_seminorm_vec, sobolev_norm};
pub use quadrature::{gauss_legendre, SphereQuadrature};

use std::f64::consts::PI;

/// Surface measure of the unit sphere in `R^dim`.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Volume of the unit ball in `R^dim`.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

pub(crate) fn check_dim(dim: usize) -> crate::Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(crate::Error::UnsupportedDimension(dim))
    }
}

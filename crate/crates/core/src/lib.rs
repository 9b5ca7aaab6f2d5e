//! Numerical laboratory for the stability of the ball in perturbed
//! isoperimetric problems under convexity constraint.
//!
//! The crate is organised bottom-up:
//!
//! * [`sphere`]: quadrature, real spherical harmonics, Sobolev and Hölder
//!   norms, Bessel zeros on `S^{N-1}` for `N = 2, 3`.
//! * [`shape`]: star-shaped bodies `B_h` given by harmonic coefficients of `h`,
//!   with volume, perimeter, barycenter, normalization, convexity and distances.
//! * [`fem`]: P1 finite elements on a fixed unit-ball mesh, pulled back onto
//!   `B_h`, for the first Dirichlet eigenvalue and its shape derivatives.
//! * [`capacity`]: Newtonian capacity in 3D (Riesz energy minimisation and
//!   the explicit competitor upper bound).
//! * [`stability`]: second shape derivatives at the ball, mode-wise thresholds
//!   and Taylor-remainder ladders.
//! * [`experiments`]: convex-constrained minimisation, quasi-minimality checks,
//!   diagram sampling and the command line front end.

pub mod capacity;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod linalg;
pub mod par;
pub mod shape;
pub mod sphere;
pub mod stability;

pub use error::{Error, Result};

//! Small dense 3×3 algebra, CSR matrices and an envelope Cholesky solver.

mod mat3;
mod skyline;
mod sparse;

pub use mat3::{Mat3, Vec3};
pub use skyline::{rcm_ordering, SkylineCholesky};
pub use sparse::{CsrMatrix, CsrPattern};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

use super::check_dim;
use crate::linalg::Vec3;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Nodes and weights on `S^{N-1}`.
///
/// In 2D the nodes are equispaced (trapezoid rule, `2·order + 1` nodes). In 3D
/// they form a product of Gauss–Legendre nodes in `cos θ` and an equispaced
/// azimuthal grid.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub dim: usize,
    pub order: usize,
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    /// `(θ, φ)` per node: polar angle in 2D is the only angle (`φ = 0`);
    /// in 3D `θ` is the colatitude and `φ` the azimuth.
    pub angles: Vec<(f64, f64)>,
    /// Grid shape `(n_θ, n_φ)`; in 2D `(n, 1)`.
    pub grid: (usize, usize),
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d.is_finite() { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

impl SphereQuadrature {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        check_dim(dim)?;
        if order == 0 {
            return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
        }
        Ok(if dim == 2 { Self::circle(order) } else { Self::sphere(order) })
    }

    fn circle(order: usize) -> Self {
        let n = 2 * order + 1;
        let w = 2.0 * PI / n as f64;
        let angles: Vec<(f64, f64)> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64, 0.0)).collect();
        let nodes = angles.iter().map(|&(t, _)| [t.cos(), t.sin(), 0.0]).collect();
        SphereQuadrature { dim: 2, order, nodes, weights: vec![w; n], angles, grid: (n, 1) }
    }

    fn sphere(order: usize) -> Self {
        let n_theta = (order + 2) / 2;
        let n_phi = order + 1;
        let (x, wx) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let mut angles = Vec::with_capacity(n_theta * n_phi);
        let wphi = 2.0 * PI / n_phi as f64;
        for (xi, wi) in x.iter().zip(&wx) {
            let theta = xi.acos();
            let s = theta.sin();
            for k in 0..n_phi {
                let phi = wphi * k as f64;
                nodes.push([s * phi.cos(), s * phi.sin(), *xi]);
                weights.push(wi * wphi);
                angles.push((theta, phi));
            }
        }
        SphereQuadrature { dim: 3, order, nodes, weights, angles, grid: (n_theta, n_phi) }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ_q w_q f_q`
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

use super::{check_dim, SphereQuadrature};
use crate::linalg::Vec3;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Degree/order label of a real harmonic.
///
/// In 2D `m = -1` stands for `sin(lθ)/√π` and `m = +1` for `cos(lθ)/√π`
/// (`m = 0` only for `l = 0`). In 3D `m` runs over `-l..=l`, negative orders
/// carrying the `sin(|m|φ)` factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    pub l: usize,
    pub m: i64,
}

/// Values, angular derivatives and second derivatives at one direction:
/// `[Y, ∂θY, ∂φY, ∂θθY, ∂θφY, ∂φφY]` (2D: only the θ entries are used).
pub type PointEval = Vec<[f64; 6]>;

/// Real orthonormal harmonic basis tabulated on a quadrature rule.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub dim: usize,
    pub l_max: usize,
    pub quad: SphereQuadrature,
    /// `values[k * n_nodes + q]`
    values: Vec<f64>,
    /// tangential gradients, same layout as `values`
    grads: Vec<Vec3>,
    degrees: Vec<usize>,
    eigenvalues: Vec<f64>,
}

impl HarmonicBasis {
    /// Basis with the default quadrature order `2·l_max + 4`.
    pub fn new(dim: usize, l_max: usize) -> Result<Self> {
        Self::with_order(dim, l_max, 2 * l_max + 4)
    }

    pub fn with_order(dim: usize, l_max: usize, order: usize) -> Result<Self> {
        check_dim(dim)?;
        let quad = SphereQuadrature::new(dim, order)?;
        let n_basis = Self::count(dim, l_max);
        let nq = quad.len();
        let mut values = vec![0.0; n_basis * nq];
        let mut grads = vec![[0.0; 3]; n_basis * nq];
        for q in 0..nq {
            let (theta, phi) = quad.angles[q];
            let ev = eval_angles(dim, l_max, theta, phi);
            let g = tangential_frame(dim, theta, phi);
            for (k, e) in ev.iter().enumerate() {
                values[k * nq + q] = e[0];
                grads[k * nq + q] = combine_gradient(dim, &g, theta, e);
            }
        }
        let degrees: Vec<usize> = (0..n_basis).map(|k| Self::index_to_mode(dim, k).l).collect();
        let eigenvalues = degrees.iter().map(|&l| (l * (l + dim - 2)) as f64).collect();
        Ok(HarmonicBasis { dim, l_max, quad, values, grads, degrees, eigenvalues })
    }

    /// Number of basis functions with degree `<= l_max`.
    pub fn count(dim: usize, l_max: usize) -> usize {
        if dim == 2 {
            2 * l_max + 1
        } else {
            (l_max + 1) * (l_max + 1)
        }
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.quad.len()
    }

    pub fn index_to_mode(dim: usize, k: usize) -> HarmonicIndex {
        if dim == 2 {
            if k == 0 {
                HarmonicIndex { l: 0, m: 0 }
            } else {
                let l = k.div_ceil(2);
                HarmonicIndex { l, m: if k % 2 == 1 { -1 } else { 1 } }
            }
        } else {
            let l = (k as f64).sqrt().floor() as usize;
            let l = if (l + 1) * (l + 1) <= k { l + 1 } else { l };
            HarmonicIndex { l, m: k as i64 - (l * l + l) as i64 }
        }
    }

    pub fn mode_to_index(&self, l: usize, m: i64) -> Result<usize> {
        let bad = || Error::InvalidArgument(format!("no harmonic (l={l}, m={m}) with l_max={}", self.l_max));
        if l > self.l_max {
            return Err(bad());
        }
        if self.dim == 2 {
            match (l, m) {
                (0, 0) => Ok(0),
                (l, -1) if l > 0 => Ok(2 * l - 1),
                (l, 1) if l > 0 => Ok(2 * l),
                _ => Err(bad()),
            }
        } else {
            if m.unsigned_abs() as usize > l {
                return Err(bad());
            }
            Ok(((l * l + l) as i64 + m) as usize)
        }
    }

    /// Degree `l` of basis element `k`.
    pub fn degree(&self, k: usize) -> usize {
        self.degrees[k]
    }

    /// Laplace–Beltrami eigenvalues `l(l + N - 2)`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn values(&self, k: usize) -> &[f64] {
        let nq = self.n_nodes();
        &self.values[k * nq..(k + 1) * nq]
    }

    pub fn gradients(&self, k: usize) -> &[Vec3] {
        let nq = self.n_nodes();
        &self.grads[k * nq..(k + 1) * nq]
    }

    /// Coefficient of the constant function `1`.
    pub fn constant_coefficient(&self) -> f64 {
        super::sphere_area(self.dim).sqrt()
    }

    /// Coefficient of the coordinate function `x_j` restricted to the sphere
    /// on the matching `l = 1` harmonic, i.e. `√(σ/N)`.
    pub fn coordinate_coefficient(&self) -> f64 {
        (super::sphere_area(self.dim) / self.dim as f64).sqrt()
    }

    /// Index of the `l = 1` harmonic proportional to the coordinate `x_j`.
    pub fn coordinate_index(&self, j: usize) -> usize {
        if self.dim == 2 {
            // x = cos θ -> (1, +1); y = sin θ -> (1, -1)
            if j == 0 {
                2
            } else {
                1
            }
        } else {
            // Y_{1,1} ∝ x, Y_{1,-1} ∝ y, Y_{1,0} ∝ z
            match j {
                0 => 3,
                1 => 1,
                _ => 2,
            }
        }
    }

    /// Synthesize `Σ c_k Y_k` at the quadrature nodes.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let nq = self.n_nodes();
        let mut out = vec![0.0; nq];
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                for (o, v) in out.iter_mut().zip(self.values(k)) {
                    *o += c * v;
                }
            }
        }
        out
    }

    /// Synthesize the tangential gradient `Σ c_k ∇_τ Y_k` at the nodes.
    pub fn synthesize_gradient(&self, coeffs: &[f64]) -> Vec<Vec3> {
        let nq = self.n_nodes();
        let mut out = vec![[0.0; 3]; nq];
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                for (o, g) in out.iter_mut().zip(self.gradients(k)) {
                    for d in 0..3 {
                        o[d] += c * g[d];
                    }
                }
            }
        }
        out
    }

    /// L² projection of `f` onto the basis by quadrature.
    pub fn project<F: Fn(&Vec3) -> f64>(&self, f: F) -> Vec<f64> {
        let fv: Vec<f64> = self.quad.nodes.iter().map(&f).collect();
        (0..self.len())
            .map(|k| {
                self.values(k)
                    .iter()
                    .zip(&fv)
                    .zip(&self.quad.weights)
                    .map(|((y, f), w)| w * y * f)
                    .sum()
            })
            .collect()
    }

    /// Values, gradients and second angular derivatives of every basis
    /// element at angles `(θ, φ)` (2D ignores `φ`).
    pub fn eval_angles(&self, theta: f64, phi: f64) -> PointEval {
        eval_angles(self.dim, self.l_max, theta, phi)
    }

    /// Values and tangential gradients at an arbitrary unit vector.
    pub fn eval_direction(&self, omega: &Vec3) -> (Vec<f64>, Vec<Vec3>) {
        let (theta, phi) = direction_angles(self.dim, omega);
        let ev = eval_angles(self.dim, self.l_max, theta, phi);
        let g = tangential_frame(self.dim, theta, phi);
        let vals = ev.iter().map(|e| e[0]).collect();
        let grads = ev.iter().map(|e| combine_gradient(self.dim, &g, theta, e)).collect();
        (vals, grads)
    }
}

/// `(θ, φ)` of a unit vector; in 2D the polar angle.
pub(crate) fn direction_angles(dim: usize, omega: &Vec3) -> (f64, f64) {
    if dim == 2 {
        (omega[1].atan2(omega[0]), 0.0)
    } else {
        let z = omega[2].clamp(-1.0, 1.0);
        let mut theta = z.acos();
        // keep away from the coordinate singularity at the poles
        const EPS: f64 = 1e-9;
        if theta < EPS {
            theta = EPS;
        } else if theta > PI - EPS {
            theta = PI - EPS;
        }
        (theta, omega[1].atan2(omega[0]))
    }
}

/// `(e_θ, e_φ)` in 3D; `(e_θ, 0)` with `e_θ = (-sin θ, cos θ)` in 2D.
pub(crate) fn tangential_frame(dim: usize, theta: f64, phi: f64) -> [Vec3; 2] {
    if dim == 2 {
        [[-theta.sin(), theta.cos(), 0.0], [0.0; 3]]
    } else {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        [[ct * cp, ct * sp, -st], [-sp, cp, 0.0]]
    }
}

fn combine_gradient(dim: usize, frame: &[Vec3; 2], theta: f64, e: &[f64; 6]) -> Vec3 {
    if dim == 2 {
        [e[1] * frame[0][0], e[1] * frame[0][1], 0.0]
    } else {
        let inv_s = 1.0 / theta.sin();
        let mut g = [0.0; 3];
        for d in 0..3 {
            g[d] = e[1] * frame[0][d] + e[2] * inv_s * frame[1][d];
        }
        g
    }
}

pub(crate) fn eval_angles(dim: usize, l_max: usize, theta: f64, phi: f64) -> PointEval {
    if dim == 2 {
        eval_circle(l_max, theta)
    } else {
        eval_sphere(l_max, theta, phi)
    }
}

fn eval_circle(l_max: usize, theta: f64) -> PointEval {
    let mut out = Vec::with_capacity(2 * l_max + 1);
    let c0 = 1.0 / (2.0 * PI).sqrt();
    out.push([c0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let n = 1.0 / PI.sqrt();
    for l in 1..=l_max {
        let lf = l as f64;
        let (s, c) = (lf * theta).sin_cos();
        out.push([n * s, n * lf * c, 0.0, -n * lf * lf * s, 0.0, 0.0]);
        out.push([n * c, -n * lf * s, 0.0, -n * lf * lf * c, 0.0, 0.0]);
    }
    out
}

/// Normalized associated Legendre functions `P̃_l^m(cos θ)` with their first
/// and second θ-derivatives, indexed `[l][m]`.
fn legendre_table(l_max: usize, theta: f64) -> Vec<Vec<[f64; 3]>> {
    let (s, x) = theta.sin_cos();
    let mut p = vec![vec![[0.0; 3]; l_max + 1]; l_max + 1];
    p[0][0][0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=l_max {
        let mf = m as f64;
        p[m][m][0] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[m - 1][m - 1][0];
    }
    for m in 0..l_max {
        p[m + 1][m][0] = (2.0 * m as f64 + 3.0).sqrt() * x * p[m][m][0];
    }
    for m in 0..=l_max {
        let mf = m as f64;
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[l][m][0] = a * (x * p[l - 1][m][0] - b * p[l - 2][m][0]);
        }
    }
    for l in 0..=l_max {
        let lf = l as f64;
        for m in 0..=l {
            let mf = m as f64;
            let prev = if l > m { p[l - 1][m][0] } else { 0.0 };
            let c = ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0).max(1.0)).sqrt();
            let d1 = (lf * x * p[l][m][0] - c * prev) / s;
            let d2 = -(x / s) * d1 - (lf * (lf + 1.0) - mf * mf / (s * s)) * p[l][m][0];
            p[l][m][1] = d1;
            p[l][m][2] = d2;
        }
    }
    p
}

fn eval_sphere(l_max: usize, theta: f64, phi: f64) -> PointEval {
    let p = legendre_table(l_max, theta);
    let mut out = Vec::with_capacity((l_max + 1) * (l_max + 1));
    let r2 = std::f64::consts::SQRT_2;
    for (l, pl) in p.iter().enumerate() {
        for m in -(l as i64)..=(l as i64) {
            let am = m.unsigned_abs() as usize;
            let [v, dv, ddv] = pl[am];
            if m == 0 {
                out.push([v, dv, 0.0, ddv, 0.0, 0.0]);
            } else {
                let mf = am as f64;
                let (sm, cm) = (mf * phi).sin_cos();
                // m > 0: cos(mφ); m < 0: sin(|m|φ)
                let (f, df, ddf) = if m > 0 { (cm, -mf * sm, -mf * mf * cm) } else { (sm, mf * cm, -mf * mf * sm) };
                out.push([r2 * v * f, r2 * dv * f, r2 * v * df, r2 * ddv * f, r2 * dv * df, r2 * v * ddf]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram(basis: &HarmonicBasis) -> Vec<Vec<f64>> {
        let n = basis.len();
        let w = &basis.quad.weights;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        basis.values(i).iter().zip(basis.values(j)).zip(w).map(|((a, b), w)| a * b * w).sum()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn orthonormal_in_both_dimensions() {
        for (dim, l_max) in [(2, 10), (3, 6)] {
            let b = HarmonicBasis::new(dim, l_max).unwrap();
            let g = gram(&b);
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((g[i][j] - e).abs() < 1e-8, "dim {dim} ({i},{j}) = {}", g[i][j]);
                }
            }
        }
    }

    #[test]
    fn dirichlet_energy_matches_eigenvalue() {
        for (dim, l_max) in [(2, 8), (3, 6)] {
            let b = HarmonicBasis::new(dim, l_max).unwrap();
            for k in 0..b.len() {
                let e: f64 = b
                    .gradients(k)
                    .iter()
                    .zip(&b.quad.weights)
                    .map(|(g, w)| w * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]))
                    .sum();
                assert!((e - b.eigenvalues()[k]).abs() < 1e-8, "dim {dim} k {k}: {e}");
            }
        }
    }

    #[test]
    fn index_roundtrip() {
        for dim in [2, 3] {
            let b = HarmonicBasis::new(dim, 5).unwrap();
            for k in 0..b.len() {
                let m = HarmonicBasis::index_to_mode(dim, k);
                assert_eq!(b.mode_to_index(m.l, m.m).unwrap(), k);
            }
        }
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        let b = HarmonicBasis::new(3, 5).unwrap();
        let (t, p) = (0.9, 0.4);
        let d = 1e-5;
        let e0 = b.eval_angles(t, p);
        let et = b.eval_angles(t + d, p);
        let etm = b.eval_angles(t - d, p);
        let ep = b.eval_angles(t, p + d);
        let epm = b.eval_angles(t, p - d);
        for k in 0..b.len() {
            let dtt = (et[k][1] - etm[k][1]) / (2.0 * d);
            let dtp = (ep[k][1] - epm[k][1]) / (2.0 * d);
            let dpp = (ep[k][2] - epm[k][2]) / (2.0 * d);
            let dt = (et[k][0] - etm[k][0]) / (2.0 * d);
            assert!((dt - e0[k][1]).abs() < 1e-6);
            assert!((dtt - e0[k][3]).abs() < 1e-5, "k {k}");
            assert!((dtp - e0[k][4]).abs() < 1e-5);
            assert!((dpp - e0[k][5]).abs() < 1e-5);
        }
    }

    #[test]
    fn point_evaluation_agrees_with_tables() {
        let b = HarmonicBasis::new(3, 4).unwrap();
        let q = 17;
        let (v, g) = b.eval_direction(&b.quad.nodes[q]);
        for k in 0..b.len() {
            assert!((v[k] - b.values(k)[q]).abs() < 1e-12);
            for d in 0..3 {
                assert!((g[k][d] - b.gradients(k)[q][d]).abs() < 1e-10);
            }
        }
    }
}

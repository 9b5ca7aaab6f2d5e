use super::mesh::BallMesh;
use crate::linalg::{Mat3, Vec3};
use crate::par::{self, Execution};
use crate::shape::RadialShape;
use crate::{Error, Result};

pub const CUTOFF_INNER: f64 = 0.3;
pub const CUTOFF_OUTER: f64 = 0.7;

/// Quintic cutoff `θ(r)` (≡ 0 below 0.3, ≡ 1 above 0.7) and `θ′(r)`.
pub fn cutoff(r: f64) -> (f64, f64) {
    if r <= CUTOFF_INNER {
        return (0.0, 0.0);
    }
    if r >= CUTOFF_OUTER {
        return (1.0, 0.0);
    }
    let w = CUTOFF_OUTER - CUTOFF_INNER;
    let s = (r - CUTOFF_INNER) / w;
    let th = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let dth = 30.0 * s * s * (1.0 - s) * (1.0 - s) / w;
    (th, dth)
}

/// `Dξ` for `ξ(x) = θ(|x|) h(x/|x|) x`, given `h` and `∇_τh` at `x/|x|`:
/// `θh I + rθ′h ωωᵀ + θ ω ⊗ ∇_τh`.
/// In 2D the third row and column stay zero.
pub fn deformation_gradient(x: &Vec3, h: f64, grad_h: &Vec3, dim: usize) -> Mat3 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let (th, dth) = cutoff(r);
    if th == 0.0 && dth == 0.0 {
        return Mat3::ZERO;
    }
    let w = [x[0] / r, x[1] / r, x[2] / r];
    let mut d = Mat3::scaled_identity(th * h) + Mat3::outer(&w, &w).scale(r * dth * h) + Mat3::outer(&w, grad_h).scale(th);
    if dim == 2 {
        d.0[2][2] = 0.0;
    }
    d
}

/// The map `φ_ξ(x) = x + ξ(x)`.
pub fn deformation_map(shape: &RadialShape, x: &Vec3) -> Vec3 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let (th, _) = cutoff(r);
    if th == 0.0 {
        return *x;
    }
    let w = [x[0] / r, x[1] / r, x[2] / r];
    let h = shape.eval_direction(&w).0 - 1.0;
    [x[0] * (1.0 + th * h), x[1] * (1.0 + th * h), x[2] * (1.0 + th * h)]
}

/// `(J, A)` with `J = det F`, `A = J F⁻¹F⁻ᵀ`, `F = I + Dξ`.
pub fn pullback_at(d: &Mat3) -> Result<(f64, Mat3)> {
    let f = Mat3::identity() + *d;
    let j = f.det();
    if j <= 0.0 {
        return Err(Error::DeformationTooLarge(format!("det(I + Dξ) = {j:.3e}")));
    }
    let fi = f.inverse().ok_or_else(|| Error::DeformationTooLarge("singular I + Dξ".into()))?;
    Ok((j, (fi * fi.transpose()).scale(j)))
}

/// `(h, ∇_τh)` at `x/|x|`, or zeros inside the cutoff core.
pub(crate) fn boundary_data(shape: &RadialShape, x: &Vec3) -> (f64, Vec3) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r <= CUTOFF_INNER {
        return (0.0, [0.0; 3]);
    }
    let w = [x[0] / r, x[1] / r, x[2] / r];
    let (rho, g) = shape.eval_direction(&w);
    (rho - 1.0, g)
}

/// Pullback coefficient fields at element quadrature points.
#[derive(Debug, Clone)]
pub struct PullbackCoefficients {
    /// `A_ξ` at element centroids (stiffness quadrature).
    pub a: Vec<Mat3>,
    /// `J_ξ` at the mass quadrature points of each element.
    pub j: Vec<[f64; 4]>,
    pub min_j: f64,
    /// Largest condition number of `A_ξ` over the centroids.
    pub max_condition: f64,
}

impl PullbackCoefficients {
    pub fn identity(mesh: &BallMesh) -> Self {
        let n = mesh.n_simplices();
        PullbackCoefficients { a: vec![Mat3::identity(); n], j: vec![[1.0; 4]; n], min_j: 1.0, max_condition: 1.0 }
    }
}

fn condition_number(a: &Mat3, dim: usize) -> f64 {
    let ev = sym_eigenvalues(a, dim);
    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    hi / lo
}

/// Eigenvalues of the leading `dim × dim` block of a symmetric matrix.
pub(crate) fn sym_eigenvalues(a: &Mat3, dim: usize) -> Vec<f64> {
    let m = &a.0;
    if dim == 2 {
        let (p, q, r) = (m[0][0], m[0][1], m[1][1]);
        let mean = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        return vec![mean - rad, mean + rad];
    }
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = a.trace() / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p < 1e-300 {
        return vec![q; 3];
    }
    let b = (*a - Mat3::scaled_identity(q)).scale(1.0 / p);
    let rr = (b.det() / 2.0).clamp(-1.0, 1.0);
    let phi = rr.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    vec![e3, 3.0 * q - e1 - e3, e1]
}

/// Evaluate `A_ξ`, `J_ξ` on the mesh for `ξ = θ(|x|) h(x/|x|) x`.
pub fn pullback_coefficients(shape: &RadialShape, mesh: &BallMesh) -> Result<PullbackCoefficients> {
    pullback_coefficients_with(shape, mesh, par::default_execution())
}

pub fn pullback_coefficients_with(shape: &RadialShape, mesh: &BallMesh, exec: Execution) -> Result<PullbackCoefficients> {
    if shape.dim != mesh.dim {
        return Err(Error::InvalidArgument("shape and mesh dimensions differ".into()));
    }
    let geom = mesh.geometry();
    let nq = mesh.dim + 1;
    let per_elem = par::map_range(exec, mesh.n_simplices(), |e| -> Result<(Mat3, [f64; 4], f64)> {
        let c = geom.centroids[e];
        let (h, g) = boundary_data(shape, &c);
        let (_, a) = pullback_at(&deformation_gradient(&c, h, &g, mesh.dim))?;
        let mut js = [1.0; 4];
        for (q, jq) in js.iter_mut().enumerate().take(nq) {
            let x = geom.mass_points[e][q];
            let (h, g) = boundary_data(shape, &x);
            *jq = pullback_at(&deformation_gradient(&x, h, &g, mesh.dim))?.0;
        }
        Ok((a, js, condition_number(&a, mesh.dim)))
    });
    let mut a = Vec::with_capacity(per_elem.len());
    let mut j = Vec::with_capacity(per_elem.len());
    let mut min_j = f64::INFINITY;
    let mut max_condition = 1.0f64;
    for r in per_elem {
        let (ae, je, ce) = r?;
        min_j = je[..nq].iter().fold(min_j, |m, &v| m.min(v));
        max_condition = max_condition.max(ce);
        a.push(ae);
        j.push(je);
    }
    Ok(PullbackCoefficients { a, j, min_j, max_condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_mesh;
    use crate::shape::shared_basis;

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.1), (0.0, 0.0));
        assert_eq!(cutoff(0.9), (1.0, 0.0));
        let (t, _) = cutoff(0.5);
        assert!((t - 0.5).abs() < 1e-14);
        let d = 1e-6;
        let fd = (cutoff(0.45 + d).0 - cutoff(0.45 - d).0) / (2.0 * d);
        assert!((fd - cutoff(0.45).1).abs() < 1e-7);
    }

    #[test]
    fn identity_for_the_ball() {
        let mesh = build_mesh(2, 0.2).unwrap();
        let s = RadialShape::ball(shared_basis(2, 6).unwrap());
        let p = pullback_coefficients(&s, &mesh).unwrap();
        assert!(p.a.iter().all(|a| (*a - Mat3::identity()).ddot(&(*a - Mat3::identity())) < 1e-28));
        assert_eq!(p.min_j, 1.0);
    }

    #[test]
    fn constant_h_near_the_boundary() {
        for dim in [2, 3] {
            let c = 0.1;
            let mesh = build_mesh(dim, 0.25).unwrap();
            let s = RadialShape::constant(shared_basis(dim, 4).unwrap(), c).unwrap();
            let p = pullback_coefficients(&s, &mesh).unwrap();
            let geom = mesh.geometry();
            let n = dim as i32;
            for e in 0..mesh.n_simplices() {
                let x = geom.centroids[e];
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if r > CUTOFF_OUTER {
                    let scale = (1.0 + c).powi(n - 2);
                    for i in 0..dim {
                        for k in 0..dim {
                            let e_ik = if i == k { scale } else { 0.0 };
                            assert!((p.a[e].0[i][k] - e_ik).abs() < 1e-12);
                        }
                    }
                    let xq = geom.mass_points[e][0];
                    if (xq[0] * xq[0] + xq[1] * xq[1] + xq[2] * xq[2]).sqrt() > CUTOFF_OUTER {
                        assert!((p.j[e][0] - (1.0 + c).powi(n)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for dim in [2, 3] {
            let b = shared_basis(dim, 4).unwrap();
            let mut c = vec![0.0; b.len()];
            for (k, ci) in c.iter_mut().enumerate().skip(1) {
                *ci = 0.02 * (((k * 37) % 11) as f64 / 11.0 - 0.5);
            }
            let s = RadialShape::new(b, c).unwrap();
            let pts: [Vec3; 3] = if dim == 2 {
                [[0.5, 0.2, 0.0], [-0.1, 0.8, 0.0], [0.6, -0.6, 0.0]]
            } else {
                [[0.5, 0.2, 0.1], [-0.1, 0.6, 0.5], [0.3, -0.3, -0.75]]
            };
            for x in pts {
                let (h, g) = boundary_data(&s, &x);
                let d = deformation_gradient(&x, h, &g, dim);
                let step = 1e-6;
                for col in 0..dim {
                    let mut xp = x;
                    let mut xm = x;
                    xp[col] += step;
                    xm[col] -= step;
                    let (fp, fm) = (deformation_map(&s, &xp), deformation_map(&s, &xm));
                    for row in 0..dim {
                        let fd = (fp[row] - fm[row]) / (2.0 * step) - if row == col { 1.0 } else { 0.0 };
                        assert!((fd - d.0[row][col]).abs() < 1e-6, "dim {dim} ({row},{col})");
                    }
                }
                let (j, a) = pullback_at(&d).unwrap();
                let f = Mat3::identity() + d;
                assert!((j - f.det()).abs() < 1e-14);
                let fi = f.inverse().unwrap();
                let check = (fi * fi.transpose()).scale(j);
                assert!((check - a).ddot(&(check - a)).sqrt() < 1e-12);
                assert!(a.is_symmetric(1e-14));
            }
        }
    }

    #[test]
    fn symmetric_eigenvalues() {
        let a = Mat3([[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]]);
        let ev = sym_eigenvalues(&a, 3);
        let s: f64 = ev.iter().sum();
        assert!((s - 9.0).abs() < 1e-12);
        for e in ev {
            assert!((a - Mat3::scaled_identity(e)).det().abs() < 1e-10);
        }
    }
}

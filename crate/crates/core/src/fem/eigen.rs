use super::assembly::{assemble_mass, assemble_stiffness};
use super::mesh::{BallMesh, MeshGeometry};
use super::pullback::{boundary_data, cutoff, deformation_gradient, pullback_coefficients_with, PullbackCoefficients};
use crate::linalg::{dot, rcm_ordering, CsrMatrix, Mat3, SkylineCholesky};
use crate::par::{self, Execution};
use crate::shape::{self, RadialShape};
use crate::sphere::{self, bessel_first_zero};
use crate::{Error, Result};
use std::sync::Arc;

const TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-9;
const MAX_IT: usize = 500;

/// Smallest Dirichlet eigenpair of the pulled-back problem on `B_h`.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub lambda: f64,
    /// Nodal values on the ball mesh (zero on the boundary), normalized in
    /// `L²(B_h)` and nonnegative.
    pub v: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Assembled pencil: full matrices and their interior blocks.
pub(crate) struct Pencil {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub k_ii: CsrMatrix,
    pub m_ii: CsrMatrix,
}

impl Pencil {
    pub fn assemble(mesh: &BallMesh, coeffs: &PullbackCoefficients, exec: Execution) -> Self {
        let geom = mesh.geometry();
        let k = assemble_stiffness(mesh, &geom, &coeffs.a, exec);
        let m = assemble_mass(mesh, &geom, &coeffs.j, exec);
        let k_ii = k.principal_submatrix(&geom.interior, geom.n_interior);
        let m_ii = m.principal_submatrix(&geom.interior, geom.n_interior);
        Pencil { k, m, k_ii, m_ii }
    }
}

/// Interior eigenpair together with the shifted factor used to find it.
pub(crate) struct InteriorEigen {
    pub lambda: f64,
    /// `M`-normalized, positive-sum interior vector
    pub x: Vec<f64>,
    pub factor: SkylineCholesky,
    pub sigma: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn shifted(k: &CsrMatrix, m: &CsrMatrix, sigma: f64) -> CsrMatrix {
    k.add_scaled(-sigma, m)
}

/// Shifted inverse iteration for the smallest eigenpair of `K x = λ M x`.
pub(crate) fn inverse_iteration(geom: &MeshGeometry, k: &CsrMatrix, m: &CsrMatrix, sigma0: f64, x0: Vec<f64>) -> Result<InteriorEigen> {
    let ordering = geom.ordering.get_or_init(|| rcm_ordering(k)).clone();
    let mut sigma = sigma0;
    let mut attempts = 0;
    let factor = loop {
        match SkylineCholesky::factor_with_ordering(&shifted(k, m, sigma), ordering.clone()) {
            Ok(f) => break f,
            Err(Error::NotPositiveDefinite { .. }) if attempts < 6 => {
                attempts += 1;
                sigma = if attempts == 6 { 0.0 } else { 0.5 * sigma };
            }
            Err(e) => return Err(e),
        }
    };
    let normalize = |x: &mut Vec<f64>| {
        let n = m.bilinear(x, x).sqrt();
        x.iter_mut().for_each(|v| *v /= n);
    };
    let mut x = x0;
    normalize(&mut x);
    let mut lambda_old = k.bilinear(&x, &x);
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_IT {
        let mut y = factor.solve(&m.apply(&x));
        normalize(&mut y);
        let lambda = k.bilinear(&y, &y);
        let ky = k.apply(&y);
        let my = m.apply(&y);
        let r: f64 = ky.iter().zip(&my).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        residual = r / dot(&y, &y).sqrt();
        let done = (lambda - lambda_old).abs() <= TOL * lambda && residual < RESIDUAL_TOL;
        x = y;
        lambda_old = lambda;
        if done {
            if x.iter().sum::<f64>() < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(InteriorEigen { lambda, x, factor, sigma, iterations: it, residual });
        }
    }
    let _ = residual;
    Err(Error::NoConvergence { what: "inverse iteration".into(), iterations: MAX_IT })
}

fn initial_guess(mesh: &BallMesh, geom: &MeshGeometry) -> Vec<f64> {
    let mut x = vec![0.0; geom.n_interior];
    for (i, slot) in geom.interior.iter().enumerate() {
        if let Some(s) = slot {
            let v = mesh.vertices[i];
            x[*s] = 1.0 - (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
    }
    x
}

pub(crate) fn to_full(geom: &MeshGeometry, x: &[f64]) -> Vec<f64> {
    geom.interior.iter().map(|s| s.map_or(0.0, |k| x[k])).collect()
}

pub(crate) fn to_interior(geom: &MeshGeometry, v: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; geom.n_interior];
    for (i, s) in geom.interior.iter().enumerate() {
        if let Some(k) = s {
            x[*k] = v[i];
        }
    }
    x
}

/// `λ₁(B)` of the unit ball, `j²_{N/2-1,1}`.
pub fn ball_eigenvalue(dim: usize) -> Result<f64> {
    sphere::check_dim(dim)?;
    Ok(bessel_first_zero(dim as f64 / 2.0 - 1.0)?.powi(2))
}

/// Split `1 + h = s (1 + h̃)` with `s = 1 + c₀Y₀`: the dilation is handled
/// exactly through the scaling law, so the pullback only sees `h̃`.
pub(crate) fn factor_dilation(shape: &RadialShape) -> Result<(f64, RadialShape)> {
    let s = 1.0 + shape.coeffs[0] / shape.basis.constant_coefficient();
    if s <= 0.0 {
        return Err(Error::NotStarShaped { min_radius: shape.min_radius() });
    }
    let mut c: Vec<f64> = shape.coeffs.iter().map(|c| c / s).collect();
    c[0] = 0.0;
    Ok((s, shape.with_coeffs(c)))
}

pub(crate) struct Solved {
    pub s: f64,
    pub tilde: RadialShape,
    pub eig: InteriorEigen,
}

pub(crate) fn solve_shape(shape: &RadialShape, mesh: &BallMesh, exec: Execution) -> Result<Solved> {
    if shape.dim != mesh.dim {
        return Err(Error::InvalidArgument("shape and mesh dimensions differ".into()));
    }
    shape.check_star_shaped()?;
    let (s, tilde) = factor_dilation(shape)?;
    let coeffs = pullback_coefficients_with(&tilde, mesh, exec)?;
    let pencil = Pencil::assemble(mesh, &coeffs, exec);
    let geom = mesh.geometry();
    // Faber–Krahn lower bound keeps the initial shift below λ₁
    let dim = mesh.dim;
    let vol = shape::volume(&tilde)?;
    let fk = ball_eigenvalue(dim)? * (sphere::ball_volume(dim) / vol).powf(2.0 / dim as f64);
    let eig = inverse_iteration(&geom, &pencil.k_ii, &pencil.m_ii, 0.9 * fk, initial_guess(mesh, &geom))?;
    Ok(Solved { s, tilde, eig })
}

fn finish(sol: &Solved, mesh: &BallMesh) -> EigenSolution {
    let geom = mesh.geometry();
    let scale = sol.s.powf(-(mesh.dim as f64) / 2.0);
    let v = to_full(&geom, &sol.eig.x).into_iter().map(|x| x * scale).collect();
    EigenSolution {
        lambda: sol.eig.lambda / (sol.s * sol.s),
        v,
        residual: sol.eig.residual,
        iterations: sol.eig.iterations,
    }
}

/// First Dirichlet eigenvalue of `B_h` by P1 finite elements on the fixed
/// ball mesh, pulled back through `φ_ξ`.
pub fn lambda1(shape: &RadialShape, mesh: &BallMesh) -> Result<EigenSolution> {
    lambda1_with(shape, mesh, par::default_execution())
}

pub fn lambda1_with(shape: &RadialShape, mesh: &BallMesh, exec: Execution) -> Result<EigenSolution> {
    let sol = solve_shape(shape, mesh, exec)?;
    Ok(finish(&sol, mesh))
}

/// `λ` of the pulled-back problem without factoring out the dilation; the
/// discrete path `t ↦ B_{th}` seen by the volumetric derivative formula.
#[cfg(test)]
pub(crate) fn lambda1_unfactored(shape: &RadialShape, mesh: &BallMesh) -> Result<f64> {
    let exec = par::default_execution();
    let coeffs = pullback_coefficients_with(shape, mesh, exec)?;
    let pencil = Pencil::assemble(mesh, &coeffs, exec);
    let geom = mesh.geometry();
    let vol = shape::volume(shape)?;
    let dim = mesh.dim;
    let fk = ball_eigenvalue(dim)? * (sphere::ball_volume(dim) / vol).powf(2.0 / dim as f64);
    Ok(inverse_iteration(&geom, &pencil.k_ii, &pencil.m_ii, 0.9 * fk, initial_guess(mesh, &geom))?.lambda)
}

/// One point of [`lambda1_path`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub lambda: f64,
    /// `λ` on a twice coarser mesh is not below the value on this mesh.
    pub refinement_monotone: bool,
}

/// `λ₁(B_{th})` along `t_grid`.
pub fn lambda1_path(shape: &RadialShape, t_grid: &[f64], mesh: &BallMesh) -> Result<Vec<PathPoint>> {
    let coarse = super::build_mesh(mesh.dim, (2.0 * mesh.size).min(0.5))?;
    let exec = par::default_execution();
    let vals = par::map_slice(exec, t_grid, |&t| -> Result<PathPoint> {
        let s = shape.scaled(t);
        let fine = lambda1_with(&s, mesh, Execution::Sequential)?.lambda;
        let c = lambda1_with(&s, &coarse, Execution::Sequential)?.lambda;
        Ok(PathPoint { t, lambda: fine, refinement_monotone: c >= fine - 1e-12 * fine })
    });
    vals.into_iter().collect()
}

/// `λ₁` and its gradient with respect to the harmonic coefficients.
pub fn lambda1_gradient(shape: &RadialShape, mesh: &BallMesh) -> Result<(EigenSolution, Vec<f64>)> {
    lambda1_gradient_with(shape, mesh, par::default_execution())
}

pub fn lambda1_gradient_with(shape: &RadialShape, mesh: &BallMesh, exec: Execution) -> Result<(EigenSolution, Vec<f64>)> {
    let sol = solve_shape(shape, mesh, exec)?;
    let geom = mesh.geometry();
    let basis = &shape.basis;
    let nk = basis.len();
    let nv = mesh.dim + 1;
    let v = to_full(&geom, &sol.eig.x);
    let lt = sol.eig.lambda;
    let (bary, wq) = MeshGeometry::mass_rule(mesh.dim);
    const CHUNK: usize = 256;
    let n_chunks = mesh.n_simplices().div_ceil(CHUNK);

    // per-point contribution: d/dc_k of the integrand, accumulated into `acc`
    let point = |x: &[f64; 3], acc: &mut [f64], weight: f64, grad_v: Option<&[f64; 3]>, vq: f64| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let (th, dth) = cutoff(r);
        if th == 0.0 && dth == 0.0 {
            return;
        }
        let w = [x[0] / r, x[1] / r, x[2] / r];
        let (h, gh) = boundary_data(&sol.tilde, x);
        let f = Mat3::identity() + deformation_gradient(x, h, &gh, mesh.dim);
        let j = f.det();
        let fi = match f.inverse() {
            Some(fi) => fi,
            None => return,
        };
        let (vals, grads) = basis.eval_direction(&w);
        let tr_fi = if mesh.dim == 2 { fi.0[0][0] + fi.0[1][1] } else { fi.trace() };
        let wfw = fi.bilinear(&w, &w);
        let fiw = fi.mul_vec(&w);
        match grad_v {
            Some(g) => {
                let p = fi.transpose().mul_vec(g);
                let q = fi.mul_vec(&p);
                let pp = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
                let pq = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
                let pw = p[0] * w[0] + p[1] * w[1] + p[2] * w[2];
                let wq_ = w[0] * q[0] + w[1] * q[1] + w[2] * q[2];
                for k in 1..nk {
                    let y = vals[k];
                    let gy = &grads[k];
                    let gfw = gy[0] * fiw[0] + gy[1] * fiw[1] + gy[2] * fiw[2];
                    let tr = th * y * tr_fi + r * dth * y * wfw + th * gfw;
                    let gq = gy[0] * q[0] + gy[1] * q[1] + gy[2] * q[2];
                    let pdq = th * y * pq + r * dth * y * pw * wq_ + th * pw * gq;
                    acc[k] += weight * j * (tr * pp - 2.0 * pdq);
                }
            }
            None => {
                for k in 1..nk {
                    let y = vals[k];
                    let gy = &grads[k];
                    let gfw = gy[0] * fiw[0] + gy[1] * fiw[1] + gy[2] * fiw[2];
                    let tr = th * y * tr_fi + r * dth * y * wfw + th * gfw;
                    acc[k] -= weight * lt * j * tr * vq * vq;
                }
            }
        }
    };
    let partials = par::map_range(exec, n_chunks, |c| {
        let mut acc = vec![0.0; nk];
        for e in (c * CHUNK)..((c + 1) * CHUNK).min(mesh.n_simplices()) {
            let s = &mesh.simplices[e];
            let g = &geom.grads[e];
            let vol = geom.volumes[e];
            let mut gv = [0.0; 3];
            for a in 0..nv {
                for d in 0..3 {
                    gv[d] += v[s[a]] * g[a][d];
                }
            }
            point(&geom.centroids[e], &mut acc, vol, Some(&gv), 0.0);
            for (q, b) in bary.iter().enumerate() {
                let vq: f64 = (0..nv).map(|a| b[a] * v[s[a]]).sum();
                point(&geom.mass_points[e][q], &mut acc, vol * wq, None, vq);
            }
        }
        acc
    });
    let mut gt = vec![0.0; nk];
    for p in partials {
        for (a, b) in gt.iter_mut().zip(&p) {
            *a += b;
        }
    }
    // chain rule through λ = λ̃(c/s) / s², s = 1 + c₀ Y₀
    let s = sol.s;
    let kappa = 1.0 / basis.constant_coefficient();
    let mut grad = vec![0.0; nk];
    let mut cross = 0.0;
    for k in 1..nk {
        grad[k] = gt[k] / (s * s * s);
        cross += gt[k] * shape.coeffs[k];
    }
    let lam = lt / (s * s);
    grad[0] = kappa * (-2.0 * lam / s - cross / s.powi(4));
    Ok((finish(&sol, mesh), grad))
}

/// Eigenpair of the unit ball with the operators needed for shape
/// derivatives; cached per mesh.
pub(crate) struct BallProblem {
    pub lambda: f64,
    /// interior, `M`-normalized
    pub x: Vec<f64>,
    /// full vector
    pub v: Vec<f64>,
    pub pencil: Pencil,
    pub factor: SkylineCholesky,
    pub sigma: f64,
}

impl std::fmt::Debug for BallProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BallProblem").field("lambda", &self.lambda).field("sigma", &self.sigma).finish()
    }
}

pub(crate) fn ball_problem(mesh: &BallMesh) -> Result<Arc<BallProblem>> {
    if let Some(b) = mesh.ball.get() {
        return Ok(b.clone());
    }
    let geom = mesh.geometry();
    let exec = par::default_execution();
    let pencil = Pencil::assemble(mesh, &PullbackCoefficients::identity(mesh), exec);
    let sigma0 = 0.9 * ball_eigenvalue(mesh.dim)?;
    let eig = inverse_iteration(&geom, &pencil.k_ii, &pencil.m_ii, sigma0, initial_guess(mesh, &geom))?;
    let v = to_full(&geom, &eig.x);
    let b = Arc::new(BallProblem { lambda: eig.lambda, x: eig.x, v, pencil, factor: eig.factor, sigma: eig.sigma });
    let _ = mesh.ball.set(b.clone());
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_mesh;
    use crate::shape::shared_basis;

    #[test]
    fn coarse_disk_eigenvalue() {
        let mesh = build_mesh(2, 0.1).unwrap();
        let ball = RadialShape::ball(shared_basis(2, 6).unwrap());
        let e = lambda1(&ball, &mesh).unwrap();
        let exact = ball_eigenvalue(2).unwrap();
        assert!(e.lambda > exact && e.lambda < 1.03 * exact, "{}", e.lambda);
        assert!(e.residual < 1e-9);
        assert!(e.v.iter().all(|&x| x >= -1e-10));
    }

    #[test]
    fn dilation_is_exact() {
        let mesh = build_mesh(2, 0.15).unwrap();
        let b = shared_basis(2, 6).unwrap();
        let s = RadialShape::from_modes(b, &[(2, 1, 0.05), (3, -1, 0.03)]).unwrap();
        let l = lambda1(&s, &mesh).unwrap().lambda;
        for f in [0.8, 1.3] {
            let ld = lambda1(&s.dilated(f), &mesh).unwrap().lambda;
            assert!((ld - l / (f * f)).abs() < 1e-8 * l);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mesh = build_mesh(2, 0.1).unwrap();
        let b = shared_basis(2, 4).unwrap();
        let s = RadialShape::from_modes(b, &[(0, 0, 0.05), (2, 1, 0.06), (3, -1, 0.03), (1, 1, 0.02)]).unwrap();
        let (_, g) = lambda1_gradient(&s, &mesh).unwrap();
        let d = 1e-5;
        for k in 0..s.coeffs.len() {
            let mut up = s.clone();
            up.coeffs[k] += d;
            let mut dn = s.clone();
            dn.coeffs[k] -= d;
            let fd = (lambda1(&up, &mesh).unwrap().lambda - lambda1(&dn, &mesh).unwrap().lambda) / (2.0 * d);
            assert!((fd - g[k]).abs() < 1e-6 * (1.0 + fd.abs()), "k={k}: fd {fd} vs {}", g[k]);
        }
    }
}

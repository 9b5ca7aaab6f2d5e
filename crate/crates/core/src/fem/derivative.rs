use super::assembly::{assemble_mass, assemble_stiffness};
use super::eigen::{ball_problem, to_full, to_interior, BallProblem};
use super::mesh::BallMesh;
use super::pullback::{boundary_data, deformation_gradient};
use crate::linalg::{axpy, dot, norm2, Mat3};
use crate::par;
use crate::shape::RadialShape;
use crate::{Error, Result};

const CG_TOL: f64 = 1e-12;
const CG_MAX_IT: usize = 500;
const RESIDUAL_TOL: f64 = 1e-8;

/// Shape derivative `v′` of the ball eigenfunction along `ξ = θ h x`.
#[derive(Debug, Clone)]
pub struct DerivativeField {
    /// Nodal values, boundary values `−∂_n v · h`.
    pub v_prime: Vec<f64>,
    pub lambda: f64,
    pub lambda_prime: f64,
    /// `∂_n v` at boundary vertices (zero elsewhere).
    pub normal_derivative: Vec<f64>,
    /// relative residual of the interior solve
    pub residual: f64,
}

/// `λ(0)`, `λ′(0)`, `λ″(0)` along the raw path `t ↦ B_{th}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondDerivative {
    pub lambda: f64,
    pub first: f64,
    pub second: f64,
}

/// Solve `(K − λM)_II x = f` on the `M`-orthogonal complement of the ball
/// eigenvector: the rank-one term `(λ−σ) w wᵀ`, `w = M v`, lifts the kernel
/// and the shifted factor `K − σM` preconditions CG.
fn solve_deflated(ball: &BallProblem, mut f: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let x0 = &ball.x;
    let lam = ball.lambda;
    let w = ball.pencil.m_ii.apply(x0);
    // range of the singular operator is x0^⊥
    let c = dot(x0, &f) / dot(x0, x0);
    axpy(-c, x0, &mut f);
    let fnorm = norm2(&f);
    let n = f.len();
    if fnorm == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let alpha = lam - ball.sigma;
    let op = |x: &[f64]| -> Vec<f64> {
        let mut y = ball.pencil.k_ii.apply(x);
        axpy(-lam, &ball.pencil.m_ii.apply(x), &mut y);
        axpy(alpha * dot(&w, x), &w, &mut y);
        y
    };
    let mut x = vec![0.0; n];
    let mut r = f.clone();
    let mut z = ball.factor.solve(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut converged = false;
    for _ in 0..CG_MAX_IT {
        let ap = op(&p);
        let a = rz / dot(&p, &ap);
        axpy(a, &p, &mut x);
        axpy(-a, &ap, &mut r);
        if norm2(&r) <= CG_TOL * fnorm {
            converged = true;
            break;
        }
        z = ball.factor.solve(&r);
        let rz_new = dot(&r, &z);
        let b = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + b * *pi;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { what: "deflated CG".into(), iterations: CG_MAX_IT });
    }
    // residual of the original singular system
    let mut res = ball.pencil.k_ii.apply(&x);
    axpy(-lam, &ball.pencil.m_ii.apply(&x), &mut res);
    axpy(-1.0, &f, &mut res);
    let rel = norm2(&res) / fnorm;
    if rel > RESIDUAL_TOL {
        return Err(Error::Deflation(format!(
            "relative residual {rel:.2e}; the ball eigenvalue may not be simple on this mesh"
        )));
    }
    Ok((x, rel))
}

fn check_dims(direction: &RadialShape, mesh: &BallMesh) -> Result<()> {
    if direction.dim != mesh.dim {
        return Err(Error::InvalidArgument("direction and mesh dimensions differ".into()));
    }
    Ok(())
}

/// Degree of the harmonic projection used to recover `∂_n v` from the flux.
const FLUX_DEGREE: usize = 2;

/// `∂_n v` at the boundary vertices of the ball mesh.
///
/// The flux `K v − λ M v` at a boundary vertex is `∫ ∂_n v φ_i`, so it
/// tests smooth functions accurately, while dividing by `∫ φ_i` vertex by
/// vertex amplifies the irregularity of the boundary mesh. The recovered
/// field is the degree-`FLUX_DEGREE` harmonic projection of that functional.
fn normal_derivative(mesh: &BallMesh, ball: &BallProblem) -> Result<Vec<f64>> {
    let basis = crate::shape::shared_basis(mesh.dim, FLUX_DEGREE)?;
    let mut flux = ball.pencil.k.apply(&ball.v);
    axpy(-ball.lambda, &ball.pencil.m.apply(&ball.v), &mut flux);
    let n = mesh.n_vertices();
    let mut ys = vec![None; n];
    let mut a = vec![0.0; basis.len()];
    for i in 0..n {
        if mesh.boundary[i] {
            let (y, _) = basis.eval_direction(&mesh.vertices[i]);
            for (ak, yk) in a.iter_mut().zip(&y) {
                *ak += flux[i] * yk;
            }
            ys[i] = Some(y);
        }
    }
    Ok(ys.into_iter().map(|y| y.map_or(0.0, |y| dot(&a, &y))).collect())
}

/// Solve `−Δv′ = λv′ + λ′v` in `B`, `v′ = −∂_n v h` on `∂B`, `∫v′v = 0`.
///
/// `λ′ = Σ_i flux_i v′_i` pairs the boundary data with the discrete flux,
/// which keeps it consistent with the solvability condition of the
/// interior system.
pub fn eigen_derivative_field(direction: &RadialShape, mesh: &BallMesh) -> Result<DerivativeField> {
    check_dims(direction, mesh)?;
    let ball = ball_problem(mesh)?;
    let geom = mesh.geometry();
    let lam = ball.lambda;
    let n = mesh.n_vertices();
    let mut flux = ball.pencil.k.apply(&ball.v);
    axpy(-lam, &ball.pencil.m.apply(&ball.v), &mut flux);
    let dn = normal_derivative(mesh, &ball)?;
    let mut vb = vec![0.0; n];
    let mut lambda_prime = 0.0;
    for i in 0..n {
        if mesh.boundary[i] {
            let h = direction.eval_direction(&mesh.vertices[i]).0 - 1.0;
            vb[i] = -dn[i] * h;
            lambda_prime += flux[i] * vb[i];
        }
    }
    // f_I = λ′ (M v)_I − (K − λM)_IB v′_B
    let mut lift = ball.pencil.k.apply(&vb);
    axpy(-lam, &ball.pencil.m.apply(&vb), &mut lift);
    let mv = ball.pencil.m.apply(&ball.v);
    let mut f = to_interior(&geom, &mv);
    f.iter_mut().for_each(|x| *x *= lambda_prime);
    axpy(-1.0, &to_interior(&geom, &lift), &mut f);
    let (x, residual) = solve_deflated(&ball, f)?;
    let mut vp = to_full(&geom, &x);
    for i in 0..n {
        if mesh.boundary[i] {
            vp[i] = vb[i];
        }
    }
    // enforce ∫ v′ v = 0 using the interior eigenvector (leaves the equation intact)
    let c = dot(&vp, &mv);
    axpy(-c, &ball.v, &mut vp);
    Ok(DerivativeField { v_prime: vp, lambda: lam, lambda_prime, normal_derivative: dn, residual })
}

/// `λ″(0) = 2(∫|∇v′|² − λ∫v′²) + (N−1)∫_{∂B}(∂_n v)² h²` at the ball, where
/// `ξ` is normal on `∂B` so the tangential terms vanish.
pub fn lambda_second_derivative_boundary(direction: &RadialShape, mesh: &BallMesh) -> Result<SecondDerivative> {
    let field = eigen_derivative_field(direction, mesh)?;
    let ball = ball_problem(mesh)?;
    let geom = mesh.geometry();
    let vp = &field.v_prime;
    let energy = ball.pencil.k.bilinear(vp, vp) - field.lambda * ball.pencil.m.bilinear(vp, vp);
    let mut bterm = 0.0;
    for i in 0..mesh.n_vertices() {
        if mesh.boundary[i] {
            let h = direction.eval_direction(&mesh.vertices[i]).0 - 1.0;
            bterm += geom.boundary_weight[i] * (field.normal_derivative[i] * h).powi(2);
        }
    }
    let second = 2.0 * energy + (mesh.dim as f64 - 1.0) * bterm;
    Ok(SecondDerivative { lambda: field.lambda, first: field.lambda_prime, second })
}

/// Exact second derivative of the discrete pulled-back eigenvalue along
/// `t ↦ B_{th}`: with `A(t) = J F⁻¹F⁻ᵀ`, `F = I + tDξ`,
/// `λ″ = vᵀ(K″−λM″)v − 2λ′ vᵀM′v − 2 v̇ᵀ(K−λM)v̇`.
pub fn lambda_second_derivative_volumetric(direction: &RadialShape, mesh: &BallMesh) -> Result<SecondDerivative> {
    check_dims(direction, mesh)?;
    let ball = ball_problem(mesh)?;
    let geom = mesh.geometry();
    let exec = par::default_execution();
    let nq = mesh.dim + 1;
    let fields = par::map_range(exec, mesh.n_simplices(), |e| {
        let c = geom.centroids[e];
        let (h, g) = boundary_data(direction, &c);
        let d = deformation_gradient(&c, h, &g, mesh.dim);
        let (a1, a2) = stiffness_derivatives(&d);
        let mut j1 = [0.0; 4];
        let mut j2 = [0.0; 4];
        for q in 0..nq {
            let x = geom.mass_points[e][q];
            let (h, g) = boundary_data(direction, &x);
            let d = deformation_gradient(&x, h, &g, mesh.dim);
            let t = d.trace();
            j1[q] = t;
            j2[q] = t * t - (d * d).trace();
        }
        (a1, a2, j1, j2)
    });
    let a1: Vec<Mat3> = fields.iter().map(|f| f.0).collect();
    let a2: Vec<Mat3> = fields.iter().map(|f| f.1).collect();
    let j1: Vec<[f64; 4]> = fields.iter().map(|f| f.2).collect();
    let j2: Vec<[f64; 4]> = fields.iter().map(|f| f.3).collect();
    let sub = |m: crate::linalg::CsrMatrix| m.principal_submatrix(&geom.interior, geom.n_interior);
    let k1 = sub(assemble_stiffness(mesh, &geom, &a1, exec));
    let k2 = sub(assemble_stiffness(mesh, &geom, &a2, exec));
    let m1 = sub(assemble_mass(mesh, &geom, &j1, exec));
    let m2 = sub(assemble_mass(mesh, &geom, &j2, exec));
    let x = &ball.x;
    let lam = ball.lambda;
    let first = k1.bilinear(x, x) - lam * m1.bilinear(x, x);
    // (K − λM) v̇ = −(K′ − λM′ − λ′M) v
    let mut rhs = k1.apply(x);
    axpy(-lam, &m1.apply(x), &mut rhs);
    axpy(-first, &ball.pencil.m_ii.apply(x), &mut rhs);
    rhs.iter_mut().for_each(|r| *r = -*r);
    let (vdot, _) = solve_deflated(&ball, rhs)?;
    let energy = ball.pencil.k_ii.bilinear(&vdot, &vdot) - lam * ball.pencil.m_ii.bilinear(&vdot, &vdot);
    let second = k2.bilinear(x, x) - lam * m2.bilinear(x, x) - 2.0 * first * m1.bilinear(x, x) - 2.0 * energy;
    Ok(SecondDerivative { lambda: lam, first, second })
}

/// `(A′, A″)` at `t = 0` for `A(t) = J F⁻¹F⁻ᵀ`, `F = I + tD`.
pub(crate) fn stiffness_derivatives(d: &Mat3) -> (Mat3, Mat3) {
    let t = d.trace();
    let dt = d.transpose();
    let a1 = Mat3::scaled_identity(t) - *d - dt;
    let a2 = ((*d * *d) + (dt * dt) + (*d * dt) - (*d + dt).scale(t)
        + Mat3::scaled_identity(0.5 * (t * t - (*d * *d).trace())))
    .scale(2.0);
    (a1, a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_mesh, pullback_at};
    use crate::shape::shared_basis;

    #[test]
    fn stiffness_derivatives_match_taylor() {
        let d = Mat3([[0.3, -0.2, 0.1], [0.05, -0.1, 0.4], [0.2, 0.1, 0.25]]);
        let (a1, a2) = stiffness_derivatives(&d);
        let t = 1e-4;
        let a = |s: f64| pullback_at(&d.scale(s)).unwrap().1;
        let fd1 = (a(t) - a(-t)).scale(0.5 / t);
        let fd2 = (a(t) + a(-t) - Mat3::identity().scale(2.0)).scale(1.0 / (t * t));
        assert!((fd1 - a1).ddot(&(fd1 - a1)).sqrt() < 1e-7);
        assert!((fd2 - a2).ddot(&(fd2 - a2)).sqrt() < 1e-5);
    }

    #[test]
    fn dilation_direction() {
        let mesh = build_mesh(2, 0.1).unwrap();
        let b = shared_basis(2, 4).unwrap();
        let one = RadialShape::constant(b, 1.0).unwrap();
        let lam = ball_problem(&mesh).unwrap().lambda;
        let vol = lambda_second_derivative_volumetric(&one, &mesh).unwrap();
        // exact for the discrete path
        let t = 1e-3;
        let f = |s: f64| crate::fem::eigen::lambda1_unfactored(&one.scaled(s), &mesh).unwrap();
        let fd1 = (f(t) - f(-t)) / (2.0 * t);
        let fd2 = (f(t) - 2.0 * f(0.0) + f(-t)) / (t * t);
        assert!((vol.first - fd1).abs() < 1e-5 * lam, "{vol:?} {fd1}");
        assert!((vol.second - fd2).abs() < 1e-4 * lam, "{vol:?} {fd2}");
        // and close to the continuous λ/(1+t)² law
        assert!((vol.first + 2.0 * lam).abs() < 1e-2 * lam, "{vol:?}");
        assert!((vol.second - 6.0 * lam).abs() < 2e-2 * 6.0 * lam, "{vol:?}");
        let bd = lambda_second_derivative_boundary(&one, &mesh).unwrap();
        assert!((bd.first + 2.0 * lam).abs() < 2e-2 * lam, "{bd:?}");
        assert!((bd.second - 6.0 * lam).abs() < 2e-2 * 6.0 * lam, "{bd:?}");
    }
}

use super::RadialShape;
use crate::sphere::gauss_legendre;
use std::f64::consts::PI;

/// Tolerance on the curvature proxy below which a sample counts as concave.
pub const CONVEXITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub is_convex: bool,
    /// 2D: min of `ρ² + 2ρ′² − ρρ″`; 3D: min principal curvature.
    pub min_curvature_proxy: f64,
    /// Indices into the sampling grid where the proxy is below `-tol`.
    pub violating: Vec<usize>,
}

/// Sampled convexity test on a grid twice as dense as the shape's quadrature.
pub fn convexity_check(shape: &RadialShape) -> ConvexityReport {
    let proxy = curvature_samples(shape);
    let mut min = f64::INFINITY;
    let mut violating = Vec::new();
    for (i, &p) in proxy.iter().enumerate() {
        min = min.min(p);
        if p < -CONVEXITY_TOL {
            violating.push(i);
        }
    }
    ConvexityReport { is_convex: violating.is_empty(), min_curvature_proxy: min, violating }
}

/// Curvature proxy on the dense grid (row-major `θ × φ` in 3D).
pub(crate) fn curvature_samples(shape: &RadialShape) -> Vec<f64> {
    if shape.dim == 2 {
        let n = 8 * (2 * shape.l_max() + 1).max(64);
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let e = shape.eval_angles(t, 0.0);
                let (r, dr, ddr) = (e[0], e[1], e[3]);
                r * r + 2.0 * dr * dr - r * ddr
            })
            .collect()
    } else {
        let (nt, np) = shape.basis.quad.grid;
        let (nt, np) = (2 * nt, 2 * np);
        let (xs, _) = gauss_legendre(nt);
        let mut out = Vec::with_capacity(nt * np);
        for x in xs {
            let theta = x.acos();
            for j in 0..np {
                let phi = 2.0 * PI * j as f64 / np as f64;
                out.push(min_principal_curvature(&shape.eval_angles(theta, phi), theta, phi));
            }
        }
        out
    }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Smallest principal curvature of `X(θ, φ) = ρ ω`, outward normal.
fn min_principal_curvature(e: &[f64; 6], theta: f64, phi: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let w = [st * cp, st * sp, ct];
    let wt = [ct * cp, ct * sp, -st];
    let wp = [-st * sp, st * cp, 0.0];
    let wtt = [-w[0], -w[1], -w[2]];
    let wtp = [-ct * sp, ct * cp, 0.0];
    let wpp = [-st * cp, -st * sp, 0.0];
    let [r, rt, rp, rtt, rtp, rpp] = *e;
    let mut xt = [0.0; 3];
    let mut xp = [0.0; 3];
    let mut xtt = [0.0; 3];
    let mut xtp = [0.0; 3];
    let mut xpp = [0.0; 3];
    for d in 0..3 {
        xt[d] = rt * w[d] + r * wt[d];
        xp[d] = rp * w[d] + r * wp[d];
        xtt[d] = rtt * w[d] + 2.0 * rt * wt[d] + r * wtt[d];
        xtp[d] = rtp * w[d] + rt * wp[d] + rp * wt[d] + r * wtp[d];
        xpp[d] = rpp * w[d] + 2.0 * rp * wp[d] + r * wpp[d];
    }
    let mut n = cross(&xt, &xp);
    let nn = dot(&n, &n).sqrt();
    if dot(&n, &w) < 0.0 {
        n = [-n[0], -n[1], -n[2]];
    }
    let n = [n[0] / nn, n[1] / nn, n[2] / nn];
    let (e1, f1, g1) = (dot(&xt, &xt), dot(&xt, &xp), dot(&xp, &xp));
    let (l2, m2, n2) = (-dot(&xtt, &n), -dot(&xtp, &n), -dot(&xpp, &n));
    // shape operator in an orthonormal tangent frame: S = R⁻¹ II R⁻ᵀ, I = R Rᵀ
    let r11 = e1.sqrt();
    let r21 = f1 / r11;
    let r22 = (g1 - r21 * r21).sqrt();
    let a = l2 / (r11 * r11);
    let b = (m2 - r21 * l2 / r11) / (r11 * r22);
    let c = (n2 - 2.0 * r21 * m2 / r11 + r21 * r21 * l2 / (r11 * r11)) / (r22 * r22);
    0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::shared_basis;

    #[test]
    fn ball_has_unit_proxy() {
        for dim in [2, 3] {
            let r = convexity_check(&RadialShape::ball(shared_basis(dim, 6).unwrap()));
            assert!(r.is_convex);
            assert!((r.min_curvature_proxy - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cos2_amplitude_threshold() {
        let b = shared_basis(2, 8).unwrap();
        let s = |eps: f64| RadialShape::from_modes(b.clone(), &[(2, 1, eps * PI.sqrt())]).unwrap();
        assert!(!convexity_check(&s(0.4)).is_convex);
        assert!(convexity_check(&s(0.05)).is_convex);
        // closed form: ρ² + 2ρ′² − ρρ″ at θ = 0 is (1+ε)(1+5ε)
        let r = convexity_check(&s(0.05));
        assert!(r.min_curvature_proxy > 0.0);
    }

    #[test]
    fn dilated_sphere_curvature() {
        let b = shared_basis(3, 4).unwrap();
        let s = RadialShape::constant(b, 1.0).unwrap();
        let r = convexity_check(&s);
        assert!((r.min_curvature_proxy - 0.5).abs() < 1e-10);
    }

    #[test]
    fn dimpled_sphere_is_not_convex() {
        let b = shared_basis(3, 6).unwrap();
        let s = RadialShape::from_modes(b, &[(4, 0, 0.4)]).unwrap();
        assert!(!convexity_check(&s).is_convex);
    }
}

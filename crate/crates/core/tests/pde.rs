use ballstab::fem::{ball_eigenvalue, build_mesh, lambda1, lambda1_gradient, lambda1_path};
use ballstab::shape::{normalize, shared_basis, NormalizeMode, RadialShape};
use ballstab::sphere::{bessel_first_zero, sphere_area};
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn disk_and_ball_reference_values() {
    let j = bessel_first_zero(0.0).unwrap();
    assert!((j - 2.404_825_557_695_773).abs() < 1e-12);
    assert!(rel(ball_eigenvalue(2).unwrap(), j * j) < 1e-12);
    assert!(rel(ball_eigenvalue(3).unwrap(), PI * PI) < 1e-12);

    let disk = RadialShape::ball(shared_basis(2, 6).unwrap());
    let lam = lambda1(&disk, &build_mesh(2, 0.04).unwrap()).unwrap().lambda;
    // P1 elements approximate from above
    assert!(lam > j * j && rel(lam, j * j) < 0.01, "{lam}");
}

#[test]
fn dilation_scales_like_inverse_square() {
    let b = shared_basis(2, 6).unwrap();
    let mesh = build_mesh(2, 0.05).unwrap();
    let s = RadialShape::from_modes(b, &[(2, 1, 0.15), (3, 1, -0.05)]).unwrap();
    let base = lambda1(&s, &mesh).unwrap().lambda;
    for r in [0.8, 1.25] {
        let lam = lambda1(&s.dilated(r), &mesh).unwrap().lambda;
        assert!(rel(lam, base / (r * r)) < 1e-6, "r = {r}: {lam} vs {}", base / (r * r));
    }
}

#[test]
fn constant_mode_gradient_is_minus_two_lambda() {
    // λ(B_{1+t}) = λ(B)/(1+t)², so d/dt at t = 0 is −2λ
    let b = shared_basis(2, 4).unwrap();
    let mesh = build_mesh(2, 0.05).unwrap();
    let (sol, grad) = lambda1_gradient(&RadialShape::ball(b.clone()), &mesh).unwrap();
    let d = grad[0] * b.constant_coefficient();
    assert!(rel(d, -2.0 * sol.lambda) < 1e-4, "{d} vs {}", -2.0 * sol.lambda);
    assert!((b.constant_coefficient() - sphere_area(2).sqrt()).abs() < 1e-15);
}

#[test]
fn domain_monotonicity_along_outward_paths() {
    // h ≥ 0 everywhere makes B_{th} increase with t
    let b = shared_basis(2, 6).unwrap();
    let one = b.constant_coefficient();
    let s = RadialShape::from_modes(b.clone(), &[(2, 1, 0.1)]).unwrap();
    let mut c = s.coeffs.clone();
    c[0] += 0.2 * one;
    let h = RadialShape::new(b, c).unwrap();
    assert!(h.radius_at_nodes().iter().all(|r| *r > 1.0));
    let path = lambda1_path(&h, &[0.0, 0.5, 1.0], &build_mesh(2, 0.05).unwrap()).unwrap();
    assert!(path.windows(2).all(|w| w[1].lambda < w[0].lambda), "{path:?}");
    assert!(path.iter().all(|p| p.refinement_monotone));
}

#[test]
fn faber_krahn_on_unit_area_bodies() {
    let b = shared_basis(2, 8).unwrap();
    let mesh = build_mesh(2, 0.04).unwrap();
    let ball = lambda1(&RadialShape::ball(b.clone()), &mesh).unwrap().lambda;
    for modes in [[(2, 1, 0.1), (5, 1, 0.02)], [(3, -1, 0.08), (4, -1, 0.05)], [(2, 1, 0.2), (6, 1, 0.01)]] {
        let s = normalize(&RadialShape::from_modes(b.clone(), &modes).unwrap(), NormalizeMode::Both).unwrap();
        let lam = lambda1(&s, &mesh).unwrap().lambda;
        assert!(lam > ball, "{modes:?}: {lam} ≤ {ball}");
    }
}

#[test]
fn eigenvalue_is_continuous_in_the_shape() {
    let b = shared_basis(2, 6).unwrap();
    let mesh = build_mesh(2, 0.05).unwrap();
    let h = RadialShape::from_modes(b, &[(2, 1, 0.3), (4, -1, 0.1)]).unwrap();
    let path = lambda1_path(&h, &[0.0, 1e-3, 2e-3], &mesh).unwrap();
    let d1 = (path[1].lambda - path[0].lambda).abs();
    let d2 = (path[2].lambda - path[1].lambda).abs();
    assert!(d1 < 1e-3 && d2 < 1e-3, "{d1} {d2}");
}

#[test]
fn ball_in_three_dimensions() {
    let ball = RadialShape::ball(shared_basis(3, 4).unwrap());
    let lam = lambda1(&ball, &build_mesh(3, 0.1).unwrap()).unwrap().lambda;
    assert!(lam > PI * PI && rel(lam, PI * PI) < 0.03, "{lam}");
}

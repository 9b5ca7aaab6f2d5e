use ballstab::fem::build_mesh;
use ballstab::stability::{
    c_star_formula, fuglede_remainder, ic_diagnostic, jc_unit_volume, lambda_second_form, mode_direction,
    perimeter_second_form, sharp_threshold, Functional,
};
use ballstab::sphere::{ball_volume, bessel_first_zero, bessel_j};
use std::f64::consts::PI;

/// Per-mode threshold of the unit-area disk from the Bessel second variation
/// `λ″_l = (2j²/π)(1 + j J_l′(j)/J_l(j))` and `P″_l = l² − 1`.
fn disk_mode_threshold(l: usize) -> f64 {
    let j = bessel_first_zero(0.0).unwrap();
    let nu = l as f64;
    let jl = bessel_j(nu, j);
    let djl = bessel_j(nu - 1.0, j) - nu / j * jl;
    let lam2 = 2.0 * j * j / PI * (1.0 + j * djl / jl);
    (nu * nu - 1.0) / lam2 * ball_volume(2).powf(-1.5)
}

#[test]
fn planar_threshold_matches_bessel_oracle() {
    let c = c_star_formula(2).unwrap();
    assert!((c - 0.077).abs() < 1e-3, "{c}");
    let (best, l) = (2..=12).map(|l| (disk_mode_threshold(l), l)).fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
    assert_eq!(l, 2);
    assert!((best / c - 1.0).abs() < 1e-6, "{best} vs {c}");
}

#[test]
fn modewise_thresholds_follow_the_oracle() {
    let th = sharp_threshold(&build_mesh(2, 0.03).unwrap(), 5).unwrap();
    for m in th.spectrum.modes.iter().filter(|m| m.l >= 2) {
        let oracle = disk_mode_threshold(m.l);
        let t = m.threshold.unwrap();
        assert!((t / oracle - 1.0).abs() < 0.02, "l = {}: {t} vs {oracle}", m.l);
    }
}

#[test]
fn perimeter_forms_match_laplacian_spectrum() {
    for l in 2..=6 {
        let p2 = perimeter_second_form(l, 2).unwrap();
        assert!((p2 - (l * l - 1) as f64).abs() < 1e-6, "2D l = {l}: {p2}");
        let p3 = perimeter_second_form(l, 3).unwrap();
        assert!((p3 - (l * (l + 1) - 2) as f64).abs() < 1e-6, "3D l = {l}: {p3}");
    }
}

#[test]
fn jc_unit_volume_at_the_disk() {
    let j = bessel_first_zero(0.0).unwrap();
    let w = ball_volume(2);
    let v = jc_unit_volume(2.0 * PI, j * j, 0.05, 2);
    // unit-area disk has radius 1/√π
    let r = 1.0 / w.sqrt();
    let expected = 2.0 * PI * r - 0.05 * j * j / (r * r);
    assert!((v - expected).abs() < 1e-12);
}

#[test]
fn lambda_second_form_is_mesh_stable() {
    let coarse = lambda_second_form(3, &build_mesh(2, 0.05).unwrap()).unwrap();
    let fine = lambda_second_form(3, &build_mesh(2, 0.03).unwrap()).unwrap();
    assert!(coarse.relative_disagreement() < 0.02 && fine.relative_disagreement() < 0.01);
    assert!((coarse.boundary / fine.boundary - 1.0).abs() < 0.03, "{} {}", coarse.boundary, fine.boundary);
}

#[test]
fn perimeter_ladder_has_cubic_or_better_remainder() {
    let h = mode_direction(2, 3).unwrap();
    let lad = fuglede_remainder(Functional::Perimeter, &h, &[0.16, 0.08, 0.04, 0.02], None).unwrap();
    assert!(lad.slope >= 2.8, "{}", lad.slope);
    assert!(lad.increments().iter().all(|d| *d > 0.0));
}

#[test]
fn ic_diagnostic_is_finite_and_scales() {
    let mesh = build_mesh(2, 0.05).unwrap();
    let h = mode_direction(2, 2).unwrap();
    let d = ic_diagnostic(&h.scaled(0.5), &[0.1, 0.2], &mesh).unwrap();
    assert!(d.sup > 0.0 && d.ratio.is_finite() && d.sup > 10.0 * d.noise_floor);
    let zero = ic_diagnostic(&h.scaled(0.0), &[0.1], &mesh).unwrap();
    assert_eq!(zero.sup, 0.0);
}

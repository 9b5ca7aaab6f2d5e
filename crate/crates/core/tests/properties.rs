use ballstab::experiments::random_corpus;
use ballstab::shape::{
    normalize, perimeter, shared_basis, symmetric_difference, volume, NormalizeMode, RadialShape,
};
use ballstab::sphere::{ball_volume, sobolev_norm};
use proptest::prelude::*;
use std::sync::Arc;

fn coeffs(dim: usize, l_max: usize, amp: f64) -> impl Strategy<Value = RadialShape> {
    let basis = shared_basis(dim, l_max).unwrap();
    let n = basis.len();
    prop::collection::vec(-1.0..1.0f64, n).prop_map(move |v| {
        let b = Arc::clone(&basis);
        // degrees ≥ 1 with a total sup bound well below 1
        let mut c: Vec<f64> = v.iter().enumerate().map(|(k, x)| if k == 0 { 0.0 } else { *x }).collect();
        let s = RadialShape::new_unchecked(b.clone(), c.clone());
        let scale = amp / s.linf_norm().max(1e-12);
        c.iter_mut().for_each(|x| *x *= scale);
        RadialShape::new(b, c).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_on_the_quadrature(s in coeffs(2, 8, 0.3)) {
        let vals = s.h_at_nodes();
        let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
        let quad = s.basis.quad.integrate(&sq);
        prop_assert!((quad - s.l2_sq()).abs() < 1e-10 * (1.0 + quad));
    }

    #[test]
    fn sobolev_norms_increase_with_order(s in coeffs(3, 5, 0.3)) {
        let mut prev = 0.0;
        for e in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let n = sobolev_norm(&s.coeffs, e, &s.basis).unwrap();
            prop_assert!(n >= prev - 1e-14);
            prev = n;
        }
        prop_assert!((sobolev_norm(&s.coeffs, 1.0, &s.basis).unwrap().powi(2) - s.h1_sq()).abs() < 1e-10);
    }

    #[test]
    fn symmetric_difference_is_a_metric(a in coeffs(2, 6, 0.3), b in coeffs(2, 6, 0.3), c in coeffs(2, 6, 0.3)) {
        let ab = symmetric_difference(&a, &b).unwrap();
        let bc = symmetric_difference(&b, &c).unwrap();
        let ac = symmetric_difference(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!((ab - symmetric_difference(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(symmetric_difference(&a, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn isoperimetric_inequality(s in coeffs(2, 8, 0.3)) {
        let n = normalize(&s, NormalizeMode::Both).unwrap();
        prop_assert!((volume(&n).unwrap() / ball_volume(2) - 1.0).abs() < 1e-10);
        let ball = perimeter(&RadialShape::ball(s.basis.clone())).unwrap();
        prop_assert!(perimeter(&n).unwrap() >= ball - 1e-10);
    }

    #[test]
    fn isoperimetric_inequality_3d(s in coeffs(3, 4, 0.25)) {
        let n = normalize(&s, NormalizeMode::UnitVolume).unwrap();
        let ball = perimeter(&RadialShape::ball(s.basis.clone())).unwrap();
        prop_assert!(perimeter(&n).unwrap() >= ball - 1e-9);
    }

    #[test]
    fn corpus_is_deterministic_and_nested(seed in 0u64..1000) {
        let b = shared_basis(3, 4).unwrap();
        let a = random_corpus(&b, 4, 0.2, 4, seed).unwrap();
        let c = random_corpus(&b, 8, 0.2, 4, seed).unwrap();
        for (x, y) in a.iter().zip(&c) {
            prop_assert_eq!(&x.coeffs, &y.coeffs);
        }
        prop_assert!(c.iter().all(|s| s.linf_norm() <= 0.2 + 1e-9));
    }
}

use crate::par;
use crate::shape::{normalize, NormalizeMode, RadialShape};
use crate::sphere::HarmonicBasis;
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Generator for item `index` of a seeded family; independent of how many
/// items are drawn and of the thread schedule.
pub fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random coefficients on degrees `l_min..=l_max` with amplitude decaying
/// like `l^{-decay}`.
pub fn random_direction<R: Rng>(basis: &HarmonicBasis, rng: &mut R, l_min: usize, l_max: usize, decay: f64) -> Vec<f64> {
    (0..basis.len())
        .map(|k| {
            let l = basis.degree(k);
            let u: f64 = rng.gen_range(-1.0..1.0);
            if l >= l_min && l <= l_max {
                u * (l as f64).powf(-decay)
            } else {
                0.0
            }
        })
        .collect()
}

/// `normalize(B_{t h})` with `t` chosen so that `‖·‖_{L∞} = linf`; returns
/// `None` if the normalized shape cannot reach that size star-shapedly.
pub fn shape_with_linf(basis: &Arc<HarmonicBasis>, direction: &[f64], linf: f64) -> Result<Option<RadialShape>> {
    let base = RadialShape::new_unchecked(basis.clone(), direction.to_vec());
    let n0 = base.linf_norm();
    if n0 == 0.0 {
        return Ok(None);
    }
    let mut t = linf / n0;
    for _ in 0..8 {
        let s = RadialShape::new_unchecked(basis.clone(), direction.iter().map(|c| t * c).collect());
        if s.min_radius() <= 0.1 {
            return Ok(None);
        }
        let s = normalize(&s, NormalizeMode::Both)?;
        let got = s.linf_norm();
        if (got - linf).abs() <= 1e-3 * linf {
            return Ok(Some(s));
        }
        t *= linf / got;
    }
    Ok(None)
}

/// Seeded corpus of normalized, barycentered shapes with random content on
/// degrees `2..=l_rand` and `‖h‖_{L∞}` uniform in `[0.05, 1]·max_linf`.
pub fn random_corpus(basis: &Arc<HarmonicBasis>, n: usize, max_linf: f64, l_rand: usize, seed: u64) -> Result<Vec<RadialShape>> {
    let idx: Vec<u64> = (0..n as u64).collect();
    par::map_slice(par::default_execution(), &idx, |&i| -> Result<RadialShape> {
        let mut rng = item_rng(seed, i);
        loop {
            let decay = rng.gen_range(1.0..3.5);
            let dir = random_direction(basis, &mut rng, 2, l_rand, decay);
            let linf = rng.gen_range(0.05..1.0) * max_linf;
            if let Some(s) = shape_with_linf(basis, &dir, linf)? {
                return Ok(s);
            }
        }
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::{barycenter, shared_basis, volume};

    #[test]
    fn corpus_is_normalized_and_reproducible() {
        let b = shared_basis(3, 8).unwrap();
        let a = random_corpus(&b, 6, 0.3, 5, 11).unwrap();
        let c = random_corpus(&b, 6, 0.3, 5, 11).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert_eq!(x.coeffs, y.coeffs);
            assert!(x.linf_norm() <= 0.3 * (1.0 + 1e-3));
            assert!((volume(x).unwrap() - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-9);
            let bc = barycenter(x).unwrap();
            assert!(bc.iter().all(|v| v.abs() < 1e-9));
        }
        let d = random_corpus(&b, 6, 0.3, 5, 12).unwrap();
        assert_ne!(a[0].coeffs, d[0].coeffs);
    }
}

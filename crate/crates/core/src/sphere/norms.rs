use super::HarmonicBasis;
use crate::linalg::Vec3;
use crate::{Error, Result};

/// Spectral Sobolev norm `(Σ (1 + l(l+N-2))^s c²)^{1/2}` for `s ∈ [-1, 1]`.
pub fn sobolev_norm(coeffs: &[f64], s: f64, basis: &HarmonicBasis) -> Result<f64> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("sobolev exponent {s} outside [-1, 1]")));
    }
    if coeffs.len() != basis.len() {
        return Err(Error::LengthMismatch { expected: basis.len(), got: coeffs.len() });
    }
    let sum: f64 = coeffs
        .iter()
        .zip(basis.eigenvalues())
        .map(|(c, ev)| (1.0 + ev).powf(s) * c * c)
        .sum();
    Ok(sum.sqrt())
}

fn geodesic(a: &Vec3, b: &Vec3) -> f64 {
    let d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    d.clamp(-1.0, 1.0).acos()
}

/// Discrete Hölder seminorm `max |h(x) - h(y)| / d(x, y)^α` over sample
/// pairs, with `d` the geodesic distance on the sphere.
pub fn holder_seminorm(points: &[Vec3], values: &[f64], alpha: f64) -> Result<f64> {
    holder_generic(points, values, alpha, |a, b| (a - b).abs())
}

/// Vector-valued variant, used on tangential gradients for the `C^{1,α}`
/// seminorm.
pub fn holder_seminorm_vec(points: &[Vec3], values: &[Vec3], alpha: f64) -> Result<f64> {
    holder_generic(points, values, alpha, |a, b| {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    })
}

fn holder_generic<T, F: Fn(&T, &T) -> f64>(points: &[Vec3], values: &[T], alpha: f64, diff: F) -> Result<f64> {
    if points.len() != values.len() {
        return Err(Error::LengthMismatch { expected: points.len(), got: values.len() });
    }
    if points.len() < 2 {
        return Err(Error::InvalidArgument("holder seminorm needs at least 2 samples".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("holder exponent {alpha} outside (0, 1]")));
    }
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = geodesic(&points[i], &points[j]);
            if d > 1e-14 {
                best = best.max(diff(&values[i], &values[j]) / d.powf(alpha));
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(n: usize, span: f64, closed: bool) -> Vec<Vec3> {
        let den = if closed { n as f64 } else { (n - 1) as f64 };
        (0..n)
            .map(|i| {
                let t = span * i as f64 / den;
                [t.cos(), t.sin(), 0.0]
            })
            .collect()
    }

    #[test]
    fn sobolev_examples() {
        let b = HarmonicBasis::new(2, 4).unwrap();
        let mut c = vec![0.0; b.len()];
        c[0] = 1.0;
        assert!((sobolev_norm(&c, 1.0, &b).unwrap() - 1.0).abs() < 1e-15);
        let mut c = vec![0.0; b.len()];
        c[4] = 1.0; // cos(2θ)/√π
        assert!((sobolev_norm(&c, 1.0, &b).unwrap() - 5f64.sqrt()).abs() < 1e-14);
        assert_eq!(sobolev_norm(&vec![0.0; b.len()], 0.5, &b).unwrap(), 0.0);
        assert!(sobolev_norm(&c, 1.5, &b).is_err());
        assert!(sobolev_norm(&c[..3], 0.0, &b).is_err());
    }

    #[test]
    fn holder_examples() {
        let pts = circle(256, 2.0 * PI, true);
        assert_eq!(holder_seminorm(&pts, &vec![3.0; 256], 0.5).unwrap(), 0.0);

        let half = circle(200, PI, false);
        let theta: Vec<f64> = (0..200).map(|i| PI * i as f64 / 199.0).collect();
        assert!((holder_seminorm(&half, &theta, 1.0).unwrap() - 1.0).abs() < 1e-9);

        let eps = 0.1;
        let vals: Vec<f64> = (0..256).map(|i| eps * (2.0 * 2.0 * PI * i as f64 / 256.0).cos()).collect();
        let h = holder_seminorm(&pts, &vals, 1.0).unwrap();
        assert!((h - 2.0 * eps).abs() < 0.05 * 2.0 * eps, "{h}");
        assert!(holder_seminorm(&pts[..1], &vals[..1], 1.0).is_err());
    }
}

use super::RadialShape;
use crate::sphere::{gauss_legendre, HarmonicBasis};
use crate::{Error, Result};
use std::f64::consts::PI;

fn same_dim(a: &RadialShape, b: &RadialShape) -> Result<usize> {
    if a.dim != b.dim {
        return Err(Error::InvalidArgument(format!("dimension mismatch {} vs {}", a.dim, b.dim)));
    }
    Ok(a.dim)
}

/// `|A Δ B| = (1/N) ∫ |ρ_a^N − ρ_b^N| dσ` for bodies star-shaped about the origin.
///
/// In 2D the integrand is split at its sign changes and each piece is
/// integrated with Gauss–Legendre; in 3D a refined product rule is used.
pub fn symmetric_difference(a: &RadialShape, b: &RadialShape) -> Result<f64> {
    let dim = same_dim(a, b)?;
    let n = dim as i32;
    if dim == 2 {
        let f = |t: f64| a.radius_at_angle(t).powi(2) - b.radius_at_angle(t).powi(2);
        let m = 16 * (2 * a.l_max().max(b.l_max()) + 1).max(64);
        let grid: Vec<f64> = (0..=m).map(|i| 2.0 * PI * i as f64 / m as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
        let mut cuts = vec![0.0];
        for i in 0..m {
            if vals[i] == 0.0 && i > 0 {
                cuts.push(grid[i]);
            } else if vals[i] * vals[i + 1] < 0.0 {
                let (mut lo, mut hi, flo) = (grid[i], grid[i + 1], vals[i]);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) * flo > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                cuts.push(0.5 * (lo + hi));
            }
        }
        cuts.push(2.0 * PI);
        let (xs, ws) = gauss_legendre(24);
        let mut total = 0.0;
        for win in cuts.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            // sub-panels keep the rule accurate on long smooth stretches
            let panels = (((hi - lo) / (2.0 * PI) * 32.0).ceil() as usize).max(1);
            let hp = (hi - lo) / panels as f64;
            for p in 0..panels {
                let (pl, ph) = (lo + p as f64 * hp, lo + (p + 1) as f64 * hp);
                let (c, r) = (0.5 * (pl + ph), 0.5 * (ph - pl));
                let s: f64 = xs.iter().zip(&ws).map(|(x, w)| w * f(c + r * x).abs()).sum();
                total += s * r;
            }
        }
        Ok(total / 2.0)
    } else {
        let order = 4 * a.basis.quad.order.max(b.basis.quad.order);
        let fine = HarmonicBasis::with_order(3, 0, order)?;
        let q = &fine.quad;
        let s: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| w * (a.eval_direction(x).0.powi(n) - b.eval_direction(x).0.powi(n)).abs())
            .sum();
        Ok(s / n as f64)
    }
}

fn dense_boundary(shape: &RadialShape, n_theta: usize) -> Vec<[f64; 3]> {
    if shape.dim == 2 {
        (0..n_theta)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n_theta as f64;
                let r = shape.radius_at_angle(t);
                [r * t.cos(), r * t.sin(), 0.0]
            })
            .collect()
    } else {
        let np = 2 * n_theta;
        let mut pts = Vec::with_capacity(n_theta * np + 2);
        for i in 0..=n_theta {
            let theta = PI * i as f64 / n_theta as f64;
            let count = if i == 0 || i == n_theta { 1 } else { np };
            for j in 0..count {
                let phi = 2.0 * PI * j as f64 / np as f64;
                let w = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                let r = shape.eval_direction(&w).0;
                pts.push([r * w[0], r * w[1], r * w[2]]);
            }
        }
        pts
    }
}

fn seg_dist(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = if l2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1], ap[2] - t * ab[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn directed(from: &[[f64; 3]], to: &[[f64; 3]], polyline: bool) -> f64 {
    let mut worst = 0.0f64;
    for p in from {
        let best = if polyline {
            (0..to.len()).map(|i| seg_dist(p, &to[i], &to[(i + 1) % to.len()])).fold(f64::INFINITY, f64::min)
        } else {
            to.iter()
                .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        };
        worst = worst.max(best);
    }
    worst
}

/// Hausdorff distance between the boundaries from dense boundary samples.
///
/// 2D distances are taken to the sampled polyline; 3D distances to the point
/// cloud, so the 3D value carries an error of order the sample spacing.
pub fn hausdorff_distance(a: &RadialShape, b: &RadialShape) -> Result<f64> {
    let dim = same_dim(a, b)?;
    let n = if dim == 2 { 2048 } else { 48 };
    let pa = dense_boundary(a, n);
    let pb = dense_boundary(b, n);
    let poly = dim == 2;
    Ok(directed(&pa, &pb, poly).max(directed(&pb, &pa, poly)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::shared_basis;

    #[test]
    fn symmetric_difference_examples() {
        let b = shared_basis(2, 8).unwrap();
        let ball = RadialShape::ball(b.clone());
        assert_eq!(symmetric_difference(&ball, &ball).unwrap(), 0.0);
        let big = RadialShape::constant(b.clone(), 0.2).unwrap();
        assert!((symmetric_difference(&ball, &big).unwrap() - 0.44 * PI).abs() < 1e-12);

        let s = RadialShape::from_modes(b, &[(2, 1, 0.1 * PI.sqrt())]).unwrap();
        let n = 200_000;
        let oracle: f64 = (0..n)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                ((1.0 + 0.1 * (2.0 * t).cos()).powi(2) - 1.0).abs()
            })
            .sum::<f64>()
            * PI
            / n as f64;
        assert!((symmetric_difference(&s, &ball).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn symmetric_difference_3d_dilation() {
        let b = shared_basis(3, 4).unwrap();
        let ball = RadialShape::ball(b.clone());
        let big = RadialShape::constant(b, 0.1).unwrap();
        let exact = (1.1f64.powi(3) - 1.0) * 4.0 * PI / 3.0;
        assert!((symmetric_difference(&ball, &big).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn hausdorff_examples() {
        let b = shared_basis(2, 8).unwrap();
        let ball = RadialShape::ball(b.clone());
        assert_eq!(hausdorff_distance(&ball, &ball).unwrap(), 0.0);
        let big = RadialShape::constant(b.clone(), 0.2).unwrap();
        assert!((hausdorff_distance(&ball, &big).unwrap() - 0.2).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05, 0.025, 0.0125] {
            let s = RadialShape::from_modes(b.clone(), &[(2, 1, eps * PI.sqrt())]).unwrap();
            let d = hausdorff_distance(&s, &ball).unwrap();
            assert!(d < prev);
            assert!(d <= eps + 1e-6);
            prev = d;
        }
        assert!(prev < 0.013);
    }
}

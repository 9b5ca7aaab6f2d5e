//! Star-shaped bodies `B_h = {t x (1 + h(x))}` encoded by the real harmonic
//! coefficients of `h`, with their geometric functionals.

mod convexity;
mod distance;
mod io;

pub use convexity::{convexity_check, ConvexityReport, CONVEXITY_TOL};
pub use distance::{hausdorff_distance, symmetric_difference};
pub use io::{read_shape, shape_from_str, shape_to_string, write_shape};

use crate::linalg::Vec3;
use crate::sphere::{self, holder_seminorm_vec, HarmonicBasis};
use crate::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Default harmonic truncation per dimension.
pub fn default_l_max(dim: usize) -> usize {
    if dim == 2 {
        24
    } else {
        12
    }
}

/// Process-wide cache of harmonic bases keyed by `(dim, l_max)`.
pub fn shared_basis(dim: usize, l_max: usize) -> Result<Arc<HarmonicBasis>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<HarmonicBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(&(dim, l_max)) {
        return Ok(b.clone());
    }
    let b = Arc::new(HarmonicBasis::new(dim, l_max)?);
    cache.lock().expect("basis cache poisoned").insert((dim, l_max), b.clone());
    Ok(b)
}

/// A star-shaped body with radius function `ρ = 1 + h`.
#[derive(Debug, Clone)]
pub struct RadialShape {
    pub dim: usize,
    pub coeffs: Vec<f64>,
    pub basis: Arc<HarmonicBasis>,
}

/// Which constraints [`normalize`] enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeMode {
    UnitVolume,
    ZeroBarycenter,
    Both,
}

impl RadialShape {
    /// Build a shape and check star-shapedness at the quadrature nodes.
    pub fn new(basis: Arc<HarmonicBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::LengthMismatch { expected: basis.len(), got: coeffs.len() });
        }
        let s = RadialShape { dim: basis.dim, coeffs, basis };
        s.check_star_shaped()?;
        Ok(s)
    }

    /// Same as [`RadialShape::new`] without the star-shapedness check.
    pub fn new_unchecked(basis: Arc<HarmonicBasis>, coeffs: Vec<f64>) -> Self {
        RadialShape { dim: basis.dim, coeffs, basis }
    }

    pub fn ball(basis: Arc<HarmonicBasis>) -> Self {
        let n = basis.len();
        Self::new_unchecked(basis, vec![0.0; n])
    }

    /// `h = Σ value · Y_(l,m)` over the listed modes.
    pub fn from_modes(basis: Arc<HarmonicBasis>, modes: &[(usize, i64, f64)]) -> Result<Self> {
        let mut c = vec![0.0; basis.len()];
        for &(l, m, v) in modes {
            c[basis.mode_to_index(l, m)?] += v;
        }
        Self::new(basis, c)
    }

    /// `h ≡ c`.
    pub fn constant(basis: Arc<HarmonicBasis>, c: f64) -> Result<Self> {
        let mut coeffs = vec![0.0; basis.len()];
        coeffs[0] = c * basis.constant_coefficient();
        Self::new(basis, coeffs)
    }

    /// L² projection of a radius function `ρ(ω)` onto the basis.
    pub fn from_radius_fn<F: Fn(&Vec3) -> f64>(basis: Arc<HarmonicBasis>, rho: F) -> Result<Self> {
        let coeffs = basis.project(|w| rho(w) - 1.0);
        Self::new(basis, coeffs)
    }

    pub fn l_max(&self) -> usize {
        self.basis.l_max
    }

    pub fn check_star_shaped(&self) -> Result<()> {
        let m = self.min_radius();
        if m > 0.0 && m.is_finite() {
            Ok(())
        } else {
            Err(Error::NotStarShaped { min_radius: m })
        }
    }

    pub fn min_radius(&self) -> f64 {
        self.radius_at_nodes().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn h_at_nodes(&self) -> Vec<f64> {
        self.basis.synthesize(&self.coeffs)
    }

    pub fn radius_at_nodes(&self) -> Vec<f64> {
        self.h_at_nodes().into_iter().map(|h| 1.0 + h).collect()
    }

    pub fn grad_at_nodes(&self) -> Vec<Vec3> {
        self.basis.synthesize_gradient(&self.coeffs)
    }

    /// `ρ` and `∇_τρ` at an arbitrary unit vector.
    pub fn eval_direction(&self, omega: &Vec3) -> (f64, Vec3) {
        let (vals, grads) = self.basis.eval_direction(omega);
        let mut r = 1.0;
        let mut g = [0.0; 3];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                r += c * vals[k];
                for d in 0..3 {
                    g[d] += c * grads[k][d];
                }
            }
        }
        (r, g)
    }

    /// `[ρ, ρ_θ, ρ_φ, ρ_θθ, ρ_θφ, ρ_φφ]` at angles `(θ, φ)`.
    pub fn eval_angles(&self, theta: f64, phi: f64) -> [f64; 6] {
        let ev = self.basis.eval_angles(theta, phi);
        let mut out = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                for d in 0..6 {
                    out[d] += c * ev[k][d];
                }
            }
        }
        out
    }

    /// Radius along the direction with polar angle `θ` (2D).
    pub fn radius_at_angle(&self, theta: f64) -> f64 {
        self.eval_angles(theta, 0.0)[0]
    }

    /// The body `B_{t h}`.
    pub fn scaled(&self, t: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * t).collect();
        Self::new_unchecked(self.basis.clone(), coeffs)
    }

    /// The dilation `ρ ↦ s ρ`.
    pub fn dilated(&self, s: f64) -> Self {
        let mut coeffs: Vec<f64> = self.coeffs.iter().map(|c| c * s).collect();
        coeffs[0] += (s - 1.0) * self.basis.constant_coefficient();
        Self::new_unchecked(self.basis.clone(), coeffs)
    }

    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        Self::new_unchecked(self.basis.clone(), coeffs)
    }

    /// `max |h|` at the quadrature nodes.
    pub fn linf_norm(&self) -> f64 {
        self.h_at_nodes().into_iter().fold(0.0, |m, h| m.max(h.abs()))
    }

    /// `max(|h|, |∇_τh|)` at the quadrature nodes.
    pub fn w1inf_norm(&self) -> f64 {
        let g = self.grad_at_nodes();
        let gm = g.iter().map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()).fold(0.0, f64::max);
        self.linf_norm().max(gm)
    }

    /// `C^{0,α}` seminorm of `∇_τh` at the quadrature nodes, a proxy for the
    /// `C^{1,α}` regularity of the boundary.
    pub fn holder_diagnostic(&self, alpha: f64) -> Result<f64> {
        holder_seminorm_vec(&self.basis.quad.nodes, &self.grad_at_nodes(), alpha)
    }

    /// `∫_{∂B} h dσ`.
    pub fn mean_integral(&self) -> f64 {
        self.coeffs[0] * self.basis.constant_coefficient()
    }

    /// `∫ h²`, `∫ |∇_τ h|²` from the spectrum.
    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn grad_l2_sq(&self) -> f64 {
        self.coeffs.iter().zip(self.basis.eigenvalues()).map(|(c, e)| e * c * c).sum()
    }

    pub fn h1_sq(&self) -> f64 {
        self.l2_sq() + self.grad_l2_sq()
    }
}

/// `(1/N) ∫ ρ^N dσ`.
pub fn volume(shape: &RadialShape) -> Result<f64> {
    shape.check_star_shaped()?;
    Ok(volume_unchecked(shape))
}

fn volume_unchecked(shape: &RadialShape) -> f64 {
    let n = shape.dim as i32;
    shape.basis.quad.integrate(&shape.radius_at_nodes().iter().map(|r| r.powi(n)).collect::<Vec<_>>()) / n as f64
}

/// `∫ ρ^{N-2} √(ρ² + |∇_τρ|²) dσ`.
pub fn perimeter(shape: &RadialShape) -> Result<f64> {
    shape.check_star_shaped()?;
    let r = shape.radius_at_nodes();
    let g = shape.grad_at_nodes();
    let n = shape.dim as i32;
    let f: Vec<f64> = r
        .iter()
        .zip(&g)
        .map(|(r, g)| r.powi(n - 2) * (r * r + g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt())
        .collect();
    Ok(shape.basis.quad.integrate(&f))
}

/// Gradient of [`perimeter`] with respect to the coefficients.
pub fn perimeter_gradient(shape: &RadialShape) -> Result<Vec<f64>> {
    shape.check_star_shaped()?;
    let b = &shape.basis;
    let r = shape.radius_at_nodes();
    let g = shape.grad_at_nodes();
    let n = shape.dim as i32;
    let w = &b.quad.weights;
    // integrand = ρ^{N-2} S with S = √(ρ² + |∇ρ|²)
    let mut a = Vec::with_capacity(r.len()); // factor multiplying Y_k
    let mut c = Vec::with_capacity(r.len()); // factor multiplying ∇Y_k
    for q in 0..r.len() {
        let gg = g[q][0] * g[q][0] + g[q][1] * g[q][1] + g[q][2] * g[q][2];
        let s = (r[q] * r[q] + gg).sqrt();
        let p = r[q].powi(n - 2);
        let dp = if n > 2 { (n - 2) as f64 * r[q].powi(n - 3) } else { 0.0 };
        a.push(w[q] * (dp * s + p * r[q] / s));
        c.push(w[q] * p / s);
    }
    Ok((0..b.len())
        .map(|k| {
            let yv = b.values(k);
            let yg = b.gradients(k);
            (0..r.len())
                .map(|q| a[q] * yv[q] + c[q] * (g[q][0] * yg[q][0] + g[q][1] * yg[q][1] + g[q][2] * yg[q][2]))
                .sum()
        })
        .collect())
}

/// Gradient of [`volume`] with respect to the coefficients: `∫ ρ^{N-1} Y_k`.
pub fn volume_gradient(shape: &RadialShape) -> Vec<f64> {
    let b = &shape.basis;
    let n = shape.dim as i32;
    let f: Vec<f64> = shape
        .radius_at_nodes()
        .iter()
        .zip(&b.quad.weights)
        .map(|(r, w)| w * r.powi(n - 1))
        .collect();
    (0..b.len()).map(|k| b.values(k).iter().zip(&f).map(|(y, f)| y * f).sum()).collect()
}

/// `(1 / ((N+1)|B_h|)) ∫ x ρ^{N+1} dσ`.
pub fn barycenter(shape: &RadialShape) -> Result<Vec3> {
    let vol = volume(shape)?;
    let n = shape.dim as i32;
    let q = &shape.basis.quad;
    let mut out = [0.0; 3];
    for ((x, w), r) in q.nodes.iter().zip(&q.weights).zip(shape.radius_at_nodes()) {
        let f = w * r.powi(n + 1);
        for d in 0..3 {
            out[d] += f * x[d];
        }
    }
    let s = 1.0 / ((n + 1) as f64 * vol);
    Ok([out[0] * s, out[1] * s, out[2] * s])
}

/// Enforce `|B_h| = |B|` and/or a vanishing barycenter.
///
/// Dilation first, then the barycenter is removed through the `l = 1` modes
/// (a first-order translation); the pair is iterated to a fixed point.
pub fn normalize(shape: &RadialShape, mode: NormalizeMode) -> Result<RadialShape> {
    const TOL: f64 = 1e-10;
    const MAX_IT: usize = 50;
    shape.check_star_shaped()?;
    let target = sphere::ball_volume(shape.dim);
    let dilate = |s: &RadialShape| -> Result<RadialShape> {
        let v = volume(s)?;
        Ok(s.dilated((target / v).powf(1.0 / s.dim as f64)))
    };
    match mode {
        NormalizeMode::UnitVolume => return dilate(shape),
        NormalizeMode::ZeroBarycenter | NormalizeMode::Both => {}
    }
    let coord = shape.basis.coordinate_coefficient();
    let mut cur = shape.clone();
    for _ in 0..MAX_IT {
        if mode == NormalizeMode::Both {
            cur = dilate(&cur)?;
        }
        let b = barycenter(&cur)?;
        let bn = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        let vol_ok = mode != NormalizeMode::Both || (volume(&cur)? / target - 1.0).abs() <= TOL;
        if bn <= TOL && vol_ok {
            return Ok(cur);
        }
        for j in 0..cur.dim {
            let k = cur.basis.coordinate_index(j);
            cur.coeffs[k] -= b[j] * coord;
        }
        cur.check_star_shaped()?;
    }
    Err(Error::NoConvergence { what: "normalize".into(), iterations: MAX_IT })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn b2() -> Arc<HarmonicBasis> {
        shared_basis(2, 12).unwrap()
    }

    fn b3() -> Arc<HarmonicBasis> {
        shared_basis(3, 8).unwrap()
    }

    #[test]
    fn volume_examples() {
        assert!((volume(&RadialShape::ball(b2())).unwrap() - PI).abs() < 1e-13);
        let s = RadialShape::constant(b2(), 0.1).unwrap();
        assert!((volume(&s).unwrap() - 1.21 * PI).abs() < 1e-12);
        let s = RadialShape::constant(b3(), 0.2).unwrap();
        assert!((volume(&s).unwrap() - 1.2f64.powi(3) * 4.0 * PI / 3.0).abs() < 1e-12);
        let bad = RadialShape::constant(b2(), -1.5);
        assert!(bad.is_err());
    }

    #[test]
    fn perimeter_of_balls() {
        assert!((perimeter(&RadialShape::ball(b2())).unwrap() - 2.0 * PI).abs() < 1e-13);
        assert!((perimeter(&RadialShape::ball(b3())).unwrap() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn perimeter_matches_simpson() {
        let s = RadialShape::from_modes(b2(), &[(2, 1, 0.1 * PI.sqrt())]).unwrap();
        let n = 100_000;
        let f = |t: f64| {
            let r = 1.0 + 0.1 * (2.0 * t).cos();
            let dr = -0.2 * (2.0 * t).sin();
            (r * r + dr * dr).sqrt()
        };
        let hstep = 2.0 * PI / n as f64;
        let mut acc = f(0.0) + f(2.0 * PI);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * hstep);
        }
        let oracle = acc * hstep / 3.0;
        assert!((perimeter(&s).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for basis in [b2(), b3()] {
            let mut c = vec![0.0; basis.len()];
            for (k, ci) in c.iter_mut().enumerate().skip(1).take(8) {
                *ci = 0.03 * ((k * 7 % 5) as f64 - 2.0);
            }
            let s = RadialShape::new(basis.clone(), c).unwrap();
            let gp = perimeter_gradient(&s).unwrap();
            let gv = volume_gradient(&s);
            let d = 1e-6;
            for k in 0..basis.len().min(12) {
                let mut up = s.clone();
                up.coeffs[k] += d;
                let mut dn = s.clone();
                dn.coeffs[k] -= d;
                let fp = (perimeter(&up).unwrap() - perimeter(&dn).unwrap()) / (2.0 * d);
                let fv = (volume(&up).unwrap() - volume(&dn).unwrap()) / (2.0 * d);
                assert!((fp - gp[k]).abs() < 1e-7, "P k={k}: {fp} vs {}", gp[k]);
                assert!((fv - gv[k]).abs() < 1e-7, "V k={k}");
            }
        }
    }

    #[test]
    fn barycenter_examples() {
        let z = barycenter(&RadialShape::ball(b3())).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-14));
        let even = RadialShape::from_modes(b3(), &[(2, 1, 0.1), (4, -3, 0.05)]).unwrap();
        assert!(barycenter(&even).unwrap().iter().all(|v| v.abs() < 1e-10));

        // a disk shifted by δ along e1 has radius ρ(θ) = δcosθ + √(1 - δ²sin²θ)
        let delta = 1e-3;
        let shifted = RadialShape::from_radius_fn(b2(), |w| {
            delta * w[0] + (1.0 - delta * delta * w[1] * w[1]).sqrt()
        })
        .unwrap();
        let bc = barycenter(&shifted).unwrap();
        assert!((bc[0] - delta).abs() < 1e-5, "{bc:?}");
        assert!(bc[1].abs() < 1e-10);
    }

    #[test]
    fn normalize_examples() {
        let s = RadialShape::constant(b2(), 0.1).unwrap();
        let n = normalize(&s, NormalizeMode::UnitVolume).unwrap();
        assert!(n.coeffs.iter().all(|c| c.abs() < 1e-12));

        for basis in [b2(), b3()] {
            let dim = basis.dim;
            let eps = 0.05;
            let m = if dim == 2 { 1 } else { 0 };
            let s = RadialShape::from_modes(basis.clone(), &[(2, m, eps)]).unwrap();
            let n = normalize(&s, NormalizeMode::Both).unwrap();
            let vol = volume(&n).unwrap();
            assert!((vol - sphere::ball_volume(dim)).abs() < 1e-10 * vol);
            // second-order shift of the mean mode: c0 ≈ -(N-1) ε² / (2√σ)
            let predicted = -((dim - 1) as f64) * eps * eps / (2.0 * basis.constant_coefficient());
            assert!((n.coeffs[0] - predicted).abs() < 0.05 * predicted.abs(), "{} vs {predicted}", n.coeffs[0]);
            let again = normalize(&n, NormalizeMode::Both).unwrap();
            for (a, b) in again.coeffs.iter().zip(&n.coeffs) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalize_removes_barycenter() {
        let s = RadialShape::from_modes(b3(), &[(1, 1, 0.05), (2, 0, 0.1), (3, 2, 0.04)]).unwrap();
        let n = normalize(&s, NormalizeMode::Both).unwrap();
        let bc = barycenter(&n).unwrap();
        assert!(bc.iter().all(|v| v.abs() < 1e-10), "{bc:?}");
        assert!((volume(&n).unwrap() - 4.0 * PI / 3.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_norms() {
        let s = RadialShape::from_modes(b2(), &[(3, -1, 0.2)]).unwrap();
        assert!((s.l2_sq() - 0.04).abs() < 1e-15);
        assert!((s.grad_l2_sq() - 0.36).abs() < 1e-14);
        let g = s.grad_at_nodes();
        let quad: f64 = g.iter().zip(&s.basis.quad.weights).map(|(g, w)| w * (g[0] * g[0] + g[1] * g[1])).sum();
        assert!((quad - 0.36).abs() < 1e-12);
    }
}

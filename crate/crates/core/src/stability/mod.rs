//! Second-order analysis of `P` and `λ₁` at the ball.
//!
//! Quadratic forms are taken along volume-normalized paths
//! `ε ↦ normalize(B_{εh})`. Mode values use the `L²`-normalized harmonic
//! `Y_l` (2D: `cos(lθ)/√π`, 3D: `Y_{l,0}`) on the ball of radius one;
//! thresholds are rescaled to unit volume.

use crate::capacity;
use crate::fem::{self, lambda_second_derivative_boundary, lambda_second_derivative_volumetric, BallMesh};
use crate::par::{self, Execution};
use crate::shape::{normalize, perimeter, shared_basis, NormalizeMode, RadialShape};
use crate::sphere::{ball_volume, bessel_first_zero, bessel_j, sobolev_norm, sphere_area};
use crate::{Error, Result};
use serde::Serialize;

/// Central-difference steps, coarse to fine; one Richardson level between
/// consecutive pairs.
pub const FD_STEPS: [f64; 4] = [4e-2, 2e-2, 1e-2, 5e-3];

/// `c*` from the Bessel zero: `N(N+1)p_N / (4 l_N (l_N − N) ω_N^{(N+1)/N})`.
pub fn c_star_formula(dim: usize) -> Result<f64> {
    let l = fem::ball_eigenvalue(dim)?;
    let n = dim as f64;
    let p = sphere_area(dim);
    let w = ball_volume(dim);
    Ok(n * (n + 1.0) * p / (4.0 * l * (l - n) * w.powf((n + 1.0) / n)))
}

/// Constant `(√π j₀₁² (J₁(j₀₁)⁻² − 1))⁻¹` implied by the Payne–Weinberger
/// inequality in the plane.
pub fn payne_weinberger_constant() -> Result<f64> {
    let j = bessel_first_zero(0.0)?;
    let j1 = bessel_j(1.0, j);
    Ok(1.0 / (std::f64::consts::PI.sqrt() * j * j * (1.0 / (j1 * j1) - 1.0)))
}

/// Factor turning a threshold on the radius-one ball into one on the
/// unit-volume ball.
fn unit_volume_factor(dim: usize) -> f64 {
    let n = dim as f64;
    ball_volume(dim).powf(-(n + 1.0) / n)
}

/// Unit `L²` harmonic of degree `l` used as the mode direction.
pub fn mode_direction(dim: usize, l: usize) -> Result<RadialShape> {
    let basis = shared_basis(dim, direction_l_max(dim, l))?;
    let m = if dim == 2 && l > 0 { 1 } else { 0 };
    let k = basis.mode_to_index(l, m)?;
    let mut c = vec![0.0; basis.len()];
    c[k] = 1.0;
    Ok(RadialShape::new_unchecked(basis, c))
}

/// Basis size for a degree-`l` direction: enough quadrature for the
/// nonpolynomial perimeter integrand along the path.
fn direction_l_max(dim: usize, l: usize) -> usize {
    if dim == 2 {
        (3 * l).max(12)
    } else {
        (2 * l).max(8)
    }
}

/// `normalize(B_{εh}, Both)`.
pub fn normalized_point(direction: &RadialShape, eps: f64) -> Result<RadialShape> {
    let s = RadialShape::new(direction.basis.clone(), direction.coeffs.iter().map(|c| eps * c).collect())?;
    normalize(&s, NormalizeMode::Both)
}

/// Richardson-extrapolated central second difference at 0 over
/// [`FD_STEPS`]. Returns `(estimate, spread of the last two extrapolants)`.
fn richardson_second<F>(f: F, exec: Execution) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let mut pts = vec![0.0];
    for e in FD_STEPS {
        pts.push(e);
        pts.push(-e);
    }
    let vals: Vec<f64> = par::map_slice(exec, &pts, |&e| f(e)).into_iter().collect::<Result<_>>()?;
    let f0 = vals[0];
    let d: Vec<f64> = FD_STEPS
        .iter()
        .enumerate()
        .map(|(i, e)| (vals[1 + 2 * i] - 2.0 * f0 + vals[2 + 2 * i]) / (e * e))
        .collect();
    let r: Vec<f64> = d.windows(2).map(|w| (4.0 * w[1] - w[0]) / 3.0).collect();
    let n = r.len();
    Ok((r[n - 1], (r[n - 1] - r[n - 2]).abs()))
}

/// Second derivative of `P` along `ε ↦ B_{εh}` (`normalized = false`) or
/// `ε ↦ normalize(B_{εh})`.
pub fn perimeter_path_second_derivative(direction: &RadialShape, normalized: bool) -> Result<f64> {
    let f = |e: f64| -> Result<f64> {
        if normalized {
            perimeter(&normalized_point(direction, e)?)
        } else {
            perimeter(&RadialShape::new(direction.basis.clone(), direction.coeffs.iter().map(|c| e * c).collect())?)
        }
    };
    let (est, spread) = richardson_second(f, Execution::Sequential)?;
    if spread > 1e-6 * (1.0 + est.abs()) {
        return Err(Error::NoConvergence { what: format!("Richardson extrapolation of P″ (spread {spread:.2e})"), iterations: FD_STEPS.len() });
    }
    Ok(est)
}

/// `P″_l` along the normalized path in the direction [`mode_direction`].
pub fn perimeter_second_form(l: usize, dim: usize) -> Result<f64> {
    perimeter_path_second_derivative(&mode_direction(dim, l)?, true)
}

/// `λ₁″` at the ball in one direction, from both formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaSecondForm {
    /// discrete `λ₁(B)`
    pub lambda: f64,
    /// `λ′` along the raw path
    pub first: f64,
    pub raw_boundary: f64,
    pub raw_volumetric: f64,
    /// normalized-path value from the boundary formula
    pub boundary: f64,
    /// normalized-path value from the volumetric formula
    pub volumetric: f64,
}

impl LambdaSecondForm {
    /// Relative gap between the two formulas on the raw path. The
    /// normalization correction is shared, and after it modes 0 and 1
    /// vanish, so comparing normalized values would only compare noise.
    pub fn relative_disagreement(&self) -> f64 {
        let scale = self.raw_boundary.abs().max(self.raw_volumetric.abs());
        if scale == 0.0 {
            return 0.0;
        }
        (self.raw_boundary - self.raw_volumetric).abs() / scale
    }
}

/// Turn raw-path derivatives into the volume-normalized ones:
/// `λ_n = λ_r / s²` with `s = (|B|/V)^{1/N}`.
fn normalize_second(direction: &RadialShape, lambda: f64, first: f64, second: f64) -> f64 {
    let dim = direction.dim;
    let n = dim as f64;
    let q = &direction.basis.quad;
    let h = direction.basis.synthesize(&direction.coeffs);
    let v1 = q.integrate(&h);
    let v2 = (n - 1.0) * q.integrate(&h.iter().map(|x| x * x).collect::<Vec<_>>());
    let b = ball_volume(dim);
    let s1 = -v1 / (n * b);
    let s2 = -v2 / (n * b) + (n + 1.0) * v1 * v1 / (n * n * b * b);
    second - 4.0 * first * s1 + lambda * (6.0 * s1 * s1 - 2.0 * s2)
}

/// `λ₁″` along `ε ↦ normalize(B_{εh})` by the boundary and volumetric
/// formulas. Fails if they disagree by more than 5%.
pub fn lambda_second_form_direction(direction: &RadialShape, mesh: &BallMesh) -> Result<LambdaSecondForm> {
    let bd = lambda_second_derivative_boundary(direction, mesh)?;
    let vol = lambda_second_derivative_volumetric(direction, mesh)?;
    let form = LambdaSecondForm {
        lambda: vol.lambda,
        first: vol.first,
        raw_boundary: bd.second,
        raw_volumetric: vol.second,
        boundary: normalize_second(direction, bd.lambda, bd.first, bd.second),
        volumetric: normalize_second(direction, vol.lambda, vol.first, vol.second),
    };
    let dis = form.relative_disagreement();
    if dis > 0.05 {
        return Err(Error::FormulaMismatch(format!(
            "boundary {:.6} vs volumetric {:.6} ({:.1}%)",
            form.raw_boundary,
            form.raw_volumetric,
            100.0 * dis
        )));
    }
    Ok(form)
}

/// [`lambda_second_form_direction`] for the degree-`l` mode.
pub fn lambda_second_form(l: usize, mesh: &BallMesh) -> Result<LambdaSecondForm> {
    lambda_second_form_direction(&mode_direction(mesh.dim, l)?, mesh)
}

/// Richardson finite-difference value of `λ₁″` along the normalized path.
pub fn lambda_second_form_fd(direction: &RadialShape, mesh: &BallMesh) -> Result<f64> {
    let f = |e: f64| -> Result<f64> { Ok(fem::lambda1_with(&normalized_point(direction, e)?, mesh, Execution::Sequential)?.lambda) };
    Ok(richardson_second(f, par::default_execution())?.0)
}

/// One row of a [`ModeSpectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeEntry {
    pub l: usize,
    pub p_second: f64,
    pub lambda_second: f64,
    pub lambda_second_volumetric: f64,
    /// `P″_l / Λ″_l` rescaled to unit volume, for `l ≥ 2`
    pub threshold: Option<f64>,
}

/// Per-mode second derivatives of `P` and `λ₁` at the ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub dim: usize,
    pub lambda: f64,
    pub modes: Vec<ModeEntry>,
}

impl ModeSpectrum {
    /// `(min_{l≥2} c_l, argmin)`.
    pub fn c_star(&self) -> Option<(f64, usize)> {
        self.modes
            .iter()
            .filter_map(|m| m.threshold.map(|c| (c, m.l)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }
}

/// Mode table for `l = 0..=l_max`; `Λ″_l` from the boundary formula.
pub fn mode_spectrum(mesh: &BallMesh, l_max: usize) -> Result<ModeSpectrum> {
    let dim = mesh.dim;
    let scale = unit_volume_factor(dim);
    let ls: Vec<usize> = (0..=l_max).collect();
    let ps = par::map_slice(par::default_execution(), &ls, |&l| perimeter_second_form(l, dim));
    let mut modes = Vec::with_capacity(ls.len());
    let mut lambda = 0.0;
    for (&l, p) in ls.iter().zip(ps) {
        let p = p?;
        let f = lambda_second_form(l, mesh)?;
        lambda = f.lambda;
        let threshold = if l >= 2 {
            if f.boundary <= 0.0 {
                return Err(Error::FormulaMismatch(format!("Λ″_{l} = {} is not positive", f.boundary)));
            }
            Some(scale * p / f.boundary)
        } else {
            None
        };
        modes.push(ModeEntry { l, p_second: p, lambda_second: f.boundary, lambda_second_volumetric: f.volumetric, threshold });
    }
    Ok(ModeSpectrum { dim, lambda, modes })
}

/// Result of [`sharp_threshold`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpThreshold {
    pub c_star_formula: f64,
    pub c_star_modewise: f64,
    pub argmin_mode: usize,
    pub spectrum: ModeSpectrum,
}

impl SharpThreshold {
    pub fn relative_gap(&self) -> f64 {
        (self.c_star_modewise - self.c_star_formula).abs() / self.c_star_formula
    }
}

/// `c*` from the closed form and as `min_l c_l` over the mode table.
pub fn sharp_threshold(mesh: &BallMesh, l_max: usize) -> Result<SharpThreshold> {
    if l_max < 2 {
        return Err(Error::InvalidArgument("sharp_threshold needs l_max ≥ 2".into()));
    }
    let spectrum = mode_spectrum(mesh, l_max)?;
    let (c, l) = spectrum.c_star().ok_or_else(|| Error::Internal("empty mode table".into()))?;
    Ok(SharpThreshold { c_star_formula: c_star_formula(mesh.dim)?, c_star_modewise: c, argmin_mode: l, spectrum })
}

/// Functional evaluated along remainder ladders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Functional {
    Perimeter,
    Lambda1,
    /// `P − cλ₁` on the unit-volume rescaling
    Jc(f64),
    /// `1/Cap` with the given number of Riesz points
    InverseCapacity(usize),
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::Perimeter => "P".into(),
            Functional::Lambda1 => "lambda1".into(),
            Functional::Jc(c) => format!("J_c(c={c})"),
            Functional::InverseCapacity(_) => "inv_cap".into(),
        }
    }
}

/// `P(K̂) − cλ₁(K̂)` with `K̂` the unit-volume rescaling of `K`, from
/// values of `P`, `λ₁` on a body of volume `|B|`.
pub fn jc_unit_volume(p: f64, lambda: f64, c: f64, dim: usize) -> f64 {
    let n = dim as f64;
    let w = ball_volume(dim);
    p * w.powf(-(n - 1.0) / n) - c * lambda * w.powf(2.0 / n)
}

/// Remainder of the second-order model along a normalized path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderLadder {
    pub functional: String,
    pub direction: Vec<f64>,
    pub base: f64,
    /// second derivative used in the model (first derivative vanishes)
    pub second: f64,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub model: Vec<f64>,
    pub remainders: Vec<f64>,
    /// least-squares slope of `log|remainder|` against `log ε`
    pub slope: f64,
    /// `max |remainder| / ε²`
    pub max_ratio: f64,
}

impl RemainderLadder {
    /// `F(normalize(B_{εh})) − F(B)` at each grid point.
    pub fn increments(&self) -> Vec<f64> {
        self.values.iter().map(|v| v - self.base).collect()
    }
}

/// Project out degrees `≤ 1` and scale to unit `H¹` norm.
pub fn ladder_direction(h: &RadialShape) -> Result<RadialShape> {
    let mut c = h.coeffs.clone();
    for (k, x) in c.iter_mut().enumerate() {
        if h.basis.degree(k) <= 1 {
            *x = 0.0;
        }
    }
    let n = sobolev_norm(&c, 1.0, &h.basis)?;
    if n == 0.0 {
        return Err(Error::InvalidArgument("ladder direction has no content of degree ≥ 2".into()));
    }
    c.iter_mut().for_each(|x| *x /= n);
    Ok(RadialShape::new_unchecked(h.basis.clone(), c))
}

fn log_slope(eps: &[f64], r: &[f64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = r.iter().map(|r| r.abs().max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Second-order remainder ladder of `functional` along
/// `ε ↦ normalize(B_{εh})`, `h` = [`ladder_direction`].
///
/// The model's `F″` is the discrete-exact one: the volumetric formula for
/// `λ₁` and the Richardson value for `P`. For `Cap⁻¹` no second-order form
/// is available and the model is the constant `F(B)`; only the bound
/// `|remainder| ≤ C ε²` is meaningful there.
pub fn fuglede_remainder(functional: Functional, h: &RadialShape, eps_grid: &[f64], mesh: Option<&BallMesh>) -> Result<RemainderLadder> {
    if eps_grid.len() < 4 {
        return Err(Error::InvalidArgument(format!("remainder ladder needs at least 4 points, got {}", eps_grid.len())));
    }
    if eps_grid.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidArgument("ladder steps must be positive".into()));
    }
    let dir = ladder_direction(h)?;
    let dim = dir.dim;
    let need_mesh = || mesh.ok_or_else(|| Error::InvalidArgument(format!("{} needs a mesh", functional.name())));
    let exec = par::default_execution();
    let (base, second, values): (f64, f64, Vec<f64>) = match functional {
        Functional::Perimeter => {
            let ball = RadialShape::ball(dir.basis.clone());
            let second = perimeter_path_second_derivative(&dir, true)?;
            let vals = par::map_slice(exec, eps_grid, |&e| perimeter(&normalized_point(&dir, e)?));
            (perimeter(&ball)?, second, vals.into_iter().collect::<Result<_>>()?)
        }
        Functional::Lambda1 | Functional::Jc(_) => {
            let mesh = need_mesh()?;
            let form = lambda_second_form_direction(&dir, mesh)?;
            let lam = par::map_slice(exec, eps_grid, |&e| -> Result<(f64, f64)> {
                let s = normalized_point(&dir, e)?;
                Ok((fem::lambda1_with(&s, mesh, Execution::Sequential)?.lambda, perimeter(&s)?))
            });
            let lam: Vec<(f64, f64)> = lam.into_iter().collect::<Result<_>>()?;
            match functional {
                Functional::Lambda1 => (form.lambda, form.volumetric, lam.iter().map(|x| x.0).collect()),
                Functional::Jc(c) => {
                    let ball = RadialShape::ball(dir.basis.clone());
                    let p2 = perimeter_path_second_derivative(&dir, true)?;
                    let base = jc_unit_volume(perimeter(&ball)?, form.lambda, c, dim);
                    let second = jc_unit_volume(p2, form.volumetric, c, dim);
                    (base, second, lam.iter().map(|&(l, p)| jc_unit_volume(p, l, c, dim)).collect())
                }
                _ => unreachable!(),
            }
        }
        Functional::InverseCapacity(n) => {
            if dim != 3 {
                return Err(Error::UnsupportedDimension(dim));
            }
            let ball = RadialShape::ball(dir.basis.clone());
            let cap = |s: &RadialShape| -> Result<f64> { Ok(1.0 / capacity::riesz_system(s, n, exec)?.capacity()) };
            let vals: Vec<f64> = eps_grid.iter().map(|&e| cap(&normalized_point(&dir, e)?)).collect::<Result<_>>()?;
            (cap(&ball)?, 0.0, vals)
        }
    };
    let model: Vec<f64> = eps_grid.iter().map(|e| base + 0.5 * e * e * second).collect();
    let remainders: Vec<f64> = values.iter().zip(&model).map(|(v, m)| v - m).collect();
    let slope = log_slope(eps_grid, &remainders);
    let max_ratio = remainders.iter().zip(eps_grid).map(|(r, e)| r.abs() / (e * e)).fold(0.0, f64::max);
    Ok(RemainderLadder {
        functional: functional.name(),
        direction: dir.coeffs.clone(),
        base,
        second,
        eps: eps_grid.to_vec(),
        values,
        model,
        remainders,
        slope,
        max_ratio,
    })
}

/// Result of [`ic_diagnostic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IcDiagnostic {
    /// `max_t |λ₁″(t) − λ₁″(0)|`
    pub sup: f64,
    /// `sup / ‖h‖²_{H^{1/2}}`
    pub ratio: f64,
    /// estimated size of eigenvalue noise in the second differences
    pub noise_floor: f64,
}

/// Relative accuracy assumed for converged eigenvalues: the Rayleigh
/// quotient error is quadratic in the eigenvector tolerance, so what is
/// left is assembly roundoff.
const LAMBDA_NOISE: f64 = 1e-12;

/// Step of the second difference quotients in [`ic_diagnostic`].
pub const IC_STEP: f64 = 0.1;

/// Continuity of `t ↦ λ₁″(B_{th})` measured by second difference quotients
/// of `λ₁` with step [`IC_STEP`].
pub fn ic_diagnostic(h: &RadialShape, t_grid: &[f64], mesh: &BallMesh) -> Result<IcDiagnostic> {
    let hn = sobolev_norm(&h.coeffs, 0.5, &h.basis)?;
    if hn == 0.0 {
        return Ok(IcDiagnostic { sup: 0.0, ratio: 0.0, noise_floor: 0.0 });
    }
    let d = IC_STEP;
    let mut ts = vec![-d, 0.0, d];
    for &t in t_grid {
        ts.extend([t - d, t, t + d]);
    }
    let lam: Vec<f64> = par::map_slice(par::default_execution(), &ts, |&t| -> Result<f64> {
        Ok(fem::lambda1_with(&h.scaled(t), mesh, Execution::Sequential)?.lambda)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let dd = |i: usize| (lam[3 * i] - 2.0 * lam[3 * i + 1] + lam[3 * i + 2]) / (d * d);
    let d0 = dd(0);
    let sup = (1..=t_grid.len()).map(|i| (dd(i) - d0).abs()).fold(0.0, f64::max);
    let noise_floor = 4.0 * LAMBDA_NOISE * lam[1] / (d * d);
    if sup > 0.0 && sup < 10.0 * noise_floor {
        return Err(Error::InvalidArgument(format!(
            "second differences ({sup:.2e}) are within the eigenvalue noise ({noise_floor:.2e})"
        )));
    }
    Ok(IcDiagnostic { sup, ratio: sup / (hn * hn), noise_floor })
}

/// Basis used by mode directions of degree `l`, exposed for callers that
/// need matching shapes.
pub fn mode_basis(dim: usize, l: usize) -> Result<std::sync::Arc<crate::sphere::HarmonicBasis>> {
    shared_basis(dim, direction_l_max(dim, l))
}

/// Ball of the given dimension on the mode basis for degree `l`.
pub fn mode_ball(dim: usize, l: usize) -> Result<RadialShape> {
    Ok(RadialShape::ball(mode_basis(dim, l)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn threshold_constants() {
        let c2 = c_star_formula(2).unwrap();
        assert!((c2 - 0.077).abs() < 1e-3, "{c2}");
        let j = bessel_first_zero(0.0).unwrap();
        assert!((c2 - 3.0 / (PI.sqrt() * j * j * (j * j - 2.0))).abs() < 1e-14);
        let c3 = c_star_formula(3).unwrap();
        let expect = 12.0 / (PI * (PI * PI - 3.0) * (4.0 * PI / 3.0).powf(4.0 / 3.0));
        assert!((c3 - expect).abs() < 1e-10, "{c3} {expect}");
        assert!((c3 - 0.0823).abs() < 1e-4);
        let pw = payne_weinberger_constant().unwrap();
        assert!((pw - 0.036).abs() < 5e-4 && pw < c2, "{pw}");
    }

    #[test]
    fn perimeter_forms() {
        // raw circle path along cos 2θ
        let b = shared_basis(2, 12).unwrap();
        let mut c = vec![0.0; b.len()];
        c[b.mode_to_index(2, 1).unwrap()] = PI.sqrt();
        let raw = perimeter_path_second_derivative(&RadialShape::new_unchecked(b, c), false).unwrap();
        assert!((raw - 4.0 * PI).abs() < 1e-6, "{raw}");
        for dim in [2, 3] {
            assert!(perimeter_second_form(0, dim).unwrap().abs() < 1e-8);
            assert!(perimeter_second_form(1, dim).unwrap().abs() < 1e-8);
            for l in 2..=5 {
                let n = dim as f64;
                let lf = l as f64;
                let expect = lf * (lf + n - 2.0) - (n - 1.0);
                let p = perimeter_second_form(l, dim).unwrap();
                assert!((p - expect).abs() < 1e-6 * expect, "dim {dim} l {l}: {p} vs {expect}");
            }
        }
    }
}

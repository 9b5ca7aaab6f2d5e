//! Newtonian capacity of star-shaped bodies in `R³`.
//!
//! Normalization: `Cap(K) = (N−2)σ_N / I(K)` with `I` the minimal Riesz
//! `(N−2)`-energy over probability measures on `K`, so that `Cap(B) = 4π`
//! equals the Dirichlet energy of `u_B = min{1, 1/|x|}`.

use crate::linalg::Vec3;
use crate::par::{self, Execution};
use crate::shape::{perimeter, RadialShape};
use crate::sphere::sphere_area;
use crate::{Error, Result};
use std::f64::consts::PI;

const GAP_TOL: f64 = 1e-8;
const MAX_IT: usize = 2_000_000;

/// Capacity of the unit ball.
pub fn ball_capacity(dim: usize) -> Result<f64> {
    if dim != 3 {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(sphere_area(3))
}

/// Riesz-energy discretization of `∂K` and its minimizing measure.
#[derive(Debug, Clone)]
pub struct RieszSystem {
    pub points: Vec<Vec3>,
    /// surface patch areas attached to the points
    pub areas: Vec<f64>,
    /// row-major `n × n` Gram matrix
    pub gram: Vec<f64>,
    pub mu: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub gap: f64,
}

impl RieszSystem {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn capacity(&self) -> f64 {
        sphere_area(3) / self.energy
    }
}

/// Fibonacci-lattice directions on `S²`.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Sample `∂K`, assemble the Gram matrix and minimize `μᵀGμ` over the
/// probability simplex.
///
/// Off-diagonal entries are `1/|x_i − x_j|`; the diagonal is the mean of the
/// kernel over a flat disk with the patch's area, `16/(3πa)`.
pub fn riesz_system(shape: &RadialShape, n_points: usize, exec: Execution) -> Result<RieszSystem> {
    if shape.dim != 3 {
        return Err(Error::UnsupportedDimension(shape.dim));
    }
    if n_points < 12 {
        return Err(Error::InvalidArgument(format!("riesz capacity needs at least 12 points, got {n_points}")));
    }
    shape.check_star_shaped()?;
    let dirs = fibonacci_directions(n_points);
    let cell = sphere_area(3) / n_points as f64;
    let mut points = Vec::with_capacity(n_points);
    let mut areas = Vec::with_capacity(n_points);
    for w in &dirs {
        let (r, g) = shape.eval_direction(w);
        if r <= 0.0 {
            return Err(Error::NotStarShaped { min_radius: r });
        }
        points.push([r * w[0], r * w[1], r * w[2]]);
        areas.push(cell * r * (r * r + g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt());
    }
    let n = n_points;
    let mut gram = vec![0.0; n * n];
    par::for_each_chunk_mut(exec, &mut gram, n, |i, row| {
        let xi = points[i];
        for (j, gij) in row.iter_mut().enumerate() {
            *gij = if i == j {
                let a = (areas[i] / PI).sqrt();
                16.0 / (3.0 * PI * a)
            } else {
                let xj = points[j];
                1.0 / ((xi[0] - xj[0]).powi(2) + (xi[1] - xj[1]).powi(2) + (xi[2] - xj[2]).powi(2)).sqrt()
            };
        }
    });
    let total: f64 = areas.iter().sum();
    let mu0: Vec<f64> = areas.iter().map(|a| a / total).collect();
    let (mu, energy, iterations, gap) = frank_wolfe(&gram, n, mu0, exec)?;
    Ok(RieszSystem { points, areas, gram, mu, energy, iterations, gap })
}

/// Frank–Wolfe with away steps and exact line search for `min μᵀGμ` on the
/// simplex. Returns `(μ, energy, iterations, Wolfe gap)`.
fn frank_wolfe(g: &[f64], n: usize, mut mu: Vec<f64>, exec: Execution) -> Result<(Vec<f64>, f64, usize, f64)> {
    let row = |i: usize| &g[i * n..(i + 1) * n];
    // gμ = G μ
    let mut gmu: Vec<f64> = par::map_range(exec, n, |i| row(i).iter().zip(&mu).map(|(a, b)| a * b).sum());
    let mut energy: f64 = gmu.iter().zip(&mu).map(|(a, b)| a * b).sum();
    let mut gap = f64::INFINITY;
    for it in 0..MAX_IT {
        let (mut s, mut gs) = (0, f64::INFINITY);
        let (mut a, mut ga) = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..n {
            if gmu[i] < gs {
                gs = gmu[i];
                s = i;
            }
            if mu[i] > 0.0 && gmu[i] > ga {
                ga = gmu[i];
                a = i;
            }
        }
        gap = 2.0 * (energy - gs);
        if gap <= GAP_TOL {
            return Ok((mu, energy, it, gap));
        }
        let away_gap = 2.0 * (ga - energy);
        let prev = energy;
        if gap >= away_gap || a == usize::MAX {
            // toward vertex s: d = e_s − μ
            let dgd = g[s * n + s] - 2.0 * gs + energy;
            let slope = gs - energy;
            let gamma = if dgd > 0.0 { (-slope / dgd).clamp(0.0, 1.0) } else { 1.0 };
            let gs_row = row(s);
            for i in 0..n {
                mu[i] *= 1.0 - gamma;
                gmu[i] = (1.0 - gamma) * gmu[i] + gamma * gs_row[i];
            }
            mu[s] += gamma;
            energy += 2.0 * gamma * slope + gamma * gamma * dgd;
        } else {
            // away from vertex a: d = μ − e_a
            let ma = mu[a];
            let gmax = ma / (1.0 - ma);
            let dgd = energy - 2.0 * ga + g[a * n + a];
            let slope = energy - ga;
            let gamma = if dgd > 0.0 { (-slope / dgd).clamp(0.0, gmax) } else { gmax };
            let ga_row = row(a);
            for i in 0..n {
                mu[i] *= 1.0 + gamma;
                gmu[i] = (1.0 + gamma) * gmu[i] - gamma * ga_row[i];
            }
            mu[a] -= gamma;
            if gamma == gmax {
                mu[a] = 0.0;
            }
            energy += 2.0 * gamma * slope + gamma * gamma * dgd;
        }
        if energy > prev + 1e-12 * prev.abs() {
            return Err(Error::Internal(format!("Frank–Wolfe energy increased at iteration {it}")));
        }
        if it % 4096 == 4095 {
            // refresh to keep the incremental Gμ free of drift
            gmu = par::map_range(exec, n, |i| row(i).iter().zip(&mu).map(|(a, b)| a * b).sum());
            energy = gmu.iter().zip(&mu).map(|(a, b)| a * b).sum();
        }
    }
    let _ = gap;
    Err(Error::NoConvergence { what: "Frank–Wolfe (Riesz energy)".into(), iterations: MAX_IT })
}

/// `Cap(K) ≈ 4π / min μᵀGμ` on `n_points` boundary samples.
pub fn riesz_capacity(shape: &RadialShape, n_points: usize) -> Result<f64> {
    Ok(riesz_system(shape, n_points, par::default_execution())?.capacity())
}

/// Energy of the competitor `u_B ∘ φ_h⁻¹` with the 0-homogeneous extension
/// `φ_h(x) = x(1 + h(x/|x|))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompetitorEnergy {
    pub total: f64,
    pub radial_term: f64,
    pub tangential_term: f64,
}

/// Closed-form reduction of the competitor energy: with `w = ((1+h)/r)^{N−2}`
/// outside `B_h`, the radial integral is exact and leaves
/// `(N−2)∫(1+h)^{N−2} + (N−2)∫(1+h)^{N−4}|∇_τh|²` over `S^{N−1}`.
pub fn competitor_energy(shape: &RadialShape) -> Result<CompetitorEnergy> {
    if shape.dim != 3 {
        return Err(Error::UnsupportedDimension(shape.dim));
    }
    let linf = shape.linf_norm();
    if linf > 0.5 {
        return Err(Error::DeformationTooLarge(format!("‖h‖_∞ = {linf:.3} exceeds 1/2")));
    }
    let q = &shape.basis.quad;
    let r = shape.radius_at_nodes();
    let g = shape.grad_at_nodes();
    let n = shape.dim as i32;
    let a_n = (n - 2) as f64;
    let radial: Vec<f64> = r.iter().map(|r| a_n * r.powi(n - 2)).collect();
    let tang: Vec<f64> = r
        .iter()
        .zip(&g)
        .map(|(r, g)| a_n * r.powi(n - 4) * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]))
        .collect();
    let radial_term = q.integrate(&radial);
    let tangential_term = q.integrate(&tang);
    Ok(CompetitorEnergy { total: radial_term + tangential_term, radial_term, tangential_term })
}

/// `(competitor_energy − Cap(B), ‖h‖²_{H¹})`.
pub fn capacity_upper_gap(shape: &RadialShape) -> Result<(f64, f64)> {
    let e = competitor_energy(shape)?;
    Ok((e.total - ball_capacity(shape.dim)?, shape.h1_sq()))
}

/// Result of [`weak_stability_margin`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakStabilityMargin {
    /// `[P(B_h) + ε/Cap(B_h)] − [P(B) + ε/Cap(B)]`
    pub margin: f64,
    pub perimeter_gap: f64,
    /// `1/Cap(B_h) − 1/Cap(B)`, both from the same Riesz discretization
    pub inverse_capacity_gap: f64,
    /// `‖h‖_{W^{1,∞}}`, for checking the small-norm regime
    pub w1inf: f64,
}

/// Margin of `P + ε Cap⁻¹` over the ball. Capacities come from
/// [`riesz_capacity`] at the same resolution for `B_h` and `B`, so the
/// discretization bias largely cancels.
pub fn weak_stability_margin(shape: &RadialShape, eps_cap: f64, n_points: usize) -> Result<WeakStabilityMargin> {
    if eps_cap < 0.0 {
        return Err(Error::InvalidArgument("ε_cap must be nonnegative".into()));
    }
    let exec = par::default_execution();
    let cap_h = riesz_system(shape, n_points, exec)?.capacity();
    let ball = RadialShape::ball(shape.basis.clone());
    let cap_b = riesz_system(&ball, n_points, exec)?.capacity();
    let perimeter_gap = perimeter(shape)? - perimeter(&ball)?;
    let inverse_capacity_gap = 1.0 / cap_h - 1.0 / cap_b;
    Ok(WeakStabilityMargin {
        margin: perimeter_gap + eps_cap * inverse_capacity_gap,
        perimeter_gap,
        inverse_capacity_gap,
        w1inf: shape.w1inf_norm(),
    })
}

/// Logarithmic capacity in the plane.
///
/// Not implemented: for `N = 2` the relevant quantity is `e^{−γ(K)}` with
/// `γ` the Robin constant, `γ(K) = min_μ ∫∫ log(1/|x−y|) dμ dμ`, which needs
/// a log-kernel variant of [`riesz_system`] (the same Frank–Wolfe solver
/// applies, but the energy is not sign-definite).
pub fn log_capacity_2d(_shape: &RadialShape) -> Result<f64> {
    Err(Error::UnsupportedDimension(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::shared_basis;

    #[test]
    fn fibonacci_points_are_unit() {
        for w in fibonacci_directions(50) {
            assert!(((w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn small_ball_capacity() {
        let b = shared_basis(3, 4).unwrap();
        let sys = riesz_system(&RadialShape::ball(b.clone()), 400, Execution::Sequential).unwrap();
        assert!((sys.capacity() / (4.0 * PI) - 1.0).abs() < 0.02, "{}", sys.capacity());
        assert!((sys.mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sys.mu.iter().all(|&m| m >= 0.0));
        assert!(sys.gap <= GAP_TOL);
        assert!(riesz_capacity(&RadialShape::ball(b), 5).is_err());
    }

    #[test]
    fn competitor_examples() {
        let b = shared_basis(3, 6).unwrap();
        let e = competitor_energy(&RadialShape::ball(b.clone())).unwrap();
        assert!((e.total - 4.0 * PI).abs() < 1e-12);
        assert_eq!(e.tangential_term, 0.0);
        let c = 0.2;
        let e = competitor_energy(&RadialShape::constant(b.clone(), c).unwrap()).unwrap();
        assert!((e.total - 4.0 * PI * (1.0 + c)).abs() < 1e-12);
        assert!(e.tangential_term.abs() < 1e-20);
        assert!(competitor_energy(&RadialShape::constant(b, 0.6).unwrap()).is_err());
        assert!(log_capacity_2d(&RadialShape::ball(shared_basis(2, 2).unwrap())).is_err());
    }
}

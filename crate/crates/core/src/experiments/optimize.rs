//! Penalized minimization of `J_c + μ Huber(|KΔB| − a)` over convex planar
//! radial bodies of volume `|B|`.

use super::config::{ExperimentConfig, StartKind};
use super::corpus::{item_rng, random_direction, shape_with_linf};
use crate::fem::{build_mesh, lambda1_gradient_with, lambda1_with, BallMesh};
use crate::par::{self, Execution};
use crate::shape::{
    convexity_check, hausdorff_distance, normalize, perimeter, perimeter_gradient, shared_basis, symmetric_difference,
    volume, volume_gradient, NormalizeMode, RadialShape,
};
use crate::sphere::{ball_volume, HarmonicBasis};
use crate::stability::{jc_unit_volume, mode_direction};
use crate::{Error, Result};
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

/// Curvature-proxy level below which the hinge penalty is active.
pub const HINGE_MARGIN: f64 = 0.02;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
const MIN_RADIUS: f64 = 0.05;
const SHRINK: f64 = 0.99;
const MAX_SHRINKS: usize = 300;

/// One accepted iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub jc: f64,
    pub asymmetry: f64,
    pub hausdorff: f64,
    pub min_curvature: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub trace: Vec<TraceRow>,
    pub start_shape: RadialShape,
    pub final_shape: RadialShape,
    pub final_objective: f64,
    pub final_jc: f64,
    pub ball_jc: f64,
    pub asymmetry: f64,
    pub hausdorff: f64,
    pub volume_error: f64,
    pub min_curvature: f64,
    pub convex: bool,
    pub converged: bool,
    pub iterations: usize,
    /// dilations toward the ball needed to make the final iterate convex
    pub shrink_steps: usize,
    pub wall_clock: f64,
}

fn huber(x: f64, w: f64) -> (f64, f64) {
    if x.abs() <= w {
        (0.5 * x * x / w, x / w)
    } else {
        (x.abs() - 0.5 * w, x.signum())
    }
}

/// `ρ`, `ρ′`, `ρ″` tables on an equispaced circle grid, matching the grid of
/// the convexity check.
struct CircleTable {
    n: usize,
    y: Vec<Vec<f64>>,
    y1: Vec<Vec<f64>>,
    y2: Vec<Vec<f64>>,
}

impl CircleTable {
    fn new(basis: &HarmonicBasis) -> Self {
        let n = 8 * (2 * basis.l_max + 1).max(64);
        let nk = basis.len();
        let (mut y, mut y1, mut y2) = (vec![vec![0.0; n]; nk], vec![vec![0.0; n]; nk], vec![vec![0.0; n]; nk]);
        for i in 0..n {
            let ev = basis.eval_angles(2.0 * PI * i as f64 / n as f64, 0.0);
            for k in 0..nk {
                y[k][i] = ev[k][0];
                y1[k][i] = ev[k][1];
                y2[k][i] = ev[k][3];
            }
        }
        CircleTable { n, y, y1, y2 }
    }

    fn synth(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (mut r, mut r1, mut r2) = (vec![1.0; self.n], vec![0.0; self.n], vec![0.0; self.n]);
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                for i in 0..self.n {
                    r[i] += c * self.y[k][i];
                    r1[i] += c * self.y1[k][i];
                    r2[i] += c * self.y2[k][i];
                }
            }
        }
        (r, r1, r2)
    }
}

#[derive(Debug, Clone, Copy)]
struct Eval {
    phi: f64,
    jc: f64,
    min_kappa: f64,
}

struct Problem {
    basis: Arc<HarmonicBasis>,
    mesh: BallMesh,
    table: CircleTable,
    c: f64,
    mu: f64,
    a: f64,
    width: f64,
    wconv: f64,
    box_scale: f64,
    exec: Execution,
}

impl Problem {
    fn new(cfg: &ExperimentConfig, exec: Execution) -> Result<Self> {
        if cfg.dim != 2 {
            return Err(Error::UnsupportedDimension(cfg.dim));
        }
        let c = cfg.c.ok_or_else(|| Error::Config("optimize needs c".into()))?;
        let basis = shared_basis(2, cfg.l_max)?;
        Ok(Problem {
            table: CircleTable::new(&basis),
            basis,
            mesh: build_mesh(2, cfg.mesh_size)?,
            c,
            mu: cfg.mu,
            a: cfg.target_asymmetry,
            width: cfg.optimizer.huber_width,
            wconv: cfg.optimizer.convexity_weight,
            box_scale: cfg.box_scale,
            exec,
        })
    }

    /// smoothed-penalty pieces on the circle grid: asymmetry, hinge, min proxy
    fn penalties(&self, coeffs: &[f64]) -> (f64, f64, f64) {
        let (r, r1, r2) = self.table.synth(coeffs);
        let dt = 2.0 * PI / self.table.n as f64;
        let (mut asym, mut hinge, mut kmin) = (0.0, 0.0, f64::INFINITY);
        for i in 0..self.table.n {
            asym += 0.5 * (r[i] * r[i] - 1.0).abs() * dt;
            let k = r[i] * r[i] + 2.0 * r1[i] * r1[i] - r[i] * r2[i];
            kmin = kmin.min(k);
            let v = (HINGE_MARGIN - k).max(0.0);
            hinge += v * v;
        }
        (asym, hinge / self.table.n as f64, kmin)
    }

    fn eval(&self, s: &RadialShape) -> Result<Eval> {
        let p = perimeter(s)?;
        let lam = lambda1_with(s, &self.mesh, self.exec)?.lambda;
        let jc = jc_unit_volume(p, lam, self.c, 2);
        let (asym, hinge, min_kappa) = self.penalties(&s.coeffs);
        let phi = jc + self.mu * huber(asym - self.a, self.width).0 + self.wconv * hinge;
        Ok(Eval { phi, jc, min_kappa })
    }

    fn gradient(&self, s: &RadialShape) -> Result<Vec<f64>> {
        let w = ball_volume(2);
        let gp = perimeter_gradient(s)?;
        let (_, gl) = lambda1_gradient_with(s, &self.mesh, self.exec)?;
        let (r, r1, r2) = self.table.synth(&s.coeffs);
        let n = self.table.n;
        let dt = 2.0 * PI / n as f64;
        let asym: f64 = r.iter().map(|r| 0.5 * (r * r - 1.0).abs() * dt).sum();
        let dh = self.mu * huber(asym - self.a, self.width).1;
        let mut g: Vec<f64> = gp.iter().zip(&gl).map(|(p, l)| p / w.sqrt() - self.c * l * w).collect();
        for (k, gk) in g.iter_mut().enumerate() {
            let (y, y1, y2) = (&self.table.y[k], &self.table.y1[k], &self.table.y2[k]);
            let (mut da, mut dk) = (0.0, 0.0);
            for i in 0..n {
                da += (r[i] * r[i] - 1.0).signum() * r[i] * y[i] * dt;
                let kap = r[i] * r[i] + 2.0 * r1[i] * r1[i] - r[i] * r2[i];
                if kap < HINGE_MARGIN {
                    let dkap = 2.0 * r[i] * y[i] + 4.0 * r1[i] * y1[i] - y[i] * r2[i] - r[i] * y2[i];
                    dk += -2.0 * (HINGE_MARGIN - kap) * dkap;
                }
            }
            *gk += dh * da + self.wconv * dk / n as f64;
        }
        Ok(g)
    }

    /// `H¹`-preconditioned reduced gradient without `l ≤ 1` content; the
    /// volume multiplier is read off the constant mode, which the
    /// retraction adjusts.
    fn direction(&self, s: &RadialShape, g: &[f64]) -> Vec<f64> {
        let v = volume_gradient(s);
        let alpha = g[0] / v[0];
        (0..g.len())
            .map(|k| {
                if self.basis.degree(k) <= 1 {
                    0.0
                } else {
                    (g[k] - alpha * v[k]) / (1.0 + self.basis.eigenvalues()[k])
                }
            })
            .collect()
    }

    fn retract(&self, coeffs: Vec<f64>) -> Option<RadialShape> {
        let s = RadialShape::new_unchecked(self.basis.clone(), coeffs);
        if s.min_radius() <= MIN_RADIUS {
            return None;
        }
        let s = normalize(&s, NormalizeMode::Both).ok()?;
        let (r, _, _) = self.table.synth(&s.coeffs);
        if r.iter().any(|&r| r > self.box_scale || r <= MIN_RADIUS) {
            return None;
        }
        Some(s)
    }
}

/// Seeded starting body for `cfg`.
pub fn start_shape(cfg: &ExperimentConfig) -> Result<RadialShape> {
    let seed = cfg.require_seed()?;
    let basis = shared_basis(cfg.dim, cfg.l_max)?;
    let ball = RadialShape::ball(basis.clone());
    let mut rng = item_rng(seed, 0);
    let l_rand = cfg.l_max.min(6);
    match cfg.start {
        StartKind::Random => {
            for _ in 0..1000 {
                let decay = rng.gen_range(1.0..3.0);
                let dir = random_direction(&basis, &mut rng, 2, l_rand, decay);
                let mut linf = rng.gen_range(0.02..0.08);
                for _ in 0..20 {
                    let Some(s) = shape_with_linf(&basis, &dir, linf)? else { break };
                    let d = symmetric_difference(&s, &ball)?;
                    if d <= cfg.start_amplitude && convexity_check(&s).is_convex {
                        return Ok(s);
                    }
                    linf *= 0.7;
                }
            }
            Err(Error::Infeasible("no convex random start found".into()))
        }
        StartKind::Mode => {
            let y = mode_direction(cfg.dim, cfg.mode)?;
            let mut coeffs = vec![0.0; basis.len()];
            for (k, &c) in y.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                let m = HarmonicBasis::index_to_mode(cfg.dim, k);
                coeffs[basis.mode_to_index(m.l, m.m)?] += cfg.start_amplitude * c;
            }
            let noise = random_direction(&basis, &mut rng, 2, l_rand, 2.0);
            let nmax = RadialShape::new_unchecked(basis.clone(), noise.clone()).linf_norm().max(1e-300);
            for (c, e) in coeffs.iter_mut().zip(&noise) {
                *c += 0.05 * cfg.start_amplitude * e / nmax;
            }
            normalize(&RadialShape::new(basis, coeffs)?, NormalizeMode::Both)
        }
    }
}

/// Projected-gradient descent of the penalized functional from `start`.
///
/// Trial steps leaving the box `ρ ≤ box_scale` are rejected; the final
/// iterate is pulled toward the ball by `B_{th}`, `t = 0.99^k`, until the
/// sampled convexity check passes.
pub fn penalized_minimize_from(cfg: &ExperimentConfig, start: &RadialShape, exec: Execution) -> Result<ExperimentRecord> {
    let clock = Instant::now();
    let prob = Problem::new(cfg, exec)?;
    let ball = RadialShape::ball(prob.basis.clone());
    let ball_lambda = lambda1_with(&ball, &prob.mesh, exec)?.lambda;
    let ball_jc = jc_unit_volume(perimeter(&ball)?, ball_lambda, prob.c, 2);
    let start = normalize(&start.with_coeffs(start.coeffs.clone()), NormalizeMode::Both)?;
    if start.basis.len() != prob.basis.len() {
        return Err(Error::LengthMismatch { expected: prob.basis.len(), got: start.basis.len() });
    }

    let row = |it: usize, s: &RadialShape, e: &Eval, step: f64| -> Result<TraceRow> {
        Ok(TraceRow {
            iteration: it,
            objective: e.phi,
            jc: e.jc,
            asymmetry: symmetric_difference(s, &ball)?,
            hausdorff: hausdorff_distance(s, &ball)?,
            min_curvature: e.min_kappa,
            step,
        })
    };

    let mut cur = start.clone();
    let mut ev = prob.eval(&cur)?;
    let mut trace = vec![row(0, &cur, &ev, 0.0)?];
    let mut t = cfg.optimizer.step;
    let mut converged = false;
    let mut stalls = 0;
    let mut it = 0;
    while it < cfg.optimizer.max_iterations {
        let g = prob.gradient(&cur)?;
        let d = prob.direction(&cur, &g);
        let v = volume_gradient(&cur);
        let alpha = g[0] / v[0];
        let gd: f64 = g.iter().zip(&v).zip(&d).map(|((g, v), d)| (g - alpha * v) * d).sum();
        if gd <= 1e-28 {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut trial_t = (2.0 * t).min(cfg.optimizer.step);
        for _ in 0..MAX_HALVINGS {
            let coeffs: Vec<f64> = cur.coeffs.iter().zip(&d).map(|(c, d)| c - trial_t * d).collect();
            if let Some(s) = prob.retract(coeffs) {
                if let Ok(e) = prob.eval(&s) {
                    if e.phi <= ev.phi - ARMIJO * trial_t * gd {
                        accepted = Some((s, e));
                        break;
                    }
                }
            }
            trial_t *= 0.5;
        }
        let Some((s, e)) = accepted else {
            converged = true;
            break;
        };
        it += 1;
        let decrease = ev.phi - e.phi;
        cur = s;
        ev = e;
        t = trial_t;
        trace.push(row(it, &cur, &ev, t)?);
        if decrease <= cfg.optimizer.tolerance * ev.phi.abs().max(1.0) {
            stalls += 1;
            if stalls >= 3 {
                converged = true;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    let mut shrink_steps = 0;
    let mut fin = cur.clone();
    while !convexity_check(&fin).is_convex {
        shrink_steps += 1;
        if shrink_steps > MAX_SHRINKS {
            return Err(Error::Infeasible(format!(
                "final iterate not convexifiable at target asymmetry {}",
                cfg.target_asymmetry
            )));
        }
        fin = normalize(&cur.scaled(SHRINK.powi(shrink_steps as i32)), NormalizeMode::Both)?;
    }
    let fe = if shrink_steps > 0 { prob.eval(&fin)? } else { ev };
    let report = convexity_check(&fin);
    let v = volume(&fin)?;
    Ok(ExperimentRecord {
        config: cfg.clone(),
        trace,
        start_shape: start,
        asymmetry: symmetric_difference(&fin, &ball)?,
        hausdorff: hausdorff_distance(&fin, &ball)?,
        final_shape: fin,
        final_objective: fe.phi,
        final_jc: fe.jc,
        ball_jc,
        volume_error: (v / ball_volume(2) - 1.0).abs(),
        min_curvature: report.min_curvature_proxy,
        convex: report.is_convex,
        converged,
        iterations: it,
        shrink_steps,
        wall_clock: clock.elapsed().as_secs_f64(),
    })
}

/// Run from the seeded start selected by `cfg.start`.
pub fn penalized_minimize(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    let s = start_shape(cfg)?;
    penalized_minimize_from(cfg, &s, Execution::Sequential)
}

/// One run per seed, in parallel; each trajectory is sequential.
pub fn penalized_runs(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<ExperimentRecord>> {
    par::map_slice(par::default_execution(), seeds, |&seed| {
        let mut c = cfg.clone();
        c.seed = Some(seed);
        penalized_minimize(&c)
    })
    .into_iter()
    .collect()
}

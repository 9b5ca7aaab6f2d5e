//! Sampling of the `(P, λ₁)` diagram of planar convex bodies of unit area
//! near the disk, and the slope of its upper envelope at the disk.

use super::corpus::{item_rng, random_direction};
use crate::fem::{build_mesh, lambda1_with};
use crate::par::{self, Execution};
use crate::shape::{convexity_check, normalize, perimeter, shared_basis, NormalizeMode, RadialShape};
use crate::sphere::ball_volume;
use crate::stability::c_star_formula;
use crate::{Error, Result};
use rand::Rng;
use serde::Serialize;

pub const ENVELOPE_BINS: usize = 10;
const MIN_FIRST_BIN: usize = 3;
const MAX_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagramPoint {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
    pub decay: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeBin {
    pub bin: usize,
    pub count: usize,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramResult {
    pub x0: f64,
    pub y0: f64,
    pub points: Vec<DiagramPoint>,
    pub bins: Vec<EnvelopeBin>,
    /// least-squares secant slope of the envelope through `(x0, y0)`
    pub slope: f64,
    /// `1/c*`
    pub expected: f64,
    pub relative_error: f64,
    pub rejected_nonconvex: usize,
}

/// `n` seeded unit-area convex bodies with `P − P(B) ≤ band`.
///
/// Directions are random on degrees `2..=l_max` with decay `l^{-p}`,
/// `p ~ U(1, 4)`; the amplitude is bisected to hit a uniformly drawn
/// perimeter excess.
pub fn bs_diagram_sample(n: usize, seed: u64, band: f64, mesh_size: f64, l_max: usize) -> Result<DiagramResult> {
    if n < 200 {
        return Err(Error::InvalidArgument(format!("need at least 200 samples, got {n}")));
    }
    if !(band > 0.0) {
        return Err(Error::InvalidArgument("band must be positive".into()));
    }
    let basis = shared_basis(2, l_max)?;
    let mesh = build_mesh(2, mesh_size)?;
    let w = ball_volume(2);
    let xs = 1.0 / w.sqrt();
    let ball = RadialShape::ball(basis.clone());
    let x0 = perimeter(&ball)? * xs;
    let y0 = lambda1_with(&ball, &mesh, Execution::Sequential)?.lambda * w;

    let samples = par::map_range(par::default_execution(), n, |i| -> Result<(DiagramPoint, usize)> {
        let mut rng = item_rng(seed, i as u64);
        let mut rejected = 0;
        for _ in 0..MAX_ATTEMPTS {
            let decay = rng.gen_range(1.0..4.0);
            let target = rng.gen_range(0.0..1.0_f64).max(1e-3) * band;
            let dir = random_direction(&basis, &mut rng, 2, l_max, decay);
            let unit = RadialShape::new_unchecked(basis.clone(), dir.clone());
            let t_max = 0.5 / unit.linf_norm();
            let excess = |t: f64| -> Result<(f64, RadialShape)> {
                let s = normalize(&unit.scaled(t), NormalizeMode::Both)?;
                Ok((perimeter(&s)? * xs - x0, s))
            };
            if excess(t_max)?.0 < target {
                continue;
            }
            let (mut lo, mut hi) = (0.0, t_max);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if excess(mid)?.0 < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (dx, s) = excess(hi)?;
            if !convexity_check(&s).is_convex {
                rejected += 1;
                continue;
            }
            let y = lambda1_with(&s, &mesh, Execution::Sequential)?.lambda * w;
            let p = DiagramPoint { index: i, x: x0 + dx, y, dx, dy: y - y0, decay, amplitude: hi };
            return Ok((p, rejected));
        }
        Err(Error::Infeasible(format!("sample {i}: no convex body within the band")))
    });
    let mut points = Vec::with_capacity(n);
    let mut rejected_nonconvex = 0;
    for s in samples {
        let (p, r) = s?;
        points.push(p);
        rejected_nonconvex += r;
    }

    let width = band / ENVELOPE_BINS as f64;
    let mut bins: Vec<EnvelopeBin> =
        (0..ENVELOPE_BINS).map(|b| EnvelopeBin { bin: b, count: 0, dx: f64::NAN, dy: f64::NEG_INFINITY }).collect();
    for p in &points {
        let b = ((p.dx / width) as usize).min(ENVELOPE_BINS - 1);
        let e = &mut bins[b];
        e.count += 1;
        if p.dy > e.dy {
            e.dy = p.dy;
            e.dx = p.dx;
        }
    }
    if bins[0].count < MIN_FIRST_BIN || bins[1].count < MIN_FIRST_BIN {
        return Err(Error::Infeasible(format!(
            "too few envelope points near the disk ({} and {})",
            bins[0].count, bins[1].count
        )));
    }
    let (num, den) = bins.iter().filter(|b| b.count > 0).fold((0.0, 0.0), |(n, d), b| (n + b.dx * b.dy, d + b.dx * b.dx));
    let slope = num / den;
    let expected = 1.0 / c_star_formula(2)?;
    Ok(DiagramResult {
        x0,
        y0,
        points,
        bins,
        slope,
        expected,
        relative_error: (slope / expected - 1.0).abs(),
        rejected_nonconvex,
    })
}

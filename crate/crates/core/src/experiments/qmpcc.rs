//! Sampled check of perimeter quasi-minimality under convexity constraint:
//! `P(K) ≤ P(K̃) + Λ|K∖K̃|` for inner convex `K̃` with `|K∖K̃| ≤ ε`.

use super::corpus::item_rng;
use crate::par;
use crate::shape::{convexity_check, RadialShape};
use crate::{Error, Result};
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Vertices of the polygonal approximation of the body.
pub const POLYGON_VERTICES: usize = 4096;
const MIN_REMOVED: f64 = 1e-7;

type P2 = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetitorRow {
    pub index: usize,
    /// `shrink` or `cap`
    pub kind: String,
    pub removed: f64,
    pub perimeter_drop: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QmpccVerdict {
    pub pass: bool,
    pub lambda: f64,
    pub eps: f64,
    pub max_ratio: f64,
    pub rows: Vec<CompetitorRow>,
}

fn polygon(shape: &RadialShape, m: usize) -> Vec<P2> {
    (0..m)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / m as f64;
            let r = shape.radius_at_angle(t);
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

fn area(p: &[P2]) -> f64 {
    let n = p.len();
    0.5 * (0..n).map(|i| {
        let (a, b) = (p[i], p[(i + 1) % n]);
        a[0] * b[1] - a[1] * b[0]
    }).sum::<f64>()
}

fn length(p: &[P2]) -> f64 {
    let n = p.len();
    (0..n).map(|i| {
        let (a, b) = (p[i], p[(i + 1) % n]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }).sum()
}

fn centroid(p: &[P2]) -> P2 {
    let n = p.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        let cr = a[0] * b[1] - a[1] * b[0];
        cx += (a[0] + b[0]) * cr;
        cy += (a[1] + b[1]) * cr;
    }
    let s = 6.0 * area(p);
    [cx / s, cy / s]
}

fn is_convex(p: &[P2]) -> bool {
    let n = p.len();
    (0..n).all(|i| {
        let (a, b, c) = (p[i], p[(i + 1) % n], p[(i + 2) % n]);
        let cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        cr >= -1e-12
    })
}

/// `p ∩ {x·u ≤ s}`.
fn clip(p: &[P2], u: P2, s: f64) -> Vec<P2> {
    let n = p.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        let (fa, fb) = (a[0] * u[0] + a[1] * u[1] - s, b[0] * u[0] + b[1] * u[1] - s);
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Samples `n_competitors` inner convex competitors (alternating radial
/// shrinkages about the centroid and half-plane cap cuts) and reports the
/// largest `(P(K) − P(K̃))/|K∖K̃|`.
pub fn qmpcc_verify(shape: &RadialShape, lambda: f64, eps: f64, n_competitors: usize, seed: u64) -> Result<QmpccVerdict> {
    if shape.dim != 2 {
        return Err(Error::UnsupportedDimension(shape.dim));
    }
    if !(lambda >= 0.0) || !(eps > 0.0) || n_competitors == 0 {
        return Err(Error::InvalidArgument(format!("need Λ ≥ 0, ε > 0, n > 0 (got {lambda}, {eps}, {n_competitors})")));
    }
    shape.check_star_shaped()?;
    if !convexity_check(shape).is_convex {
        return Err(Error::InvalidArgument("qmpcc_verify needs a convex body".into()));
    }
    let poly = polygon(shape, POLYGON_VERTICES);
    let (a0, p0) = (area(&poly), length(&poly));
    let eps = eps.min(0.5 * a0);
    let c0 = centroid(&poly);

    let rows: Vec<Result<CompetitorRow>> = par::map_range(par::default_execution(), n_competitors, |i| {
        let mut rng = item_rng(seed, i as u64);
        let target = rng.gen_range(0.0..1.0_f64).max(1e-3) * eps;
        if i % 2 == 0 {
            // x ↦ c0 + t(x − c0) keeps P(K̃) = tP(K), |K̃| = t²|K|
            let t = (1.0 - target / a0).sqrt();
            let removed = (1.0 - t * t) * a0;
            let drop = (1.0 - t) * p0;
            return Ok(CompetitorRow { index: i, kind: "shrink".into(), removed, perimeter_drop: drop, ratio: drop / removed });
        }
        let phi = rng.gen_range(0.0..2.0 * PI);
        let u = [phi.cos(), phi.sin()];
        let proj: Vec<f64> = poly.iter().map(|x| x[0] * u[0] + x[1] * u[1]).collect();
        let hmax = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let hc = c0[0] * u[0] + c0[1] * u[1];
        let (mut lo, mut hi) = (hc, hmax);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if a0 - area(&clip(&poly, u, mid)) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let cut = clip(&poly, u, hi);
        if !is_convex(&cut) {
            return Err(Error::Internal(format!("cap competitor {i} is not convex")));
        }
        let removed = a0 - area(&cut);
        let drop = p0 - length(&cut);
        let ratio = if removed > MIN_REMOVED { drop / removed } else { 0.0 };
        Ok(CompetitorRow { index: i, kind: "cap".into(), removed, perimeter_drop: drop, ratio })
    });
    let rows: Vec<CompetitorRow> = rows.into_iter().collect::<Result<_>>()?;
    if let Some(r) = rows.iter().find(|r| r.removed > eps * (1.0 + 1e-9) || r.removed < 0.0) {
        return Err(Error::Internal(format!("competitor {} removes {} outside [0, ε]", r.index, r.removed)));
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(QmpccVerdict { pass: max_ratio <= lambda * (1.0 + 1e-9), lambda, eps, max_ratio, rows })
}

/// Corpus-fitted constant: `safety · max` of the sampled ratios over
/// `shapes`.
pub fn fit_qm_lambda(shapes: &[RadialShape], eps: f64, n_competitors: usize, seed: u64, safety: f64) -> Result<f64> {
    let mut m: f64 = 0.0;
    for s in shapes {
        m = m.max(qmpcc_verify(s, 0.0, eps, n_competitors, seed)?.max_ratio);
    }
    Ok(safety * m)
}

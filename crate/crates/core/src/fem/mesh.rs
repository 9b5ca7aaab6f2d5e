use crate::linalg::{CsrPattern, Mat3, Vec3};
use crate::sphere::check_dim;
use crate::{Error, Result};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::{Arc, OnceLock};

const HEADER: &str = "#ballstab-mesh 1";

/// Mid-edge rule on triangles (exact for quadratics), weights 1/3.
pub(crate) const MASS_BARY_2D: [[f64; 4]; 3] = [[0.5, 0.5, 0.0, 0.0], [0.0, 0.5, 0.5, 0.0], [0.5, 0.0, 0.5, 0.0]];
const TA: f64 = 0.585_410_196_624_968_5;
const TB: f64 = 0.138_196_601_125_010_5;
/// Four-point rule on tetrahedra (degree 2), weights 1/4.
pub(crate) const MASS_BARY_3D: [[f64; 4]; 4] = [[TA, TB, TB, TB], [TB, TA, TB, TB], [TB, TB, TA, TB], [TB, TB, TB, TA]];

/// Simplicial mesh of the closed unit ball.
#[derive(Debug, Clone)]
pub struct BallMesh {
    pub dim: usize,
    pub vertices: Vec<Vec3>,
    /// Vertex indices; only the first `dim + 1` entries are used.
    pub simplices: Vec<[usize; 4]>,
    pub boundary: Vec<bool>,
    pub size: f64,
    geometry: OnceLock<Arc<MeshGeometry>>,
    pub(crate) ball: OnceLock<Arc<super::eigen::BallProblem>>,
}

/// Per-element data shared by every assembly on a mesh.
#[derive(Debug)]
pub(crate) struct MeshGeometry {
    pub volumes: Vec<f64>,
    pub grads: Vec<[Vec3; 4]>,
    pub centroids: Vec<Vec3>,
    pub mass_points: Vec<[Vec3; 4]>,
    pub pattern: Arc<CsrPattern>,
    /// global vertex -> interior dof
    pub interior: Vec<Option<usize>>,
    pub n_interior: usize,
    /// `∫_{∂B} φ_i ds` (zero for interior vertices)
    pub boundary_weight: Vec<f64>,
    /// CSR value slots of each local `(i, j)` pair, row-major `4 × 4`.
    pub slots: Vec<[usize; 16]>,
    /// RCM ordering of the interior block, computed on first factorization.
    pub ordering: OnceLock<Vec<usize>>,
}

impl BallMesh {
    pub fn from_parts(dim: usize, vertices: Vec<Vec3>, simplices: Vec<[usize; 4]>, boundary: Vec<bool>, size: f64) -> Result<Self> {
        check_dim(dim)?;
        if boundary.len() != vertices.len() {
            return Err(Error::Mesh("boundary flags do not match vertex count".into()));
        }
        let nv = dim + 1;
        for s in &simplices {
            if s[..nv].iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Mesh("simplex references a missing vertex".into()));
            }
        }
        let m = BallMesh { dim, vertices, simplices, boundary, size, geometry: OnceLock::new(), ball: OnceLock::new() };
        for (e, s) in m.simplices.iter().enumerate() {
            let v = m.signed_volume(s);
            if v <= 0.0 {
                return Err(Error::Mesh(format!("simplex {e} has non-positive volume {v:.3e}")));
            }
        }
        Ok(m)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_simplices(&self) -> usize {
        self.simplices.len()
    }

    pub fn nodes_per_simplex(&self) -> usize {
        self.dim + 1
    }

    pub fn signed_volume(&self, s: &[usize; 4]) -> f64 {
        let x0 = self.vertices[s[0]];
        let mut m = Mat3::identity();
        for c in 0..self.dim {
            let xc = self.vertices[s[c + 1]];
            for r in 0..3 {
                m.0[r][c] = xc[r] - x0[r];
            }
        }
        let fact = if self.dim == 2 { 2.0 } else { 6.0 };
        m.det() / fact
    }

    pub fn total_volume(&self) -> f64 {
        self.simplices.iter().map(|s| self.signed_volume(s)).sum()
    }

    pub(crate) fn geometry(&self) -> Arc<MeshGeometry> {
        self.geometry.get_or_init(|| Arc::new(MeshGeometry::build(self))).clone()
    }

    pub fn n_interior(&self) -> usize {
        self.geometry().n_interior
    }

    /// Boundary facets (edges in 2D, triangles in 3D): faces owned by one simplex.
    pub fn boundary_facets(&self) -> Vec<Vec<usize>> {
        let nv = self.dim + 1;
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in &self.simplices {
            for skip in 0..nv {
                let mut f: Vec<usize> = (0..nv).filter(|&k| k != skip).map(|k| s[k]).collect();
                f.sort_unstable();
                *count.entry(f).or_insert(0) += 1;
            }
        }
        let mut out: Vec<Vec<usize>> = count.into_iter().filter(|(_, c)| *c == 1).map(|(f, _)| f).collect();
        out.sort();
        out
    }

    /// Serialize to the plain-text mesh format.
    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER}\ndim {}\nsize {}\nvertices {}\n", self.dim, self.size, self.vertices.len());
        for v in &self.vertices {
            let coords: Vec<String> = v[..self.dim].iter().map(|x| format!("{x:.17e}")).collect();
            s.push_str(&coords.join(" "));
            s.push('\n');
        }
        s.push_str(&format!("simplices {}\n", self.simplices.len()));
        for t in &self.simplices {
            let ids: Vec<String> = t[..=self.dim].iter().map(|i| i.to_string()).collect();
            s.push_str(&ids.join(" "));
            s.push('\n');
        }
        s.push_str(&format!("boundary {}\n", self.boundary.len()));
        for &b in &self.boundary {
            s.push_str(if b { "1\n" } else { "0\n" });
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("mesh file: {m}"));
        let mut it = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if it.next() != Some(HEADER) {
            return Err(bad("missing header"));
        }
        let dim: usize = keyed_value(&mut it, "dim")?;
        let size: f64 = keyed_value(&mut it, "size")?;
        let nv: usize = keyed_value(&mut it, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let l = it.next().ok_or_else(|| bad("truncated vertices"))?;
            let xs: Vec<f64> = l.split_whitespace().map(|t| t.parse().map_err(|_| bad("vertex"))).collect::<Result<_>>()?;
            if xs.len() != dim {
                return Err(bad("vertex arity"));
            }
            let mut v = [0.0; 3];
            v[..dim].copy_from_slice(&xs);
            vertices.push(v);
        }
        let ns: usize = keyed_value(&mut it, "simplices")?;
        let mut simplices = Vec::with_capacity(ns);
        for _ in 0..ns {
            let l = it.next().ok_or_else(|| bad("truncated simplices"))?;
            let ids: Vec<usize> = l.split_whitespace().map(|t| t.parse().map_err(|_| bad("simplex"))).collect::<Result<_>>()?;
            if ids.len() != dim + 1 {
                return Err(bad("simplex arity"));
            }
            let mut s = [0usize; 4];
            s[..=dim].copy_from_slice(&ids);
            simplices.push(s);
        }
        let nb: usize = keyed_value(&mut it, "boundary")?;
        let boundary = (0..nb)
            .map(|_| match it.next() {
                Some("1") => Ok(true),
                Some("0") => Ok(false),
                _ => Err(bad("boundary flag")),
            })
            .collect::<Result<Vec<_>>>()?;
        BallMesh::from_parts(dim, vertices, simplices, boundary, size)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn keyed_value<'a, T: std::str::FromStr>(it: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<T> {
    it.next()
        .and_then(|l| l.strip_prefix(key))
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("mesh file: expected `{key} <value>`")))
}

impl MeshGeometry {
    fn build(mesh: &BallMesh) -> Self {
        let dim = mesh.dim;
        let nv = dim + 1;
        let ne = mesh.simplices.len();
        let mut volumes = Vec::with_capacity(ne);
        let mut grads = Vec::with_capacity(ne);
        let mut centroids = Vec::with_capacity(ne);
        let mut mass_points = Vec::with_capacity(ne);
        let bary: &[[f64; 4]] = if dim == 2 { &MASS_BARY_2D } else { &MASS_BARY_3D };
        for s in &mesh.simplices {
            let x: Vec<Vec3> = (0..nv).map(|k| mesh.vertices[s[k]]).collect();
            let mut b = Mat3::identity();
            for c in 0..dim {
                for r in 0..3 {
                    b.0[r][c] = x[c + 1][r] - x[0][r];
                }
            }
            let inv = b.inverse().expect("positive volume checked at construction");
            let mut g = [[0.0; 3]; 4];
            for k in 1..nv {
                for r in 0..dim {
                    g[k][r] = inv.0[k - 1][r];
                }
            }
            for r in 0..dim {
                g[0][r] = -(1..nv).map(|k| g[k][r]).sum::<f64>();
            }
            volumes.push(mesh.signed_volume(s));
            grads.push(g);
            let mut c = [0.0; 3];
            for xi in &x {
                for d in 0..3 {
                    c[d] += xi[d] / nv as f64;
                }
            }
            centroids.push(c);
            let mut mp = [[0.0; 3]; 4];
            for (q, bq) in bary.iter().enumerate() {
                for k in 0..nv {
                    for d in 0..3 {
                        mp[q][d] += bq[k] * x[k][d];
                    }
                }
            }
            mass_points.push(mp);
        }
        let pattern = Arc::new(CsrPattern::from_cliques(
            mesh.vertices.len(),
            mesh.simplices.iter().map(|s| &s[..nv]),
        ));
        let mut interior = vec![None; mesh.vertices.len()];
        let mut n_interior = 0;
        for (i, &b) in mesh.boundary.iter().enumerate() {
            if !b {
                interior[i] = Some(n_interior);
                n_interior += 1;
            }
        }
        let mut boundary_weight = vec![0.0; mesh.vertices.len()];
        for f in mesh.boundary_facets() {
            let a = mesh.vertices[f[0]];
            let m = if dim == 2 {
                let b = mesh.vertices[f[1]];
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            } else {
                let b = mesh.vertices[f[1]];
                let c = mesh.vertices[f[2]];
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let cr = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                0.5 * (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt()
            };
            for &i in &f {
                boundary_weight[i] += m / f.len() as f64;
            }
        }
        let slots = mesh
            .simplices
            .iter()
            .map(|s| {
                let mut sl = [0usize; 16];
                for a in 0..nv {
                    for b in 0..nv {
                        sl[4 * a + b] = pattern.position(s[a], s[b]).expect("pattern covers every simplex");
                    }
                }
                sl
            })
            .collect();
        MeshGeometry { volumes, grads, centroids, mass_points, pattern, interior, n_interior, boundary_weight, slots, ordering: OnceLock::new() }
    }

    pub fn mass_rule(dim: usize) -> (&'static [[f64; 4]], f64) {
        if dim == 2 {
            (&MASS_BARY_2D, 1.0 / 3.0)
        } else {
            (&MASS_BARY_3D, 0.25)
        }
    }
}

/// Quasi-uniform mesh of the unit ball with boundary vertices on the sphere.
///
/// 2D: concentric rings `k/K`, `K = ⌈1/size⌉`, ring `k` carrying `6k`
/// equispaced nodes. 3D: Kuhn subdivision of a cube grid pushed onto the
/// ball by the elliptical cube-to-ball map.
pub fn build_mesh(dim: usize, size: f64) -> Result<BallMesh> {
    check_dim(dim)?;
    if !(size > 0.0 && size < 1.0) {
        return Err(Error::InvalidArgument(format!("mesh size {size} outside (0, 1)")));
    }
    if dim == 2 {
        disk_mesh(size)
    } else {
        ball_mesh(size)
    }
}

fn disk_mesh(size: f64) -> Result<BallMesh> {
    let k_rings = (1.0 / size).ceil() as usize;
    let mut vertices = vec![[0.0; 3]];
    let mut boundary = vec![false];
    let mut rings: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..=k_rings {
        let r = k as f64 / k_rings as f64;
        let n = 6 * k;
        let mut ids = Vec::with_capacity(n);
        for j in 0..n {
            let a = 2.0 * PI * j as f64 / n as f64;
            ids.push(vertices.len());
            vertices.push([r * a.cos(), r * a.sin(), 0.0]);
            boundary.push(k == k_rings);
        }
        rings.push(ids);
    }
    let mut simplices = Vec::new();
    for k in 1..=k_rings {
        let inner = &rings[k - 1];
        let outer = &rings[k];
        if k == 1 {
            for j in 0..6 {
                simplices.push([0, outer[j], outer[(j + 1) % 6], 0]);
            }
            continue;
        }
        let (n1, n2) = (inner.len(), outer.len());
        let (mut i, mut j) = (0, 0);
        while i < n1 || j < n2 {
            let next_in = (i + 1) as f64 / n1 as f64;
            let next_out = (j + 1) as f64 / n2 as f64;
            if j == n2 || (i < n1 && next_in <= next_out) {
                simplices.push([inner[i], inner[(i + 1) % n1], outer[j % n2], 0]);
                i += 1;
            } else {
                simplices.push([inner[i % n1], outer[j], outer[(j + 1) % n2], 0]);
                j += 1;
            }
        }
    }
    orient(2, &vertices, &mut simplices);
    BallMesh::from_parts(2, vertices, simplices, boundary, size)
}

fn ball_mesh(size: f64) -> Result<BallMesh> {
    let n = (2.0 / size).ceil() as usize;
    let idx = |i: usize, j: usize, k: usize| (i * (n + 1) + j) * (n + 1) + k;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    let mut boundary = Vec::with_capacity((n + 1).pow(3));
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let c = |t: usize| -1.0 + 2.0 * t as f64 / n as f64;
                let (x, y, z) = (c(i), c(j), c(k));
                let mut p = [
                    x * (1.0 - y * y / 2.0 - z * z / 2.0 + y * y * z * z / 3.0).sqrt(),
                    y * (1.0 - z * z / 2.0 - x * x / 2.0 + z * z * x * x / 3.0).sqrt(),
                    z * (1.0 - x * x / 2.0 - y * y / 2.0 + x * x * y * y / 3.0).sqrt(),
                ];
                let on_boundary = [i, j, k].iter().any(|&t| t == 0 || t == n);
                if on_boundary {
                    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    p = [p[0] / r, p[1] / r, p[2] / r];
                }
                vertices.push(p);
                boundary.push(on_boundary);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut simplices = Vec::with_capacity(6 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for p in PERMS {
                    let mut cur = [i, j, k];
                    let mut tet = [idx(i, j, k), 0, 0, 0];
                    for (s, &axis) in p.iter().enumerate() {
                        cur[axis] += 1;
                        tet[s + 1] = idx(cur[0], cur[1], cur[2]);
                    }
                    simplices.push(tet);
                }
            }
        }
    }
    orient(3, &vertices, &mut simplices);
    BallMesh::from_parts(3, vertices, simplices, boundary, size)
}

fn orient(dim: usize, vertices: &[Vec3], simplices: &mut [[usize; 4]]) {
    for s in simplices.iter_mut() {
        let x0 = vertices[s[0]];
        let mut m = Mat3::identity();
        for c in 0..dim {
            for r in 0..3 {
                m.0[r][c] = vertices[s[c + 1]][r] - x0[r];
            }
        }
        if m.det() < 0.0 {
            s.swap(1, 2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mesh_is_quasi_uniform() {
        let m = build_mesh(2, 0.05).unwrap();
        let areas: Vec<f64> = m.simplices.iter().map(|s| m.signed_volume(s)).collect();
        let h2 = 0.05f64 * 0.05;
        assert!(areas.iter().all(|&a| a > 0.1 * h2 && a < 2.0 * h2));
        for (v, &b) in m.vertices.iter().zip(&m.boundary) {
            let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
            assert!(r <= 1.0 + 1e-12);
            if b {
                assert!((r - 1.0).abs() < 1e-10);
            }
        }
        let coarse = build_mesh(2, 0.5).unwrap();
        assert!(coarse.boundary.iter().any(|b| !b));
    }

    #[test]
    fn ball_mesh_volume_converges() {
        let exact = 4.0 * PI / 3.0;
        let e1 = (build_mesh(3, 0.4).unwrap().total_volume() - exact).abs();
        let m = build_mesh(3, 0.2).unwrap();
        let e2 = (m.total_volume() - exact).abs();
        assert!(e2 < 0.3 * e1, "{e1} {e2}");
        assert!(e2 < 0.05 * 0.2 * 0.2 * exact * 10.0);
        for (v, &b) in m.vertices.iter().zip(&m.boundary) {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!(r <= 1.0 + 1e-12);
            if b {
                assert!((r - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn boundary_weights_sum_to_perimeter() {
        let m = build_mesh(2, 0.1).unwrap();
        let s: f64 = m.geometry().boundary_weight.iter().sum();
        assert!((s - 2.0 * PI).abs() < 0.01);
        let m = build_mesh(3, 0.25).unwrap();
        let s: f64 = m.geometry().boundary_weight.iter().sum();
        assert!((s - 4.0 * PI).abs() < 0.2);
        // every boundary facet has only boundary vertices
        for f in m.boundary_facets() {
            assert!(f.iter().all(|&i| m.boundary[i]));
        }
    }

    #[test]
    fn text_roundtrip_and_validation() {
        let m = build_mesh(2, 0.3).unwrap();
        let back = BallMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.simplices, m.simplices);
        assert_eq!(back.boundary, m.boundary);
        assert!(build_mesh(2, 1.5).is_err());
        assert!(build_mesh(4, 0.1).is_err());
        assert!(BallMesh::from_text("nonsense").is_err());
    }
}

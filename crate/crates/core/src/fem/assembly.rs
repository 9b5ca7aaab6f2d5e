use super::mesh::{BallMesh, MeshGeometry};
use crate::linalg::{CsrMatrix, Mat3};
use crate::par::{self, Execution};

/// `K_ij = Σ_e |e| ∇φ_iᵀ A_e ∇φ_j` (one-point rule).
pub(crate) fn assemble_stiffness(mesh: &BallMesh, geom: &MeshGeometry, a: &[Mat3], exec: Execution) -> CsrMatrix {
    let nv = mesh.dim + 1;
    let locals = par::map_range(exec, mesh.n_simplices(), |e| {
        let g = &geom.grads[e];
        let vol = geom.volumes[e];
        let mut loc = [0.0; 16];
        for i in 0..nv {
            let ag = a[e].mul_vec(&g[i]);
            for j in 0..nv {
                loc[4 * j + i] = vol * (ag[0] * g[j][0] + ag[1] * g[j][1] + ag[2] * g[j][2]);
            }
        }
        loc
    });
    scatter(mesh, geom, &locals)
}

/// `M_ij = Σ_e |e| Σ_q w_q J_q φ_i(x_q) φ_j(x_q)`.
pub(crate) fn assemble_mass(mesh: &BallMesh, geom: &MeshGeometry, j: &[[f64; 4]], exec: Execution) -> CsrMatrix {
    let nv = mesh.dim + 1;
    let (bary, w) = MeshGeometry::mass_rule(mesh.dim);
    let locals = par::map_range(exec, mesh.n_simplices(), |e| {
        let vol = geom.volumes[e];
        let mut loc = [0.0; 16];
        for (q, b) in bary.iter().enumerate() {
            let f = vol * w * j[e][q];
            for a in 0..nv {
                for c in 0..nv {
                    loc[4 * a + c] += f * b[a] * b[c];
                }
            }
        }
        loc
    });
    scatter(mesh, geom, &locals)
}

fn scatter(mesh: &BallMesh, geom: &MeshGeometry, locals: &[[f64; 16]]) -> CsrMatrix {
    let nv = mesh.dim + 1;
    let mut m = CsrMatrix::zeros(geom.pattern.clone());
    for (loc, slots) in locals.iter().zip(&geom.slots) {
        for a in 0..nv {
            for b in 0..nv {
                m.values[slots[4 * a + b]] += loc[4 * a + b];
            }
        }
    }
    m
}

//! Bilinear finite elements for the deterministic advection-diffusion weak form.
//!
//! All assemblers work on the structured [`Mesh`], integrate each element with
//! the 2x2 Gauss rule and eliminate the (homogeneous) Dirichlet boundary, so
//! the returned matrices are `N_x x N_x` over interior nodes only.

mod mesh;
mod sparse;

pub use mesh::{build_mesh, Domain, Mesh};
pub use sparse::SparseMatrix;

use crate::error::{Result, SgError};
use crate::random_field::FieldExpansion;

const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
// Reference-corner signs, counter-clockwise from lower-left.
const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Shape values and reference gradients `dN/dxi`, `dN/deta` at one point.
fn reference_shape(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let mut n = [0.0; 4];
    let mut grad = [[0.0; 2]; 4];
    for (a, c) in CORNERS.iter().enumerate() {
        n[a] = 0.25 * (1.0 + c[0] * xi) * (1.0 + c[1] * eta);
        grad[a] = [0.25 * c[0] * (1.0 + c[1] * eta), 0.25 * c[1] * (1.0 + c[0] * xi)];
    }
    (n, grad)
}

fn for_each_gauss_point(mut f: impl FnMut(&[f64; 4], &[[f64; 2]; 4])) {
    for &eta in &GAUSS_2 {
        for &xi in &GAUSS_2 {
            let (n, g) = reference_shape(xi, eta);
            f(&n, &g);
        }
    }
}

/// Element diffusion matrix `int a grad N_a . grad N_b` on an `hx x hy`
/// rectangle, with `a` interpolated bilinearly from the corner values.
pub fn element_diffusion(hx: f64, hy: f64, coeff: [f64; 4]) -> [[f64; 4]; 4] {
    let det = 0.25 * hx * hy;
    let mut k = [[0.0; 4]; 4];
    for_each_gauss_point(|n, g_ref| {
        let a: f64 = (0..4).map(|c| coeff[c] * n[c]).sum();
        let g: Vec<[f64; 2]> = g_ref.iter().map(|g| [g[0] * 2.0 / hx, g[1] * 2.0 / hy]).collect();
        for r in 0..4 {
            for s in 0..4 {
                k[r][s] += a * (g[r][0] * g[s][0] + g[r][1] * g[s][1]) * det;
            }
        }
    });
    k
}

/// Element advection matrix `int (w . grad N_s) N_r` (row = test function).
pub fn element_advection(hx: f64, hy: f64, w: [f64; 2]) -> [[f64; 4]; 4] {
    let det = 0.25 * hx * hy;
    let mut k = [[0.0; 4]; 4];
    for_each_gauss_point(|n, g_ref| {
        for s in 0..4 {
            let conv = w[0] * g_ref[s][0] * 2.0 / hx + w[1] * g_ref[s][1] * 2.0 / hy;
            for r in 0..4 {
                k[r][s] += conv * n[r] * det;
            }
        }
    });
    k
}

fn assemble_with(mesh: &Mesh, mut element: impl FnMut(&[usize; 4]) -> [[f64; 4]; 4]) -> SparseMatrix {
    let mut triplets = Vec::with_capacity(16 * mesh.elements().len());
    for nodes in mesh.elements() {
        let ke = element(nodes);
        for r in 0..4 {
            let Some(row) = mesh.dof(nodes[r]) else { continue };
            for s in 0..4 {
                if let Some(col) = mesh.dof(nodes[s]) {
                    triplets.push((row, col, ke[r][s]));
                }
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_dofs(), mesh.n_dofs(), triplets)
}

/// Diffusion matrix for a nodal coefficient field (one value per mesh node).
pub fn assemble_diffusion(mesh: &Mesh, coeff: &[f64]) -> Result<SparseMatrix> {
    if coeff.len() != mesh.n_nodes() {
        return Err(SgError::DimensionMismatch { expected: mesh.n_nodes(), got: coeff.len() });
    }
    let (hx, hy) = (mesh.hx(), mesh.hy());
    Ok(assemble_with(mesh, |nodes| {
        element_diffusion(hx, hy, [coeff[nodes[0]], coeff[nodes[1]], coeff[nodes[2]], coeff[nodes[3]]])
    }))
}

/// Advection matrix for a constant velocity.
pub fn assemble_advection(mesh: &Mesh, w: [f64; 2]) -> SparseMatrix {
    let ke = element_advection(mesh.hx(), mesh.hy(), w);
    assemble_with(mesh, |_| ke)
}

/// Consistent load vector for a constant source `f`, interior dofs only.
pub fn assemble_load(mesh: &Mesh, f: f64) -> Vec<f64> {
    let det = 0.25 * mesh.hx() * mesh.hy();
    let mut fe = [0.0; 4];
    for_each_gauss_point(|n, _| {
        for a in 0..4 {
            fe[a] += f * n[a] * det;
        }
    });
    let mut load = vec![0.0; mesh.n_dofs()];
    for nodes in mesh.elements() {
        for a in 0..4 {
            if let Some(d) = mesh.dof(nodes[a]) {
                load[d] += fe[a];
            }
        }
    }
    load
}

/// Stiffness coefficients `{K_i}` and the deterministic load.
#[derive(Clone, Debug)]
pub struct StiffnessFamily {
    pub matrices: Vec<SparseMatrix>,
    pub load: Vec<f64>,
}

/// `K_0 = advection + diffusion(a_0)`, `K_i = diffusion(a_i)` for `i >= 1`,
/// and the load for `f = 1`. Advection is deterministic, so it only enters
/// the mean matrix.
pub fn assemble_stiffness_family(mesh: &Mesh, field: &FieldExpansion, w: [f64; 2]) -> Result<StiffnessFamily> {
    let mut matrices = Vec::with_capacity(field.coeffs().len());
    for (i, coeff) in field.coeffs().iter().enumerate() {
        let diffusion = assemble_diffusion(mesh, coeff)?;
        matrices.push(if i == 0 { diffusion.add(&assemble_advection(mesh, w)) } else { diffusion });
    }
    Ok(StiffnessFamily { matrices, load: assemble_load(mesh, 1.0) })
}

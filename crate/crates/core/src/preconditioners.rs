//! Preconditioners for GMRES on the stochastic Galerkin system.
//!
//! Every preconditioner here is a fixed linear map (fixed sweep counts from
//! a zero initial guess, no convergence tests), so it can be used with
//! standard right-preconditioned GMRES.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Result, SgError};
use crate::krylov::{LinearOperator, MeanInverse};
use crate::relaxation::{gauss_seidel_sweep, jacobi_sweep, GaussSeidelState};
use crate::sg_operator::{BlockVector, SGOperator};

/// Which preconditioner to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecondKind {
    MeanBased,
    GaussSeidel { sweeps: usize },
    ApproxGaussSeidel,
    ApproxJacobi,
    KroneckerProduct,
}

impl PrecondKind {
    pub fn short_name(self) -> &'static str {
        match self {
            PrecondKind::MeanBased => "MB",
            PrecondKind::GaussSeidel { .. } => "GS_prec",
            PrecondKind::ApproxGaussSeidel => "AGS",
            PrecondKind::ApproxJacobi => "AJ",
            PrecondKind::KroneckerProduct => "KP",
        }
    }
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for PrecondKind {
    type Err = SgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MB" => Ok(PrecondKind::MeanBased),
            "GS_prec" => Ok(PrecondKind::GaussSeidel { sweeps: 1 }),
            "AGS" => Ok(PrecondKind::ApproxGaussSeidel),
            "AJ" => Ok(PrecondKind::ApproxJacobi),
            "KP" => Ok(PrecondKind::KroneckerProduct),
            other => Err(SgError::InvalidArgument(format!("unknown preconditioner '{other}'"))),
        }
    }
}

fn solve_blocks(mean: &dyn MeanInverse, r: &[f64], z: &mut [f64], n: usize) {
    z.par_chunks_mut(n).zip(r.par_chunks(n)).for_each(|(out, b)| mean.solve(b, out));
}

/// `z_k = P_0^{-1} r_k` for every block.
pub fn mean_based_apply(r: &BlockVector, mean: &dyn MeanInverse) -> BlockVector {
    let mut z = BlockVector::zeros(r.n_blocks(), r.block_len());
    solve_blocks(mean, r.as_slice(), z.as_mut_slice(), r.block_len());
    z
}

/// `sweeps` Gauss-Seidel-mean sweeps on `(op, r)` from zero.
pub fn gs_precond_apply(r: &BlockVector, op: &SGOperator, mean: &dyn MeanInverse, sweeps: usize) -> BlockVector {
    let mut state = GaussSeidelState::zero(r.as_slice());
    for _ in 0..sweeps.max(1) {
        gauss_seidel_sweep(op, mean, r.as_slice(), &mut state, false);
    }
    BlockVector::from_vec(r.n_blocks(), r.block_len(), state.u).expect("block shape")
}

/// One Gauss-Seidel sweep on the first-order operator with `P_0` as the
/// diagonal solve.
pub fn ags_precond_apply(r: &BlockVector, op_first_order: &SGOperator, p0: &dyn MeanInverse) -> BlockVector {
    gs_precond_apply(r, op_first_order, p0, 1)
}

/// Two Jacobi sweeps on the first-order operator with `P_0` as the diagonal
/// solve. The first sweep alone equals mean-based preconditioning.
pub fn aj_precond_apply(r: &BlockVector, op_first_order: &SGOperator, p0: &dyn MeanInverse) -> BlockVector {
    jacobi_sweeps(r, op_first_order, p0, 2)
}

/// `sweeps` Jacobi-mean sweeps from zero.
pub fn jacobi_sweeps(r: &BlockVector, op: &SGOperator, p0: &dyn MeanInverse, sweeps: usize) -> BlockVector {
    let mut u = vec![0.0; r.len()];
    let mut next = vec![0.0; r.len()];
    for _ in 0..sweeps {
        jacobi_sweep(op, p0, r.as_slice(), &u, &mut next, true);
        std::mem::swap(&mut u, &mut next);
    }
    BlockVector::from_vec(r.n_blocks(), r.block_len(), u).expect("block shape")
}

/// Stochastic factor `G` of the Kronecker preconditioner `G (x) K_0`.
#[derive(Clone, Debug)]
pub struct KroneckerG {
    pub weights: Vec<f64>,
    pub g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
}

impl KroneckerG {
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.g_inv
    }
}

/// `G = sum_i w_i G_i` with `G_i(j, k) = c_ijk` and
/// `w_i = tr(K_i^T K_0) / tr(K_0^T K_0)`.
pub fn kronecker_precond_build(op: &SGOperator) -> Result<KroneckerG> {
    let k0 = op.mean_matrix();
    let denom = k0.frobenius_dot(k0);
    if denom == 0.0 {
        return Err(SgError::Singular { column: 0 });
    }
    let weights: Vec<f64> = op.matrices().iter().map(|ki| ki.frobenius_dot(k0) / denom).collect();
    let n = op.n_blocks();
    let mut g = DMatrix::zeros(n, n);
    for &(i, j, k, c) in op.tensor().entries() {
        g[(j, k)] += weights[i] * c;
    }
    let lu = g.clone().lu();
    let g_inv = lu.try_inverse().ok_or(SgError::Singular { column: 0 })?;
    Ok(KroneckerG { weights, g, g_inv })
}

/// `(G (x) K_0)^{-1} r`: mean solves per block, then `z_k = sum_j (G^{-1})_kj y_j`.
pub fn kronecker_precond_apply(r: &BlockVector, g: &KroneckerG, mean: &dyn MeanInverse) -> BlockVector {
    let n = r.block_len();
    let mut y = vec![0.0; r.len()];
    solve_blocks(mean, r.as_slice(), &mut y, n);
    let mut z = BlockVector::zeros(r.n_blocks(), n);
    let g_inv = &g.g_inv;
    z.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(k, zk)| {
        for j in 0..r.n_blocks() {
            let w = g_inv[(k, j)];
            if w != 0.0 {
                for (zv, yv) in zk.iter_mut().zip(&y[j * n..(j + 1) * n]) {
                    *zv += w * yv;
                }
            }
        }
    });
    z
}

enum Inner<'a> {
    MeanBased,
    GaussSeidel { op: &'a SGOperator, sweeps: usize },
    FirstOrderGs(SGOperator),
    FirstOrderJacobi(SGOperator),
    Kronecker(KroneckerG),
}

/// A built preconditioner usable as a GMRES [`LinearOperator`].
pub struct Preconditioner<'a> {
    kind: PrecondKind,
    mean: &'a dyn MeanInverse,
    n_blocks: usize,
    block_len: usize,
    inner: Inner<'a>,
}

impl<'a> Preconditioner<'a> {
    pub fn build(kind: PrecondKind, op: &'a SGOperator, mean: &'a dyn MeanInverse) -> Result<Self> {
        let inner = match kind {
            PrecondKind::MeanBased => Inner::MeanBased,
            PrecondKind::GaussSeidel { sweeps } => {
                if sweeps == 0 {
                    return Err(SgError::InvalidArgument("Gauss-Seidel preconditioner needs >= 1 sweep".into()));
                }
                Inner::GaussSeidel { op, sweeps }
            }
            PrecondKind::ApproxGaussSeidel => Inner::FirstOrderGs(op.first_order()),
            PrecondKind::ApproxJacobi => Inner::FirstOrderJacobi(op.first_order()),
            PrecondKind::KroneckerProduct => Inner::Kronecker(kronecker_precond_build(op)?),
        };
        Ok(Self { kind, mean, n_blocks: op.n_blocks(), block_len: op.block_len(), inner })
    }

    pub fn kind(&self) -> PrecondKind {
        self.kind
    }

    /// Sparse products spent in operators owned by this preconditioner. The
    /// full Gauss-Seidel preconditioner borrows the system operator, so its
    /// products show up in that operator's counter instead.
    pub fn matvec_count(&self) -> usize {
        match &self.inner {
            Inner::FirstOrderGs(op) | Inner::FirstOrderJacobi(op) => op.matvec_count(),
            _ => 0,
        }
    }

    pub fn apply_block(&self, r: &BlockVector) -> BlockVector {
        match &self.inner {
            Inner::MeanBased => mean_based_apply(r, self.mean),
            Inner::GaussSeidel { op, sweeps } => gs_precond_apply(r, op, self.mean, *sweeps),
            Inner::FirstOrderGs(op) => ags_precond_apply(r, op, self.mean),
            Inner::FirstOrderJacobi(op) => aj_precond_apply(r, op, self.mean),
            Inner::Kronecker(g) => kronecker_precond_apply(r, g, self.mean),
        }
    }
}

impl LinearOperator for Preconditioner<'_> {
    fn dim(&self) -> usize {
        self.n_blocks * self.block_len
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let r = BlockVector::from_vec(self.n_blocks, self.block_len, x.to_vec()).expect("block shape");
        y.copy_from_slice(self.apply_block(&r).as_slice());
    }
}

//! The global stochastic Galerkin operator, applied matrix-free.
//!
//! Block `(k, j)` of the operator is `sum_i c_ijk K_i`. Applying it loops
//! over the nonzero `(i, j)` fibers of the triple-product tensor: each fiber
//! costs exactly one sparse product `K_i u_j`, which is then scattered into
//! every output block `k` it touches.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Result, SgError};
use crate::fem2d::SparseMatrix;
use crate::krylov::LinearOperator;
use crate::pc_basis::TripleProductTensor;

/// Largest system `assemble_explicit` will materialize.
pub const EXPLICIT_LIMIT: usize = 20_000;

/// Block-major vector: block `j` holds the chaos coefficient `u_j` of every
/// spatial dof.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    data: Vec<f64>,
    n_blocks: usize,
    block_len: usize,
}

impl BlockVector {
    pub fn zeros(n_blocks: usize, block_len: usize) -> Self {
        Self { data: vec![0.0; n_blocks * block_len], n_blocks, block_len }
    }

    pub fn from_vec(n_blocks: usize, block_len: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_blocks * block_len {
            return Err(SgError::DimensionMismatch { expected: n_blocks * block_len, got: data.len() });
        }
        Ok(Self { data, n_blocks, block_len })
    }

    /// Vector whose only nonzero block is block 0.
    pub fn from_mean_block(n_blocks: usize, mean: &[f64]) -> Self {
        let mut v = Self::zeros(n_blocks, mean.len());
        v.block_mut(0).copy_from_slice(mean);
        v
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.data[j * self.block_len..(j + 1) * self.block_len]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.block_len..(j + 1) * self.block_len]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// `||self - other|| / ||other||`.
    pub fn rel_diff(&self, other: &BlockVector) -> f64 {
        let diff: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let denom = other.norm();
        if denom == 0.0 {
            diff
        } else {
            diff / denom
        }
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Matrix-free stochastic Galerkin operator.
#[derive(Debug)]
pub struct SGOperator {
    matrices: Arc<Vec<SparseMatrix>>,
    tensor: TripleProductTensor,
    n_blocks: usize,
    block_len: usize,
    // Fibers with i >= 1 grouped by their j index.
    off_mean_by_block: Vec<Vec<usize>>,
    matvecs: AtomicUsize,
}

impl Clone for SGOperator {
    fn clone(&self) -> Self {
        Self {
            matrices: Arc::clone(&self.matrices),
            tensor: self.tensor.clone(),
            n_blocks: self.n_blocks,
            block_len: self.block_len,
            off_mean_by_block: self.off_mean_by_block.clone(),
            matvecs: AtomicUsize::new(0),
        }
    }
}

impl SGOperator {
    pub fn new(matrices: Vec<SparseMatrix>, tensor: TripleProductTensor) -> Result<Self> {
        Self::from_shared(Arc::new(matrices), tensor)
    }

    fn from_shared(matrices: Arc<Vec<SparseMatrix>>, tensor: TripleProductTensor) -> Result<Self> {
        if matrices.len() != tensor.n_coeff() {
            return Err(SgError::DimensionMismatch { expected: tensor.n_coeff(), got: matrices.len() });
        }
        let block_len = matrices[0].n_rows();
        if let Some(bad) = matrices.iter().find(|m| m.n_rows() != block_len || m.n_cols() != block_len) {
            return Err(SgError::DimensionMismatch { expected: block_len, got: bad.n_rows().max(bad.n_cols()) });
        }
        let n_blocks = tensor.n_basis();
        let mut off_mean_by_block = vec![Vec::new(); n_blocks];
        for (f, fiber) in tensor.fibers().iter().enumerate() {
            if fiber.i != 0 {
                off_mean_by_block[fiber.j].push(f);
            }
        }
        Ok(Self { matrices, tensor, n_blocks, block_len, off_mean_by_block, matvecs: AtomicUsize::new(0) })
    }

    /// Same matrices with the tensor restricted to coefficient slots `keep(i)`.
    pub fn restricted(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self::from_shared(Arc::clone(&self.matrices), self.tensor.restrict(keep))
            .expect("restriction keeps shapes")
    }

    /// Mean plus first-order terms only.
    pub fn first_order(&self) -> Self {
        Self::from_shared(Arc::clone(&self.matrices), self.tensor.first_order()).expect("restriction keeps shapes")
    }

    pub fn matrices(&self) -> &[SparseMatrix] {
        &self.matrices
    }

    pub fn mean_matrix(&self) -> &SparseMatrix {
        &self.matrices[0]
    }

    pub fn tensor(&self) -> &TripleProductTensor {
        &self.tensor
    }

    /// `N + 1`.
    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    /// `N_x`.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Diagonal mean coefficient `c_0kk`.
    pub fn mean_coeff(&self, k: usize) -> f64 {
        self.tensor.get(0, k, k)
    }

    /// Number of sparse products one `apply` performs.
    pub fn products_per_apply(&self) -> usize {
        self.tensor.fibers().len()
    }

    /// Total sparse products performed so far through this operator.
    pub fn matvec_count(&self) -> usize {
        self.matvecs.load(Ordering::Relaxed)
    }

    pub(crate) fn count_matvecs(&self, n: usize) {
        self.matvecs.fetch_add(n, Ordering::Relaxed);
    }

    /// Indices into `tensor().fibers()` of the fibers `(i >= 1, j)`.
    pub(crate) fn off_mean_fibers(&self, j: usize) -> &[usize] {
        &self.off_mean_by_block[j]
    }

    fn check(&self, u: &BlockVector) -> Result<()> {
        if u.n_blocks() != self.n_blocks || u.block_len() != self.block_len {
            return Err(SgError::DimensionMismatch { expected: self.n_blocks * self.block_len, got: u.len() });
        }
        Ok(())
    }

    pub fn apply(&self, u: &BlockVector) -> Result<BlockVector> {
        self.check(u)?;
        let mut v = BlockVector::zeros(self.n_blocks, self.block_len);
        self.apply_slices(u.as_slice(), v.as_mut_slice());
        Ok(v)
    }

    /// `v = K u` on raw block-major slices.
    pub fn apply_slices(&self, u: &[f64], v: &mut [f64]) {
        let n = self.block_len;
        v.iter_mut().for_each(|x| *x = 0.0);
        let mut y = vec![0.0; n];
        for fiber in self.tensor.fibers() {
            self.matrices[fiber.i].mul_vec(&u[fiber.j * n..(fiber.j + 1) * n], &mut y);
            for &(k, c) in &fiber.entries {
                for (o, yv) in v[k * n..(k + 1) * n].iter_mut().zip(&y) {
                    *o += c * yv;
                }
            }
        }
        self.count_matvecs(self.tensor.fibers().len());
    }

    /// `rhs_k -= sum_{i>=1, j} c_ijk K_i u_j` using one product per fiber.
    pub(crate) fn subtract_off_mean(&self, u: &[f64], rhs: &mut [f64]) {
        let n = self.block_len;
        let mut y = vec![0.0; n];
        let mut count = 0;
        for fiber in self.tensor.fibers().iter().filter(|f| f.i != 0) {
            self.matrices[fiber.i].mul_vec(&u[fiber.j * n..(fiber.j + 1) * n], &mut y);
            count += 1;
            for &(k, c) in &fiber.entries {
                for (o, yv) in rhs[k * n..(k + 1) * n].iter_mut().zip(&y) {
                    *o -= c * yv;
                }
            }
        }
        self.count_matvecs(count);
    }

    /// Dense materialization, for small oracle checks only.
    pub fn assemble_explicit(&self) -> Result<DMatrix<f64>> {
        let size = self.n_blocks * self.block_len;
        if size > EXPLICIT_LIMIT {
            return Err(SgError::OracleTooLarge { size, limit: EXPLICIT_LIMIT });
        }
        let n = self.block_len;
        let mut dense = DMatrix::zeros(size, size);
        for &(i, j, k, c) in self.tensor.entries() {
            let m = &self.matrices[i];
            for r in 0..n {
                for (col, val) in m.row(r) {
                    dense[(k * n + r, j * n + col)] += c * val;
                }
            }
        }
        Ok(dense)
    }

    /// `pattern[j][k]` is true when block `(j, k)` has any nonzero `c_ijk`.
    pub fn block_sparsity(&self) -> Vec<Vec<bool>> {
        let mut pattern = vec![vec![false; self.n_blocks]; self.n_blocks];
        for &(_, j, k, _) in self.tensor.entries() {
            pattern[j][k] = true;
        }
        pattern
    }
}

impl LinearOperator for SGOperator {
    fn dim(&self) -> usize {
        self.n_blocks * self.block_len
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_slices(x, y);
    }
}

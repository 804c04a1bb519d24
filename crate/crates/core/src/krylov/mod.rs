//! Right-preconditioned GMRES and the reusable mean-matrix solver.

mod banded;
mod gmres;

pub use banded::BandedLu;
pub use gmres::{gmres, GmresConfig};

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use crate::error::{Result, SgError};
use crate::fem2d::SparseMatrix;

/// Anything that maps a vector to a vector of the same length.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Identity map, handy as a trivial operator or preconditioner.
#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// Action of `P_0^{-1}` for some `P_0 ~ K_0`.
pub trait MeanInverse: Sync {
    fn block_len(&self) -> usize;
    /// `x = P_0^{-1} b`.
    fn solve(&self, b: &[f64], x: &mut [f64]);
    /// Solves performed so far, if tracked.
    fn solve_count(&self) -> usize {
        0
    }
}

/// Sparse direct factorization of `scale * K_0`, factored once and reused
/// for every inner solve.
#[derive(Debug)]
pub struct MeanSolver {
    lu: BandedLu,
    scale: f64,
    solves: AtomicUsize,
}

impl MeanSolver {
    pub fn new(k0: &SparseMatrix, scale: f64) -> Result<Self> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(SgError::InvalidArgument(format!("mean solver scale must be finite and nonzero, got {scale}")));
        }
        Ok(Self { lu: BandedLu::factor(k0, scale)?, scale, solves: AtomicUsize::new(0) })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Number of factorizations performed; always one.
    pub fn factorization_count(&self) -> usize {
        1
    }

}

/// Free-function form of [`MeanSolver::new`].
pub fn mean_solver_build(k0: &SparseMatrix, scale: f64) -> Result<MeanSolver> {
    MeanSolver::new(k0, scale)
}

impl MeanInverse for MeanSolver {
    fn block_len(&self) -> usize {
        self.lu.n()
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        x.copy_from_slice(b);
        self.lu.solve_in_place(x);
        self.solves.fetch_add(1, Ordering::Relaxed);
    }

    fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub diverged: bool,
    pub breakdown: bool,
    /// Outer iterations (GMRES steps or relaxation sweeps).
    pub iterations: usize,
    /// Relative residual norms; entry 0 is the initial residual.
    pub residual_history: Vec<f64>,
    /// Sparse `K_i` products spent in operator applications.
    pub matvec_count: usize,
    /// Inner mean solves.
    pub inner_solve_count: usize,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    /// CSV `iter,relres`.
    pub fn write_history_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,relres")?;
        for (i, r) in self.residual_history.iter().enumerate() {
            writeln!(w, "{i},{r:.17e}")?;
        }
        Ok(())
    }
}

//! Jacobi-mean and Gauss-Seidel-mean outer iterations.
//!
//! Both split the Galerkin operator around its mean blocks `c_0kk K_0`, so
//! every inner solve uses the same factorization of `K_0`. The sweeps are
//! also used, with a fixed count and zero initial guess, as preconditioners.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Result, SgError};
use crate::krylov::{MeanInverse, SolveReport};
use crate::sg_operator::{norm2, BlockVector, SGOperator};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxConfig {
    /// Outer relative-residual tolerance.
    pub tol: f64,
    /// Recorded only; the direct mean solver is always more accurate.
    pub inner_tol: f64,
    pub max_outer: usize,
    /// Relative residual growth over the initial one that counts as divergence.
    pub divergence_factor: f64,
    /// Run the independent Jacobi inner solves of a sweep on the rayon pool.
    pub parallel: bool,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self { tol: 1e-12, inner_tol: 3e-13, max_outer: 5000, divergence_factor: 1e4, parallel: false }
    }
}

impl RelaxConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.divergence_factor > 1.0) {
            return Err(SgError::InvalidArgument(format!(
                "relaxation needs tol > 0 and divergence_factor > 1, got {} and {}",
                self.tol, self.divergence_factor
            )));
        }
        Ok(())
    }
}

fn check_shapes(op: &SGOperator, f: &BlockVector, mean: &dyn MeanInverse) -> Result<()> {
    if f.n_blocks() != op.n_blocks() || f.block_len() != op.block_len() {
        return Err(SgError::DimensionMismatch { expected: op.n_blocks() * op.block_len(), got: f.len() });
    }
    if mean.block_len() != op.block_len() {
        return Err(SgError::DimensionMismatch { expected: op.block_len(), got: mean.block_len() });
    }
    for k in 0..op.n_blocks() {
        if op.mean_coeff(k) == 0.0 {
            return Err(SgError::InvalidArgument(format!("mean coefficient c_0{k}{k} vanishes")));
        }
    }
    Ok(())
}

/// One Jacobi sweep: `c_0kk P_0 u_new_k = f_k - sum_{i>=1, j} c_ijk K_i u_old_j`.
pub fn jacobi_sweep(
    op: &SGOperator,
    mean: &dyn MeanInverse,
    f: &[f64],
    u_old: &[f64],
    u_new: &mut [f64],
    parallel: bool,
) {
    let n = op.block_len();
    let mut rhs = f.to_vec();
    op.subtract_off_mean(u_old, &mut rhs);
    let solve = |(k, (out, b)): (usize, (&mut [f64], &[f64]))| {
        mean.solve(b, out);
        let c = op.mean_coeff(k);
        if c != 1.0 {
            out.iter_mut().for_each(|v| *v /= c);
        }
    };
    if parallel {
        u_new.par_chunks_mut(n).zip(rhs.par_chunks(n)).enumerate().for_each(solve);
    } else {
        u_new.chunks_mut(n).zip(rhs.chunks(n)).enumerate().for_each(solve);
    }
}

/// Working state of the Gauss-Seidel mean iteration.
pub(crate) struct GaussSeidelState {
    pub u: Vec<f64>,
    /// Per-block right-hand sides awaiting their next solve.
    pub z: Vec<f64>,
    /// Incrementally updated residual `f - K u`.
    pub r: Vec<f64>,
}

impl GaussSeidelState {
    /// State for initial guess zero: `z = f`.
    pub fn zero(f: &[f64]) -> Self {
        Self { u: vec![0.0; f.len()], z: f.to_vec(), r: f.to_vec() }
    }

    /// State for an arbitrary initial guess.
    pub fn from_guess(op: &SGOperator, f: &[f64], u0: &[f64]) -> Self {
        let mut z = f.to_vec();
        op.subtract_off_mean(u0, &mut z);
        let mut ku = vec![0.0; f.len()];
        op.apply_slices(u0, &mut ku);
        let r = f.iter().zip(&ku).map(|(a, b)| a - b).collect();
        Self { u: u0.to_vec(), z, r }
    }
}

/// One forward Gauss-Seidel sweep with deduplicated products.
///
/// After solving block `k`, each `y = K_i u_k` (`i >= 1`) is formed once and
/// subtracted, scaled by `c_ijk`, from every coupled `z_j` (and `r_j` when
/// `track_residual`). `z_k` is reset to `f_k` just before, so the next sweep
/// sees the newest value of every block.
pub(crate) fn gauss_seidel_sweep(
    op: &SGOperator,
    mean: &dyn MeanInverse,
    f: &[f64],
    state: &mut GaussSeidelState,
    track_residual: bool,
) {
    let n = op.block_len();
    let fibers = op.tensor().fibers();
    let mut y = vec![0.0; n];
    let mut products = 0;
    if track_residual {
        state.r.copy_from_slice(f);
    }
    for k in 0..op.n_blocks() {
        let block = k * n..(k + 1) * n;
        let c_kk = op.mean_coeff(k);
        mean.solve(&state.z[block.clone()], &mut state.u[block.clone()]);
        if c_kk != 1.0 {
            state.u[block.clone()].iter_mut().for_each(|v| *v /= c_kk);
        }
        state.z[block.clone()].copy_from_slice(&f[block.clone()]);
        for &fi in op.off_mean_fibers(k) {
            let fiber = &fibers[fi];
            op.matrices()[fiber.i].mul_vec(&state.u[block.clone()], &mut y);
            products += 1;
            for &(j, c) in &fiber.entries {
                let target = j * n..(j + 1) * n;
                for (zv, yv) in state.z[target.clone()].iter_mut().zip(&y) {
                    *zv -= c * yv;
                }
                if track_residual {
                    for (rv, yv) in state.r[target.clone()].iter_mut().zip(&y) {
                        *rv -= c * yv;
                    }
                }
            }
        }
        if track_residual {
            op.mean_matrix().mul_vec(&state.u[block.clone()], &mut y);
            products += 1;
            for (rv, yv) in state.r[block].iter_mut().zip(&y) {
                *rv -= c_kk * yv;
            }
        }
    }
    op.count_matvecs(products);
}

fn relres(r: &[f64], f_norm: f64) -> f64 {
    norm2(r) / f_norm
}

fn finish(
    op: &SGOperator,
    u: Vec<f64>,
    mut report: SolveReport,
    start: Instant,
    mv0: usize,
    mean_count: impl Fn() -> usize,
    solves0: usize,
) -> (BlockVector, SolveReport) {
    report.matvec_count = op.matvec_count() - mv0;
    report.inner_solve_count = mean_count() - solves0;
    report.wall_time = start.elapsed();
    (BlockVector::from_vec(op.n_blocks(), op.block_len(), u).expect("block shape"), report)
}

/// Jacobi-mean solver from a zero initial guess.
pub fn jacobi_solve(
    op: &SGOperator,
    f: &BlockVector,
    cfg: &RelaxConfig,
    mean: &dyn MeanInverse,
) -> Result<(BlockVector, SolveReport)> {
    let u0 = BlockVector::zeros(op.n_blocks(), op.block_len());
    jacobi_solve_from(op, f, &u0, cfg, mean)
}

/// Jacobi-mean solver from the initial guess `u0`.
pub fn jacobi_solve_from(
    op: &SGOperator,
    f: &BlockVector,
    u0: &BlockVector,
    cfg: &RelaxConfig,
    mean: &dyn MeanInverse,
) -> Result<(BlockVector, SolveReport)> {
    cfg.validate()?;
    check_shapes(op, f, mean)?;
    let start = Instant::now();
    let (mv0, solves0) = (op.matvec_count(), mean.solve_count());
    let mut report = SolveReport::default();
    let f_norm = f.norm();
    let mut u = u0.as_slice().to_vec();
    if f_norm == 0.0 {
        report.converged = true;
        report.residual_history.push(0.0);
        return Ok(finish(op, vec![0.0; u.len()], report, start, mv0, || mean.solve_count(), solves0));
    }
    let mut ku = vec![0.0; u.len()];
    op.apply_slices(&u, &mut ku);
    let residual = |ku: &[f64]| -> Vec<f64> { f.as_slice().iter().zip(ku).map(|(a, b)| a - b).collect() };
    let mut rel = relres(&residual(&ku), f_norm);
    let initial = rel;
    report.residual_history.push(rel);
    let mut u_new = vec![0.0; u.len()];
    while rel > cfg.tol {
        if report.iterations >= cfg.max_outer {
            break;
        }
        jacobi_sweep(op, mean, f.as_slice(), &u, &mut u_new, cfg.parallel);
        std::mem::swap(&mut u, &mut u_new);
        report.iterations += 1;
        op.apply_slices(&u, &mut ku);
        rel = relres(&residual(&ku), f_norm);
        report.residual_history.push(rel);
        if !rel.is_finite() || rel > cfg.divergence_factor * initial {
            report.diverged = true;
            break;
        }
    }
    report.converged = rel <= cfg.tol;
    Ok(finish(op, u, report, start, mv0, || mean.solve_count(), solves0))
}

/// Gauss-Seidel-mean solver from a zero initial guess.
pub fn gauss_seidel_solve(
    op: &SGOperator,
    f: &BlockVector,
    cfg: &RelaxConfig,
    mean: &dyn MeanInverse,
) -> Result<(BlockVector, SolveReport)> {
    let u0 = BlockVector::zeros(op.n_blocks(), op.block_len());
    gauss_seidel_solve_from(op, f, &u0, cfg, mean)
}

/// Sweeps between full-residual checks of the incremental residual.
const DRIFT_CHECK_EVERY: usize = 10;
const DRIFT_TOL: f64 = 1e-10;

/// Gauss-Seidel-mean solver from the initial guess `u0`.
pub fn gauss_seidel_solve_from(
    op: &SGOperator,
    f: &BlockVector,
    u0: &BlockVector,
    cfg: &RelaxConfig,
    mean: &dyn MeanInverse,
) -> Result<(BlockVector, SolveReport)> {
    cfg.validate()?;
    check_shapes(op, f, mean)?;
    let start = Instant::now();
    let (mv0, solves0) = (op.matvec_count(), mean.solve_count());
    let mut report = SolveReport::default();
    let f_norm = f.norm();
    if f_norm == 0.0 {
        report.converged = true;
        report.residual_history.push(0.0);
        return Ok(finish(op, vec![0.0; f.len()], report, start, mv0, || mean.solve_count(), solves0));
    }
    let mut state = if u0.norm() == 0.0 {
        GaussSeidelState::zero(f.as_slice())
    } else {
        GaussSeidelState::from_guess(op, f.as_slice(), u0.as_slice())
    };
    let mut rel = relres(&state.r, f_norm);
    let initial = rel;
    report.residual_history.push(rel);
    let mut ku = vec![0.0; f.len()];
    while rel > cfg.tol {
        if report.iterations >= cfg.max_outer {
            break;
        }
        gauss_seidel_sweep(op, mean, f.as_slice(), &mut state, true);
        report.iterations += 1;
        if report.iterations % DRIFT_CHECK_EVERY == 0 {
            op.apply_slices(&state.u, &mut ku);
            let exact: Vec<f64> = f.as_slice().iter().zip(&ku).map(|(a, b)| a - b).collect();
            let drift = norm2(&exact.iter().zip(&state.r).map(|(a, b)| a - b).collect::<Vec<_>>());
            if drift > DRIFT_TOL * f_norm {
                state.r = exact;
            }
        }
        rel = relres(&state.r, f_norm);
        report.residual_history.push(rel);
        if !rel.is_finite() || rel > cfg.divergence_factor * initial {
            report.diverged = true;
            break;
        }
    }
    report.converged = rel <= cfg.tol;
    Ok(finish(op, state.u, report, start, mv0, || mean.solve_count(), solves0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem2d::SparseMatrix;
    use crate::krylov::MeanSolver;
    use crate::pc_basis::{triple_products, Family, MultiIndexBasis, TensorMode};

    #[test]
    fn deterministic_system_takes_one_sweep() {
        let basis = MultiIndexBasis::new(2, 0, Family::Legendre).unwrap();
        let tensor = triple_products(&basis, TensorMode::Pce, 0, 1e-12).unwrap();
        let k0 = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, -1.0), (1, 1, 3.0)]);
        let op = SGOperator::new(vec![k0.clone()], tensor).unwrap();
        let mean = MeanSolver::new(&k0, 1.0).unwrap();
        let f = BlockVector::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        for solve in [jacobi_solve, gauss_seidel_solve] {
            let (u, report) = solve(&op, &f, &RelaxConfig::default(), &mean).unwrap();
            assert!(report.converged);
            assert_eq!(report.iterations, 1);
            let ku = op.apply(&u).unwrap();
            assert!(ku.rel_diff(&f) < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        let cfg = RelaxConfig { divergence_factor: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = RelaxConfig { tol: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}

mod common;

use common::{columns_of, random_block, rng, small_problem, sparse_to_dense};
use nalgebra::DMatrix;
use sgkit::krylov::{LinearOperator, MeanSolver};
use sgkit::pc_basis::{triple_products, Family, MultiIndexBasis, TensorMode};
use sgkit::preconditioners::{
    aj_precond_apply, ags_precond_apply, gs_precond_apply, kronecker_precond_build, mean_based_apply, PrecondKind,
    Preconditioner,
};
use sgkit::sg_operator::{BlockVector, SGOperator};

/// Block-diagonal `diag(c_0kk K_0)`.
fn mean_diagonal(op: &SGOperator) -> DMatrix<f64> {
    let n = op.block_len();
    let k0 = sparse_to_dense(op.mean_matrix());
    let mut d = DMatrix::zeros(op.n_blocks() * n, op.n_blocks() * n);
    for k in 0..op.n_blocks() {
        d.view_mut((k * n, k * n), (n, n)).copy_from(&(&k0 * op.mean_coeff(k)));
    }
    d
}

/// Strictly block-lower part of `a` (block row > block column).
fn strict_block_lower(a: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| if r / n > c / n { a[(r, c)] } else { 0.0 })
}

fn solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone().lu().solve(&nalgebra::DVector::from_column_slice(b)).unwrap().as_slice().to_vec()
}

fn max_rel(x: &[f64], y: &[f64]) -> f64 {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

#[test]
fn mean_based_matches_block_diagonal_inverse() {
    let p = small_problem(true, 2, 2, 0.2, 5);
    let r = random_block(&mut rng(1), p.op.n_blocks(), p.op.block_len());
    let z = mean_based_apply(&r, &p.mean);
    let n = p.op.block_len();
    let k0 = sparse_to_dense(p.op.mean_matrix());
    for k in 0..p.op.n_blocks() {
        let want = solve(&k0, r.block(k));
        assert!(max_rel(z.block(k), &want) < 1e-12);
        assert_eq!(z.block(k).len(), n);
    }
}

#[test]
fn gauss_seidel_one_sweep_matches_dense_forward_solve() {
    for lognormal in [false, true] {
        let p = small_problem(lognormal, 2, 2, 0.25, 5);
        let a = p.op.assemble_explicit().unwrap();
        let m = mean_diagonal(&p.op) + strict_block_lower(&a, p.op.block_len());
        let r = random_block(&mut rng(2), p.op.n_blocks(), p.op.block_len());
        let z = gs_precond_apply(&r, &p.op, &p.mean, 1);
        assert!(max_rel(z.as_slice(), &solve(&m, r.as_slice())) < 1e-11, "lognormal={lognormal}");
    }
}

#[test]
fn gauss_seidel_two_sweeps_matches_dense_splitting() {
    let p = small_problem(true, 2, 2, 0.25, 4);
    let a = p.op.assemble_explicit().unwrap();
    let m = mean_diagonal(&p.op) + strict_block_lower(&a, p.op.block_len());
    let r = random_block(&mut rng(3), p.op.n_blocks(), p.op.block_len());
    let z1 = solve(&m, r.as_slice());
    let n_minus_a_z1 = (&m - &a) * nalgebra::DVector::from_column_slice(&z1);
    let rhs: Vec<f64> = r.as_slice().iter().zip(n_minus_a_z1.iter()).map(|(x, y)| x + y).collect();
    let z2 = solve(&m, &rhs);
    let got = gs_precond_apply(&r, &p.op, &p.mean, 2);
    assert!(max_rel(got.as_slice(), &z2) < 1e-11);
}

#[test]
fn approximate_gauss_seidel_uses_the_first_order_operator() {
    let p = small_problem(true, 2, 3, 0.25, 4);
    let first = p.op.first_order();
    assert!(first.tensor().nnz() < p.op.tensor().nnz());
    let a1 = first.assemble_explicit().unwrap();
    let m = mean_diagonal(&first) + strict_block_lower(&a1, first.block_len());
    let r = random_block(&mut rng(5), p.op.n_blocks(), p.op.block_len());
    let z = ags_precond_apply(&r, &first, &p.mean);
    assert!(max_rel(z.as_slice(), &solve(&m, r.as_slice())) < 1e-11);
}

#[test]
fn approximate_jacobi_is_two_dense_jacobi_steps() {
    let p = small_problem(true, 2, 3, 0.25, 4);
    let first = p.op.first_order();
    let a1 = first.assemble_explicit().unwrap();
    let d = mean_diagonal(&first);
    let r = random_block(&mut rng(6), p.op.n_blocks(), p.op.block_len());
    let z1 = solve(&d, r.as_slice());
    let coupling = (&d - &a1) * nalgebra::DVector::from_column_slice(&z1);
    let rhs: Vec<f64> = r.as_slice().iter().zip(coupling.iter()).map(|(x, y)| x + y).collect();
    let z2 = solve(&d, &rhs);
    let got = aj_precond_apply(&r, &first, &p.mean);
    assert!(max_rel(got.as_slice(), &z2) < 1e-11);
}

#[test]
fn kronecker_matches_dense_kron_inverse() {
    for lognormal in [false, true] {
        let p = small_problem(lognormal, 2, 2, 0.3, 5);
        let g = kronecker_precond_build(&p.op).unwrap();
        let k0 = sparse_to_dense(p.op.mean_matrix());
        // Weights from dense traces.
        let denom = (k0.transpose() * &k0).trace();
        for (i, ki) in p.op.matrices().iter().enumerate() {
            let w = (sparse_to_dense(ki).transpose() * &k0).trace() / denom;
            assert!((g.weights[i] - w).abs() < 1e-13 * w.abs().max(1.0));
        }
        assert!((g.weights[0] - 1.0).abs() < 1e-15);
        let kron = g.g.kronecker(&k0);
        let r = random_block(&mut rng(7), p.op.n_blocks(), p.op.block_len());
        let pre = Preconditioner::build(PrecondKind::KroneckerProduct, &p.op, &p.mean).unwrap();
        let z = pre.apply_block(&r);
        assert!(max_rel(z.as_slice(), &solve(&kron, r.as_slice())) < 1e-11, "lognormal={lognormal}");
    }
}

fn one_dim_operator(k1_equals_k0: bool) -> (SGOperator, MeanSolver) {
    let p = small_problem(false, 1, 3, 0.2, 4);
    let k0 = p.op.mean_matrix().clone();
    let k1 = if k1_equals_k0 { k0.clone() } else { k0.scaled(0.0) };
    let basis = MultiIndexBasis::new(1, 3, Family::Legendre).unwrap();
    let t = triple_products(&basis, TensorMode::Kl, 1, 0.0).unwrap();
    let mean = MeanSolver::new(&k0, 1.0).unwrap();
    (SGOperator::new(vec![k0, k1], t).unwrap(), mean)
}

#[test]
fn kronecker_weight_edge_cases() {
    let (op, _) = one_dim_operator(true);
    let g = kronecker_precond_build(&op).unwrap();
    assert_eq!(g.weights, vec![1.0, 1.0]);
    let (op, _) = one_dim_operator(false);
    let g = kronecker_precond_build(&op).unwrap();
    assert_eq!(g.weights, vec![1.0, 0.0]);
    assert_eq!(g.g, DMatrix::identity(4, 4));
    assert_eq!(g.inverse(), &DMatrix::identity(4, 4));
}

#[test]
fn every_preconditioner_is_nonsingular_and_deterministic() {
    let p = small_problem(true, 2, 2, 0.2, 4);
    let size = p.op.n_blocks() * p.op.block_len();
    for kind in [
        PrecondKind::MeanBased,
        PrecondKind::GaussSeidel { sweeps: 1 },
        PrecondKind::GaussSeidel { sweeps: 3 },
        PrecondKind::ApproxGaussSeidel,
        PrecondKind::ApproxJacobi,
        PrecondKind::KroneckerProduct,
    ] {
        let pre = Preconditioner::build(kind, &p.op, &p.mean).unwrap();
        assert_eq!(pre.kind(), kind);
        assert_eq!(pre.dim(), size);
        let m = columns_of(size, |x| {
            let mut y = vec![0.0; size];
            pre.apply(x, &mut y);
            y
        });
        let sv = m.singular_values();
        let (hi, lo) = (sv.max(), sv.min());
        assert!(lo > 1e-10 * hi, "{kind}: condition {}", hi / lo);
        let r = random_block(&mut rng(8), p.op.n_blocks(), p.op.block_len());
        let (a, b) = (pre.apply_block(&r), pre.apply_block(&r));
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()), "{kind}");
    }
}

#[test]
fn zero_sweeps_are_rejected() {
    let p = small_problem(false, 1, 1, 0.1, 3);
    assert!(Preconditioner::build(PrecondKind::GaussSeidel { sweeps: 0 }, &p.op, &p.mean).is_err());
    let zero = BlockVector::zeros(p.op.n_blocks(), p.op.block_len());
    assert_eq!(mean_based_apply(&zero, &p.mean).norm(), 0.0);
}

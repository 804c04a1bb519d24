mod common;

use common::{dense_solve, random_block, rel_err, rng, small_problem};
use sgkit::krylov::{MeanInverse, MeanSolver};
use sgkit::pc_basis::{triple_products, Family, MultiIndexBasis, TensorMode};
use sgkit::relaxation::{gauss_seidel_solve, gauss_seidel_solve_from, jacobi_solve, jacobi_solve_from, RelaxConfig};
use sgkit::sg_operator::{BlockVector, SGOperator};

fn off_mean_pairs(op: &SGOperator) -> usize {
    let pairs: std::collections::BTreeSet<(usize, usize)> =
        op.tensor().entries().iter().filter(|e| e.0 != 0).map(|e| (e.0, e.1)).collect();
    pairs.len()
}

#[test]
fn both_solvers_reach_the_dense_solution() {
    for lognormal in [false, true] {
        let p = small_problem(lognormal, 2, 3, 0.2, 6);
        let dense = p.op.assemble_explicit().unwrap();
        let want = dense_solve(&dense, p.rhs.as_slice());
        let cfg = RelaxConfig::default();
        let (u_gs, gs) = gauss_seidel_solve(&p.op, &p.rhs, &cfg, &p.mean).unwrap();
        let (u_j, j) = jacobi_solve(&p.op, &p.rhs, &cfg, &p.mean).unwrap();
        for (u, r, name) in [(&u_gs, &gs, "GS"), (&u_j, &j, "Jacobi")] {
            assert!(r.converged && !r.diverged, "{name} lognormal={lognormal}");
            assert!(r.final_residual() <= 1e-12);
            assert!(rel_err(u.as_slice(), &want) < 1e-10, "{name}: {}", rel_err(u.as_slice(), &want));
            assert_eq!(r.residual_history.len(), r.iterations + 1);
            assert_eq!(r.inner_solve_count, r.iterations * p.op.n_blocks());
        }
        assert!(gs.iterations < j.iterations);
    }
}

#[test]
fn jacobi_counts_products_per_sweep() {
    let p = small_problem(true, 2, 2, 0.2, 5);
    let (_, r) = jacobi_solve(&p.op, &p.rhs, &RelaxConfig::default(), &p.mean).unwrap();
    let per_apply = p.op.products_per_apply();
    assert_eq!(r.matvec_count, per_apply * (r.iterations + 1) + off_mean_pairs(&p.op) * r.iterations);
}

#[test]
fn nonzero_initial_guess() {
    let p = small_problem(true, 2, 2, 0.2, 5);
    let cfg = RelaxConfig::default();
    let (exact, _) = gauss_seidel_solve(&p.op, &p.rhs, &cfg, &p.mean).unwrap();

    // Starting at the solution needs no sweeps.
    for from_exact in [
        gauss_seidel_solve_from(&p.op, &p.rhs, &exact, &cfg, &p.mean).unwrap().1,
        jacobi_solve_from(&p.op, &p.rhs, &exact, &cfg, &p.mean).unwrap().1,
    ] {
        assert!(from_exact.converged);
        assert_eq!(from_exact.iterations, 0);
    }

    // A perturbed start converges to the same answer.
    let noise = random_block(&mut rng(9), p.op.n_blocks(), p.op.block_len());
    let start: Vec<f64> = exact.as_slice().iter().zip(noise.as_slice()).map(|(a, b)| a + 0.1 * b).collect();
    let start = BlockVector::from_vec(p.op.n_blocks(), p.op.block_len(), start).unwrap();
    let (u_gs, gs) = gauss_seidel_solve_from(&p.op, &p.rhs, &start, &cfg, &p.mean).unwrap();
    let (u_j, j) = jacobi_solve_from(&p.op, &p.rhs, &start, &cfg, &p.mean).unwrap();
    assert!(gs.converged && j.converged);
    assert!(gs.residual_history[0] > 1e-6);
    assert!(u_gs.rel_diff(&exact) < 1e-10);
    assert!(u_j.rel_diff(&exact) < 1e-10);
}

#[test]
fn zero_rhs_returns_zero() {
    let p = small_problem(false, 1, 2, 0.1, 4);
    let zero = BlockVector::zeros(p.op.n_blocks(), p.op.block_len());
    let (u, r) = jacobi_solve(&p.op, &zero, &RelaxConfig::default(), &p.mean).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 0);
    assert_eq!(u.norm(), 0.0);
}

/// One-variable operator `K_0 (x) I + 2 K_0 (x) C_1` on which block Jacobi has
/// spectral radius about 1.55.
fn strongly_coupled() -> (SGOperator, MeanSolver, BlockVector) {
    let p = small_problem(false, 1, 1, 0.1, 4);
    let k0 = p.op.mean_matrix().clone();
    let basis = MultiIndexBasis::new(1, 2, Family::Legendre).unwrap();
    let t = triple_products(&basis, TensorMode::Kl, 1, 0.0).unwrap();
    let mean = MeanSolver::new(&k0, 1.0).unwrap();
    let op = SGOperator::new(vec![k0.clone(), k0.scaled(2.0)], t).unwrap();
    let f = BlockVector::from_mean_block(3, p.rhs.block(0));
    (op, mean, f)
}

#[test]
fn jacobi_divergence_is_detected() {
    let (op, mean, f) = strongly_coupled();
    let (_, r) = jacobi_solve(&op, &f, &RelaxConfig::default(), &mean).unwrap();
    assert!(r.diverged && !r.converged);
    assert!(r.final_residual() > 1e4 * r.residual_history[0]);
    assert!(r.iterations < 100, "took {} sweeps to notice", r.iterations);
    assert_eq!(mean.block_len(), op.block_len());
}

#[test]
fn invalid_settings_are_rejected() {
    let p = small_problem(false, 1, 1, 0.1, 3);
    let bad = RelaxConfig { tol: 0.0, ..Default::default() };
    assert!(jacobi_solve(&p.op, &p.rhs, &bad, &p.mean).is_err());
    let short = BlockVector::zeros(p.op.n_blocks() + 1, p.op.block_len());
    assert!(gauss_seidel_solve(&p.op, &short, &RelaxConfig::default(), &p.mean).is_err());
}

//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the library's numerics: polynomials, Gauss rules,
//! Nystrom eigenvalues and the dense Galerkin matrix are all rebuilt from
//! scratch so they can serve as oracles.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgkit::fem2d::SparseMatrix;
use sgkit::pc_basis::Family;
use sgkit::sg_operator::BlockVector;

/// Orthonormal 1-D polynomial of degree `n` from the classical (unnormalized)
/// recurrences: Legendre `P_n` scaled by `sqrt(2n+1)` for density 1/2 on
/// [-1, 1], probabilists' Hermite `He_n` scaled by `1/sqrt(n!)`.
pub fn psi_1d(family: Family, n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = match family {
            Family::Legendre => ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0),
            Family::Hermite => x * p1 - kf * p0,
        };
        p0 = p1;
        p1 = p2;
    }
    match family {
        Family::Legendre => p1 * (2.0 * n as f64 + 1.0).sqrt(),
        Family::Hermite => p1 / factorial(n).sqrt(),
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `prod_d psi_{alpha_d}(xi_d)`.
pub fn psi_multi(family: Family, alpha: &[usize], xi: &[f64]) -> f64 {
    alpha.iter().zip(xi).map(|(&a, &x)| psi_1d(family, a, x)).product()
}

/// Gauss rule for the probability density of `family` (weights sum to 1).
///
/// Legendre nodes come from Newton on `P_n` started at Chebyshev guesses;
/// Hermite nodes from the eigenvalues of the Jacobi matrix.
pub fn gauss_rule(family: Family, n: usize) -> (Vec<f64>, Vec<f64>) {
    match family {
        Family::Legendre => {
            let mut nodes = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for i in 0..n {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 1..n {
                        let kf = k as f64;
                        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                        p0 = p1;
                        p1 = p2;
                    }
                    let pn = if n == 1 { x } else { p1 };
                    let pm = if n == 1 { 1.0 } else { p0 };
                    dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
                    let dx = pn / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                nodes.push(x);
                // Half of the classical weight, for density 1/2.
                weights.push(1.0 / ((1.0 - x * x) * dp * dp));
            }
            (nodes, weights)
        }
        Family::Hermite => {
            let mut jac = DMatrix::zeros(n, n);
            for k in 1..n {
                let b = (k as f64).sqrt();
                jac[(k, k - 1)] = b;
                jac[(k - 1, k)] = b;
            }
            let eig = SymmetricEigen::new(jac);
            let nodes = eig.eigenvalues.iter().copied().collect();
            let weights = (0..n).map(|c| eig.eigenvectors[(0, c)].powi(2)).collect();
            (nodes, weights)
        }
    }
}

/// Tensor Gauss rule in `dim` dimensions with `n` points per dimension.
pub fn tensor_rule(family: Family, dim: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    let (x, w) = gauss_rule(family, n);
    let total = n.pow(dim as u32);
    (0..total)
        .map(|mut flat| {
            let mut point = Vec::with_capacity(dim);
            let mut weight = 1.0;
            for _ in 0..dim {
                point.push(x[flat % n]);
                weight *= w[flat % n];
                flat /= n;
            }
            (point, weight)
        })
        .collect()
}

/// `E[psi_a psi_b psi_c]` by brute-force tensor quadrature.
pub fn triple_by_quadrature(family: Family, a: &[usize], b: &[usize], c: &[usize], rule: &[(Vec<f64>, f64)]) -> f64 {
    rule.iter().map(|(p, w)| w * psi_multi(family, a, p) * psi_multi(family, b, p) * psi_multi(family, c, p)).sum()
}

/// The global Galerkin matrix written out densely: block `(k, j)` is
/// `sum_i c_ijk K_i`.
pub fn dense_galerkin(matrices: &[SparseMatrix], entries: &[(usize, usize, usize, f64)], n_blocks: usize) -> DMatrix<f64> {
    let n = matrices[0].n_rows();
    let dense: Vec<DMatrix<f64>> = matrices.iter().map(sparse_to_dense).collect();
    let mut a = DMatrix::zeros(n * n_blocks, n * n_blocks);
    for &(i, j, k, c) in entries {
        let mut block = a.view_mut((k * n, j * n), (n, n));
        block += &dense[i] * c;
    }
    a
}

pub fn sparse_to_dense(m: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.n_rows(), m.n_cols());
    for r in 0..m.n_rows() {
        for (c, v) in m.row(r) {
            d[(r, c)] += v;
        }
    }
    d
}

pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone().lu().solve(&DVector::from_column_slice(b)).expect("dense oracle is nonsingular").as_slice().to_vec()
}

pub fn dense_mul(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(x)).as_slice().to_vec()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn rel_err(x: &[f64], reference: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(reference).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(reference)
}

pub fn random_block(rng: &mut ChaCha8Rng, n_blocks: usize, block_len: usize) -> BlockVector {
    let data = (0..n_blocks * block_len).map(|_| rng.random_range(-1.0..1.0)).collect();
    BlockVector::from_vec(n_blocks, block_len, data).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn nystrom_trapezoid(sigma: f64, corr_length: f64, interval: [f64; 2], intervals: usize, n_modes: usize) -> Vec<f64> {
    let h = (interval[1] - interval[0]) / intervals as f64;
    let x: Vec<f64> = (0..=intervals).map(|i| interval[0] + i as f64 * h).collect();
    let sw: Vec<f64> =
        (0..=intervals).map(|i| if i == 0 || i == intervals { 0.5 * h } else { h }).map(f64::sqrt).collect();
    let m = intervals + 1;
    let a = DMatrix::from_fn(m, m, |r, c| {
        sw[r] * sw[c] * sigma * sigma * (-(x[r] - x[c]).abs() / corr_length).exp()
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.truncate(n_modes);
    ev
}

/// Leading eigenvalues of the 1-D exponential covariance operator from a
/// 200-interval trapezoid Nystrom discretization, with one Richardson step
/// against the 100-interval one (the trapezoid error expands in `h^2`).
pub fn nystrom_eigenvalues(sigma: f64, corr_length: f64, interval: [f64; 2], n_modes: usize) -> Vec<f64> {
    let coarse = nystrom_trapezoid(sigma, corr_length, interval, 100, n_modes);
    let fine = nystrom_trapezoid(sigma, corr_length, interval, 200, n_modes);
    fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
}

/// Composite Simpson on `[lo, hi]` with `n` (even) intervals.
pub fn simpson(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    assert!(n % 2 == 0);
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Non-increasing sequence check, exact comparison.
pub fn is_non_increasing(history: &[f64]) -> bool {
    history.windows(2).all(|w| w[1] <= w[0])
}

/// A small assembled problem; `lognormal` selects the Hermite PCE model.
pub fn small_problem(lognormal: bool, dim: usize, order: usize, sigma: f64, mesh: usize) -> sgkit::bench::Problem {
    let mut cfg = sgkit::bench::ExperimentConfig::default();
    cfg.model = if lognormal { sgkit::bench::FieldModel::Lognormal } else { sgkit::bench::FieldModel::UniformKl };
    cfg.dim = dim;
    cfg.order = order;
    cfg.sigma = sigma;
    cfg.mesh = (mesh, mesh);
    sgkit::bench::build_problem(&cfg).unwrap()
}

/// Dense matrix of a linear map, one canonical basis vector at a time.
pub fn columns_of(n: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        let col = f(&e);
        e[c] = 0.0;
        for (r, v) in col.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    out
}

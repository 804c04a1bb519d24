use std::time::Instant;

use super::{LinearOperator, SolveReport};
use crate::sg_operator::{norm2, BlockVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 1000, restart: 100 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

/// Right-preconditioned restarted GMRES from a zero initial guess.
///
/// Solves `A M^{-1} y = b`, `x = M^{-1} y`, so the monitored residual is the
/// true residual `||b - A x|| / ||b||`. Arnoldi uses modified Gram-Schmidt
/// with one reorthogonalization pass; the least-squares problem is updated
/// with Givens rotations.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &BlockVector,
    precond: Option<&dyn LinearOperator>,
    cfg: &GmresConfig,
) -> (BlockVector, SolveReport) {
    let start = Instant::now();
    let n = b.len();
    assert_eq!(op.dim(), n, "operator and right-hand side disagree in size");
    let restart = cfg.restart.max(1);
    let mut report = SolveReport::default();
    let mut x = vec![0.0; n];
    let b_norm = b.norm();
    if b_norm == 0.0 {
        report.converged = true;
        report.residual_history.push(0.0);
        report.wall_time = start.elapsed();
        return (BlockVector::from_vec(b.n_blocks(), b.block_len(), x).unwrap(), report);
    }

    let apply_precond = |src: &[f64], dst: &mut [f64]| match precond {
        Some(p) => p.apply(src, dst),
        None => dst.copy_from_slice(src),
    };

    let mut r = b.as_slice().to_vec();
    let mut beta = b_norm;
    report.residual_history.push(1.0);
    let mut work = vec![0.0; n];
    let mut z = vec![0.0; n];

    'outer: while report.iterations < cfg.max_iter {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<f64> = Vec::with_capacity(restart);
        let mut g = vec![beta];
        let mut done = false;

        while basis.len() <= restart && report.iterations < cfg.max_iter {
            let j = basis.len() - 1;
            apply_precond(&basis[j], &mut z);
            op.apply(&z, &mut work);
            let mut col = vec![0.0; j + 2];
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&work, v);
                    col[i] += hij;
                    axpy(-hij, v, &mut work);
                }
            }
            let h_next = norm2(&work);
            col[j + 1] = h_next;

            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[j] / denom, col[j + 1] / denom) };
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.push(col);
            report.iterations += 1;

            let rel = g[j + 1].abs() / b_norm;
            report.residual_history.push(rel);
            if rel <= cfg.tol {
                done = true;
                break;
            }
            if h_next < 1e-14 * b_norm {
                report.breakdown = true;
                done = true;
                break;
            }
            basis.push(work.iter().map(|v| v / h_next).collect());
        }

        // Back-substitute for the Krylov coefficients and update x.
        let m = h.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut acc = g[i];
            for (k, yk) in y.iter().enumerate().take(m).skip(i + 1) {
                acc -= h[k][i] * yk;
            }
            y[i] = acc / h[i][i];
        }
        let mut comb = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut comb);
        }
        apply_precond(&comb, &mut z);
        axpy(1.0, &z, &mut x);

        // True residual at the end of every cycle.
        op.apply(&x, &mut work);
        for ((ri, bi), wi) in r.iter_mut().zip(b.as_slice()).zip(&work) {
            *ri = bi - wi;
        }
        beta = norm2(&r);
        let true_rel = beta / b_norm;
        if let Some(last) = report.residual_history.last_mut() {
            *last = true_rel;
        }
        if true_rel <= cfg.tol {
            report.converged = true;
            break 'outer;
        }
        if done && report.breakdown {
            break 'outer;
        }
        if !true_rel.is_finite() {
            report.diverged = true;
            break 'outer;
        }
    }

    report.wall_time = start.elapsed();
    (BlockVector::from_vec(b.n_blocks(), b.block_len(), x).unwrap(), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::Identity;

    struct Dense(Vec<Vec<f64>>);

    impl LinearOperator for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }

        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for (row, out) in self.0.iter().zip(y.iter_mut()) {
                *out = dot(row, x);
            }
        }
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = BlockVector::from_vec(1, 3, vec![1.0, -2.0, 3.0]).unwrap();
        let (x, report) = gmres(&Identity(3), &b, None, &GmresConfig::default());
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.residual_history.len(), 2);
        assert!(x.rel_diff(&b) < 1e-15);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let b = BlockVector::zeros(2, 2);
        let (x, report) = gmres(&Identity(4), &b, None, &GmresConfig::default());
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(x.norm(), 0.0);
    }

    #[test]
    fn nonsymmetric_system_with_restarts() {
        let n = 12;
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match (i as i64 - j as i64).abs() {
                        0 => 4.0,
                        1 if j > i => -1.5,
                        1 => -0.5,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        let op = Dense(a);
        let b = BlockVector::from_vec(1, n, (0..n).map(|i| (i as f64 + 1.0).cos()).collect()).unwrap();
        let full = gmres(&op, &b, None, &GmresConfig { tol: 1e-12, max_iter: 200, restart: 100 });
        let short = gmres(&op, &b, None, &GmresConfig { tol: 1e-12, max_iter: 200, restart: 3 });
        assert!(full.1.converged && short.1.converged);
        assert!(full.0.rel_diff(&short.0) < 1e-11);
        let hist = &short.1.residual_history;
        assert_eq!(hist.len(), short.1.iterations + 1);
        assert!(hist.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn max_iter_reports_not_converged() {
        let n = 30;
        let a: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 + i as f64 } else { 0.0 }).collect()).collect();
        let b = BlockVector::from_vec(1, n, vec![1.0; n]).unwrap();
        let (_, report) = gmres(&Dense(a), &b, None, &GmresConfig { tol: 1e-12, max_iter: 5, restart: 100 });
        assert!(!report.converged);
        assert_eq!(report.iterations, 5);
    }
}

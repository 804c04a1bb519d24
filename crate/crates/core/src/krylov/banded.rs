use crate::error::{Result, SgError};
use crate::fem2d::SparseMatrix;

/// LU factorization with partial pivoting of a banded matrix.
///
/// Row `i` stores columns `i - kl ..= i + ku + kl`; the extra `kl` upper
/// diagonals absorb pivoting fill. Multipliers stay in place and are applied
/// interleaved with the row swaps, as in LAPACK `gbtrf`/`gbtrs`.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &SparseMatrix, scale: f64) -> Result<Self> {
        assert_eq!(a.n_rows(), a.n_cols(), "banded LU needs a square matrix");
        let n = a.n_rows();
        let (kl, ku) = a.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, width, data: vec![0.0; n * width], pivots: vec![0; n] };
        for r in 0..n {
            for (c, v) in a.row(r) {
                let idx = lu.idx(r, c);
                lu.data[idx] += scale * v;
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(SgError::Singular { column: k });
            }
            self.pivots[k] = p;
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (self.idx(k, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for r in k + 1..=last_row {
                let rk = self.idx(r, k);
                let l = self.data[rk] / pivot;
                self.data[rk] = l;
                if l != 0.0 {
                    let row_r = self.idx(r, k + 1);
                    let row_k = self.idx(k, k + 1);
                    for off in 0..last_col - k {
                        self.data[row_r + off] -= l * self.data[row_k + off];
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve in place: `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + self.kl).min(n - 1) {
                    x[r] -= self.data[self.idx(r, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let base = self.idx(k, k);
            let mut acc = x[k];
            for off in 1..=last_col - k {
                acc -= self.data[base + off] * x[k + off];
            }
            x[k] = acc / self.data[base];
        }
    }
}

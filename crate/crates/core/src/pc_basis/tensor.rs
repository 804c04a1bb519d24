use std::io::Write;

use super::{basis_size, Family, MultiIndex, MultiIndexBasis};
use crate::error::{Result, SgError};

/// Meaning of the first tensor index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorMode {
    /// `c_ijk = E[xi_i psi_j psi_k]` with `xi_0 = 1` and `xi_i = psi_{e_i}`.
    Kl,
    /// `c_ijk = E[psi_i psi_j psi_k]`, `i` ranging over a coefficient basis.
    Pce,
}

impl TensorMode {
    pub fn name(self) -> &'static str {
        match self {
            TensorMode::Kl => "kl",
            TensorMode::Pce => "pce",
        }
    }
}

/// All nonzero `c_ijk` for a fixed `(i, j)`, as `(k, value)` pairs.
///
/// Since `c_ijk = c_ikj`, the same fiber also lists every `j` coupled to a
/// fixed `(i, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fiber {
    pub i: usize,
    pub j: usize,
    pub entries: Vec<(usize, f64)>,
}

/// Sparse triple-product tensor with dims `(P_hat + 1, N + 1, N + 1)`.
#[derive(Clone, Debug)]
pub struct TripleProductTensor {
    mode: TensorMode,
    family: Family,
    dim: usize,
    order: usize,
    coeff_indices: Vec<MultiIndex>,
    n_basis: usize,
    entries: Vec<(usize, usize, usize, f64)>,
    fibers: Vec<Fiber>,
}

/// Triple products with the default quadrature size.
pub fn triple_products(
    basis: &MultiIndexBasis,
    mode: TensorMode,
    p_hat: usize,
    drop_tol: f64,
) -> Result<TripleProductTensor> {
    triple_products_with_points(basis, mode, p_hat, drop_tol, None)
}

/// Triple products computed with `points_per_dim` Gauss points per dimension
/// (`None` picks the smallest exact rule, `ceil((3 p_max + 1) / 2)`).
///
/// The tensor-product rule over a product integrand factorizes into 1-D
/// rules, so each entry is a product of 1-D moments `E[psi_a psi_b psi_c]`.
pub fn triple_products_with_points(
    basis: &MultiIndexBasis,
    mode: TensorMode,
    p_hat: usize,
    drop_tol: f64,
    points_per_dim: Option<usize>,
) -> Result<TripleProductTensor> {
    let dim = basis.dim();
    let coeff_indices: Vec<MultiIndex> = match mode {
        TensorMode::Kl => {
            if p_hat != dim {
                return Err(SgError::InvalidArgument(format!(
                    "KL tensor needs P_hat = M = {dim}, got {p_hat}"
                )));
            }
            std::iter::once(MultiIndex::zeros(dim))
                .chain((0..dim).map(|d| MultiIndex::unit(dim, d)))
                .collect()
        }
        TensorMode::Pce => {
            let mut order = basis.order();
            while basis_size(dim, order)? < p_hat + 1 {
                order += 1;
            }
            let coeff_basis = MultiIndexBasis::new(dim, order, basis.family())?;
            coeff_basis.indices()[..=p_hat].to_vec()
        }
    };

    let coeff_max = coeff_indices.iter().flat_map(|m| m.0.iter().copied()).max().unwrap_or(0);
    let sol_max = basis.max_degree();
    let p_max = coeff_max.max(sol_max);
    let n_points = points_per_dim.unwrap_or((3 * p_max + 2) / 2).max(1);
    let moments = Moments1d::new(basis.family(), coeff_max, sol_max, n_points);

    let n = basis.len();
    let mut entries = Vec::new();
    let mut row = vec![0.0; n * n];
    for (i, ci) in coeff_indices.iter().enumerate() {
        row.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..n {
            let bj = basis.index(j);
            for k in j..n {
                let bk = basis.index(k);
                let mut value = 1.0;
                for d in 0..dim {
                    value *= moments.get(ci.0[d], bj.0[d], bk.0[d]);
                    if value == 0.0 {
                        break;
                    }
                }
                row[j * n + k] = value;
                row[k * n + j] = value;
            }
        }
        for j in 0..n {
            for k in 0..n {
                let v = row[j * n + k];
                if v.abs() > drop_tol {
                    entries.push((i, j, k, v));
                }
            }
        }
    }

    Ok(TripleProductTensor::from_parts(
        mode,
        basis.family(),
        dim,
        basis.order(),
        coeff_indices,
        n,
        entries,
    ))
}

impl TripleProductTensor {
    fn from_parts(
        mode: TensorMode,
        family: Family,
        dim: usize,
        order: usize,
        coeff_indices: Vec<MultiIndex>,
        n_basis: usize,
        mut entries: Vec<(usize, usize, usize, f64)>,
    ) -> Self {
        entries.sort_by_key(|&(i, j, k, _)| (i, j, k));
        let mut fibers: Vec<Fiber> = Vec::new();
        for &(i, j, k, v) in &entries {
            match fibers.last_mut() {
                Some(f) if f.i == i && f.j == j => f.entries.push((k, v)),
                _ => fibers.push(Fiber { i, j, entries: vec![(k, v)] }),
            }
        }
        Self { mode, family, dim, order, coeff_indices, n_basis, entries, fibers }
    }

    pub fn mode(&self) -> TensorMode {
        self.mode
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Stochastic dimension `M`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `P_hat + 1`.
    pub fn n_coeff(&self) -> usize {
        self.coeff_indices.len()
    }

    /// `N + 1`, the size of the solution basis.
    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    /// Multi-index that coefficient slot `i` refers to.
    pub fn coeff_index(&self, i: usize) -> &MultiIndex {
        &self.coeff_indices[i]
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Stored entries `(i, j, k, value)`, sorted.
    pub fn entries(&self) -> &[(usize, usize, usize, f64)] {
        &self.entries
    }

    /// Nonzero `(i, j)` fibers, sorted by `(i, j)`.
    pub fn fibers(&self) -> &[Fiber] {
        &self.fibers
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(i, j, k), |&(a, b, c, _)| (a, b, c))
            .map(|pos| self.entries[pos].3)
            .unwrap_or(0.0)
    }

    /// Copy keeping only coefficient slots for which `keep(i)` holds. Slot
    /// numbering and dims are unchanged.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        let entries = self.entries.iter().copied().filter(|&(i, ..)| keep(i)).collect();
        Self::from_parts(
            self.mode,
            self.family,
            self.dim,
            self.order,
            self.coeff_indices.clone(),
            self.n_basis,
            entries,
        )
    }

    /// Keep only the mean and first-order coefficient slots (total degree <= 1).
    pub fn first_order(&self) -> Self {
        self.restrict(|i| self.coeff_indices[i].total_degree() <= 1)
    }

    /// Text export: header `# M p family mode`, then one `i j k value` line
    /// per stored entry with 17 significant digits.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {} {} {} {}", self.dim, self.order, self.family.name(), self.mode.name())?;
        for &(i, j, k, v) in &self.entries {
            writeln!(w, "{i} {j} {k} {v:.16e}")?;
        }
        Ok(())
    }
}

/// Table of `E[psi_a psi_b psi_c]` for `a <= a_max`, `b, c <= b_max`.
struct Moments1d {
    b_len: usize,
    values: Vec<f64>,
}

impl Moments1d {
    fn new(family: Family, a_max: usize, b_max: usize, n_points: usize) -> Self {
        let (nodes, weights) = family.gauss_rule(n_points);
        let top = a_max.max(b_max);
        let tables: Vec<Vec<f64>> = nodes.iter().map(|&x| family.eval(top, x)).collect();
        let b_len = b_max + 1;
        let mut values = vec![0.0; (a_max + 1) * b_len * b_len];
        for a in 0..=a_max {
            for b in 0..=b_max {
                for c in b..=b_max {
                    // Odd total degree integrates to zero on a symmetric
                    // measure, and so does any degree outside the triangle
                    // rule. With a zero-degree slot, orthonormality leaves an
                    // exact 1 (the triangle rule forces the other two equal).
                    let v = if (a + b + c) % 2 == 1 || a > b + c || b > a + c || c > a + b {
                        0.0
                    } else if a.min(b).min(c) == 0 {
                        1.0
                    } else {
                        tables
                            .iter()
                            .zip(&weights)
                            .map(|(t, w)| w * t[a] * t[b] * t[c])
                            .sum()
                    };
                    values[(a * b_len + b) * b_len + c] = v;
                    values[(a * b_len + c) * b_len + b] = v;
                }
            }
        }
        // Make the table exactly symmetric in all three slots where they overlap.
        let common = a_max.min(b_max);
        for a in 0..=common {
            for b in 0..=common {
                for c in 0..=common {
                    let mut s = [a, b, c];
                    s.sort_unstable();
                    let v = values[(s[0] * b_len + s[1]) * b_len + s[2]];
                    values[(a * b_len + b) * b_len + c] = v;
                }
            }
        }
        Self { b_len, values }
    }

    fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.values[(a * self.b_len + b) * self.b_len + c]
    }
}

//! Total-order polynomial chaos bases and their triple-product tensors.
//!
//! A basis of order `p` in `M` variables holds every multi-index with total
//! degree at most `p`, `(M+p)! / (M! p!)` of them. Indices are kept in graded
//! order (by total degree, then descending lexicographic within a degree), so
//! index 0 is the constant and indices `1..=M` are the first-order
//! polynomials `psi_{e_1}, ..., psi_{e_M}`. A basis of higher order always has
//! a lower-order basis as a prefix.

mod quadrature;
mod tensor;

pub use quadrature::Family;
pub use tensor::{triple_products, triple_products_with_points, Fiber, TensorMode, TripleProductTensor};

use crate::error::{Result, SgError};

/// Identifier of the index ordering, written into exported files.
pub const ORDERING_VERSION: &str = "graded-revlex-v1";

/// Per-dimension polynomial degrees of one multivariate basis function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// Unit index `e_d`.
    pub fn unit(dim: usize, d: usize) -> Self {
        let mut e = vec![0; dim];
        e[d] = 1;
        MultiIndex(e)
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Number of multi-indices of total degree `<= order` in `dim` variables.
pub fn basis_size(dim: usize, order: usize) -> Result<usize> {
    // C(dim + order, order) computed incrementally; each step stays integral.
    let mut acc: usize = 1;
    for k in 1..=order {
        acc = acc
            .checked_mul(dim + k)
            .ok_or(SgError::BasisTooLarge { dim, order })?
            / k;
    }
    Ok(acc)
}

/// Orthonormal total-order chaos basis.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiIndexBasis {
    dim: usize,
    order: usize,
    family: Family,
    indices: Vec<MultiIndex>,
}

impl MultiIndexBasis {
    pub fn new(dim: usize, order: usize, family: Family) -> Result<Self> {
        if dim == 0 {
            return Err(SgError::InvalidArgument("stochastic dimension must be >= 1".into()));
        }
        let size = basis_size(dim, order)?;
        let mut indices = Vec::with_capacity(size);
        let mut scratch = vec![0; dim];
        for degree in 0..=order {
            push_degree(&mut indices, &mut scratch, 0, degree);
        }
        debug_assert_eq!(indices.len(), size);
        Ok(Self { dim, order, family, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    /// Position of a multi-index in this basis.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        if alpha.dim() != self.dim || alpha.total_degree() > self.order {
            return None;
        }
        self.indices.iter().position(|m| m == alpha)
    }

    /// Largest 1-D degree appearing in any index.
    pub fn max_degree(&self) -> usize {
        self.order
    }

    /// Evaluate every basis polynomial at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim {
            return Err(SgError::DimensionMismatch { expected: self.dim, got: point.len() });
        }
        let tables: Vec<Vec<f64>> = point.iter().map(|&x| self.family.eval(self.order, x)).collect();
        Ok(self
            .indices
            .iter()
            .map(|alpha| alpha.0.iter().enumerate().map(|(d, &n)| tables[d][n]).product())
            .collect())
    }
}

/// Convenience constructor matching the free-function style used elsewhere.
pub fn build_basis(dim: usize, order: usize, family: Family) -> Result<MultiIndexBasis> {
    MultiIndexBasis::new(dim, order, family)
}

// Appends all indices of exactly `remaining` total degree over dims `d..`,
// in descending lexicographic order.
fn push_degree(out: &mut Vec<MultiIndex>, scratch: &mut [usize], d: usize, remaining: usize) {
    if d + 1 == scratch.len() {
        scratch[d] = remaining;
        out.push(MultiIndex(scratch.to_vec()));
        return;
    }
    for n in (0..=remaining).rev() {
        scratch[d] = n;
        push_degree(out, scratch, d + 1, remaining - n);
    }
    scratch[d] = 0;
}

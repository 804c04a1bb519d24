//! One-dimensional orthonormal polynomial families and their Gauss rules.
//!
//! Both families are normalized against a *probability* measure: the uniform
//! density 1/2 on `[-1, 1]` for Legendre and the standard normal density for
//! Hermite. Gauss weights therefore sum to one and `E[psi_m psi_n] = delta_mn`.

use nalgebra::{DMatrix, SymmetricEigen};

/// Polynomial family of a chaos basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Orthonormal Legendre polynomials, uniform variables on `[-1, 1]`.
    Legendre,
    /// Orthonormal probabilists' Hermite polynomials, standard Gaussian variables.
    Hermite,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Legendre => "legendre",
            Family::Hermite => "hermite",
        }
    }

    /// Off-diagonal Jacobi-matrix coefficient `b_n` in the three-term recurrence
    /// `x psi_n = b_{n+1} psi_{n+1} + b_n psi_{n-1}`. Both families have zero
    /// diagonal.
    fn recurrence(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Family::Legendre => n / (4.0 * n * n - 1.0).sqrt(),
            Family::Hermite => n.sqrt(),
        }
    }

    /// Values `psi_0(x), ..., psi_max_degree(x)`.
    pub fn eval(self, max_degree: usize, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(max_degree + 1);
        out.push(1.0);
        if max_degree == 0 {
            return out;
        }
        out.push(x / self.recurrence(1));
        for n in 1..max_degree {
            let next = (x * out[n] - self.recurrence(n) * out[n - 1]) / self.recurrence(n + 1);
            out.push(next);
        }
        out
    }

    /// `psi_n(x)` and its derivative.
    fn eval_with_derivative(self, n: usize, x: f64) -> (f64, f64) {
        let (mut p_prev, mut p) = (0.0, 1.0);
        let (mut d_prev, mut d) = (0.0, 0.0);
        for k in 0..n {
            let b_next = self.recurrence(k + 1);
            let b_k = if k == 0 { 0.0 } else { self.recurrence(k) };
            let p_next = (x * p - b_k * p_prev) / b_next;
            let d_next = (p + x * d - b_k * d_prev) / b_next;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
        }
        (p, d)
    }

    /// `n`-point Gauss rule `(nodes, weights)`, exact for polynomials of degree
    /// `2n - 1` under the family's probability measure.
    ///
    /// Nodes come from the Jacobi-matrix eigenvalues and are polished with a
    /// few Newton steps; weights are the Christoffel numbers
    /// `1 / sum_k psi_k(x)^2`.
    pub fn gauss_rule(self, n: usize) -> (Vec<f64>, Vec<f64>) {
        assert!(n >= 1, "Gauss rule needs at least one point");
        let jacobi = DMatrix::from_fn(n, n, |r, c| {
            if r + 1 == c {
                self.recurrence(c)
            } else if c + 1 == r {
                self.recurrence(r)
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.total_cmp(b));

        for x in nodes.iter_mut() {
            for _ in 0..4 {
                let (p, d) = self.eval_with_derivative(n, *x);
                if d == 0.0 {
                    break;
                }
                let step = p / d;
                *x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
        }
        // Symmetric measures: enforce exact symmetry of the nodes.
        for i in 0..n / 2 {
            let m = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -m;
            nodes[n - 1 - i] = m;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }

        let mut weights: Vec<f64> = nodes
            .iter()
            .map(|&x| 1.0 / self.eval(n - 1, x).iter().map(|v| v * v).sum::<f64>())
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        (nodes, weights)
    }
}

//! Discretized random diffusion coefficients.
//!
//! Two models are supported: a Karhunen-Loeve expansion with independent
//! uniform variables, and a lognormal field `exp(g)` whose Gaussian exponent
//! `g` is a KL expansion and whose chaos coefficients are known in closed
//! form. Both use the separable exponential covariance
//! `sigma^2 exp(-|x1 - x2|_1 / L)`, so the 2-D eigenpairs are products of the
//! analytic 1-D ones.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SgError};
use crate::fem2d::Mesh;
use crate::pc_basis::{Family, MultiIndexBasis, TensorMode};

/// Separable exponential covariance `sigma^2 exp(-|dx|/L - |dy|/L)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceSpec {
    pub sigma: f64,
    pub corr_length: f64,
}

impl CovarianceSpec {
    pub fn new(sigma: f64, corr_length: f64) -> Result<Self> {
        if !(sigma > 0.0 && corr_length > 0.0) {
            return Err(SgError::InvalidArgument(format!(
                "covariance needs sigma > 0 and L > 0, got sigma={sigma}, L={corr_length}"
            )));
        }
        Ok(Self { sigma, corr_length })
    }

    /// 1-D kernel value `sigma^2 exp(-|x1 - x2| / L)`.
    pub fn kernel_1d(&self, x1: f64, x2: f64) -> f64 {
        self.sigma * self.sigma * (-(x1 - x2).abs() / self.corr_length).exp()
    }
}

/// Analytic eigenfunction of the 1-D exponential kernel on `[c - a, c + a]`,
/// normalized in `L^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlMode1d {
    pub omega: f64,
    pub even: bool,
    center: f64,
    norm: f64,
}

impl KlMode1d {
    fn new(omega: f64, even: bool, center: f64, half_width: f64) -> Self {
        let s = (2.0 * omega * half_width).sin() / (2.0 * omega);
        let norm = if even { half_width + s } else { half_width - s };
        Self { omega, even, center, norm: 1.0 / norm.sqrt() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = self.omega * (x - self.center);
        self.norm * if self.even { t.cos() } else { t.sin() }
    }
}

/// One 1-D eigenpair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlPair1d {
    pub eigenvalue: f64,
    pub mode: KlMode1d,
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let (mut f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Leading `n_terms` eigenpairs of the 1-D exponential kernel on `interval`,
/// sorted by descending eigenvalue.
///
/// With half-width `a`, even modes solve `1/L - w tan(w a) = 0` and odd modes
/// `w + tan(w a)/L = 0`; the eigenvalue is `2 sigma^2 L / (1 + w^2 L^2)`.
/// Each root is bracketed on its own branch of `tan` and refined by bisection.
pub fn kl_eigenpairs_1d(cov: &CovarianceSpec, interval: [f64; 2], n_terms: usize) -> Result<Vec<KlPair1d>> {
    if n_terms == 0 {
        return Err(SgError::InvalidArgument("n_terms must be >= 1".into()));
    }
    let [lo, hi] = interval;
    if !(hi > lo) {
        return Err(SgError::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
    }
    let a = 0.5 * (hi - lo);
    let center = 0.5 * (hi + lo);
    let inv_l = 1.0 / cov.corr_length;
    // Multiplied through by cos / sin so the functions stay finite on the bracket.
    let even_fn = |w: f64| w * (w * a).sin() - inv_l * (w * a).cos();
    let odd_fn = |w: f64| w * (w * a).cos() + inv_l * (w * a).sin();

    let mut pairs = Vec::with_capacity(2 * n_terms);
    for n in 0..n_terms {
        let bracket = (n as f64 * PI / a, (n as f64 + 0.5) * PI / a);
        let w = bisect(bracket.0, bracket.1, even_fn).ok_or(SgError::RootBracket { parity: "even", branch: n })?;
        pairs.push((w, true));
    }
    for n in 1..=n_terms {
        let bracket = ((n as f64 - 0.5) * PI / a, n as f64 * PI / a);
        let w = bisect(bracket.0, bracket.1, odd_fn).ok_or(SgError::RootBracket { parity: "odd", branch: n })?;
        pairs.push((w, false));
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let s2 = cov.sigma * cov.sigma;
    let l = cov.corr_length;
    Ok(pairs
        .into_iter()
        .take(n_terms)
        .map(|(w, even)| KlPair1d {
            eigenvalue: 2.0 * s2 * l / (1.0 + w * w * l * l),
            mode: KlMode1d::new(w, even, center, a),
        })
        .collect())
}

/// Product eigenfunction `f_x(x) f_y(y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlMode2d {
    pub x: KlMode1d,
    pub y: KlMode1d,
}

impl KlMode2d {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.x.eval(p[0]) * self.y.eval(p[1])
    }
}

/// Truncated 2-D KL expansion sampled at mesh nodes.
#[derive(Clone, Debug)]
pub struct KLExpansion {
    pub mean: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    pub functions: Vec<KlMode2d>,
}

impl KLExpansion {
    pub fn n_terms(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Field in KL form, `coeffs = [a_0, sqrt(lambda_1) a_1, ...]`, with the
    /// variables attached to a basis of the given family.
    pub fn to_field(&self, family: Family) -> FieldExpansion {
        let mut coeffs = Vec::with_capacity(self.n_terms() + 1);
        coeffs.push(self.mean.clone());
        for (lambda, mode) in self.eigenvalues.iter().zip(&self.modes) {
            let s = lambda.sqrt();
            coeffs.push(mode.iter().map(|v| s * v).collect());
        }
        FieldExpansion {
            mode: TensorMode::Kl,
            coeffs,
            basis: BasisRef { dim: self.n_terms(), order: 1, family },
        }
    }
}

/// Top `m` eigenpairs of the separable 2-D kernel on the mesh domain.
pub fn kl_expand_2d(cov: &CovarianceSpec, mesh: &Mesh, m: usize, mean_value: f64) -> Result<KLExpansion> {
    if m == 0 {
        return Err(SgError::InvalidArgument("KL expansion needs M >= 1".into()));
    }
    let per_axis = (m as f64).sqrt().ceil() as usize + 4;
    let d = mesh.domain();
    let xs = kl_eigenpairs_1d(cov, [d.x_lo, d.x_hi], per_axis)?;
    let ys = kl_eigenpairs_1d(cov, [d.y_lo, d.y_hi], per_axis)?;
    let s2 = cov.sigma * cov.sigma;
    let mut candidates: Vec<(f64, KlMode2d)> = Vec::with_capacity(per_axis * per_axis);
    for px in &xs {
        for py in &ys {
            candidates.push((px.eigenvalue * py.eigenvalue / s2, KlMode2d { x: px.mode, y: py.mode }));
        }
    }
    if m > candidates.len() {
        return Err(SgError::KlPoolExhausted { requested: m, pool: candidates.len() });
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    candidates.truncate(m);

    let modes = candidates
        .iter()
        .map(|(_, f)| mesh.nodes().iter().map(|&p| f.eval(p)).collect())
        .collect();
    Ok(KLExpansion {
        mean: vec![mean_value; mesh.n_nodes()],
        eigenvalues: candidates.iter().map(|c| c.0).collect(),
        modes,
        functions: candidates.iter().map(|c| c.1).collect(),
    })
}

/// Identity of the stochastic basis a field's coefficient index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisRef {
    pub dim: usize,
    pub order: usize,
    pub family: Family,
}

/// Nodal chaos coefficients `{a_i(x)}` of the diffusion field.
#[derive(Clone, Debug)]
pub struct FieldExpansion {
    mode: TensorMode,
    coeffs: Vec<Vec<f64>>,
    basis: BasisRef,
}

impl FieldExpansion {
    pub fn new(mode: TensorMode, coeffs: Vec<Vec<f64>>, basis: BasisRef) -> Self {
        Self { mode, coeffs, basis }
    }

    pub fn mode(&self) -> TensorMode {
        self.mode
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn basis(&self) -> BasisRef {
        self.basis
    }

    /// `P_hat`.
    pub fn p_hat(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Field values at every node for one realization of the germ `xi`.
    ///
    /// In KL mode the variables enter as `psi_{e_i}(xi)`, i.e. scaled to unit
    /// variance.
    pub fn realize(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let weights: Vec<f64> = match self.mode {
            TensorMode::Kl => {
                if xi.len() != self.basis.dim {
                    return Err(SgError::DimensionMismatch { expected: self.basis.dim, got: xi.len() });
                }
                std::iter::once(1.0).chain(xi.iter().map(|&x| self.basis.family.eval(1, x)[1])).collect()
            }
            TensorMode::Pce => {
                let basis = MultiIndexBasis::new(self.basis.dim, self.basis.order, self.basis.family)?;
                basis.eval(xi)?[..self.coeffs.len()].to_vec()
            }
        };
        let n = self.coeffs[0].len();
        let mut out = vec![0.0; n];
        for (w, c) in weights.iter().zip(&self.coeffs) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// Empirical min / max over `n_samples` random germs and every node.
    pub fn sample_bounds(&self, n_samples: usize, seed: u64) -> Result<FieldBounds> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut xi = vec![0.0; self.basis.dim];
        for _ in 0..n_samples {
            for x in xi.iter_mut() {
                *x = match self.basis.family {
                    Family::Legendre => rng.random_range(-1.0..1.0),
                    Family::Hermite => rng.sample(StandardNormal),
                };
            }
            for v in self.realize(&xi)? {
                min = min.min(v);
                max = max.max(v);
            }
        }
        Ok(FieldBounds { min, max, samples: n_samples })
    }

    /// CSV `node_x,node_y,coeff_0,...,coeff_P`.
    pub fn write_csv<W: Write>(&self, mesh: &Mesh, mut w: W) -> std::io::Result<()> {
        write!(w, "node_x,node_y")?;
        for i in 0..self.coeffs.len() {
            write!(w, ",coeff_{i}")?;
        }
        writeln!(w)?;
        for (n, p) in mesh.nodes().iter().enumerate() {
            write!(w, "{:.17e},{:.17e}", p[0], p[1])?;
            for c in &self.coeffs {
                write!(w, ",{:.17e}", c[n])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Sampled range of a field, a surrogate for `0 < a_l <= a <= a_u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldBounds {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl FieldBounds {
    pub fn is_positive(&self) -> bool {
        self.min > 0.0
    }
}

/// Hermite chaos coefficients of `exp(g)` for a Gaussian KL expansion `g`.
///
/// With `h_i(x) = sqrt(lambda_i) g_i(x)`, the coefficient of multi-index
/// `alpha` is `exp(g_0 + |h|^2 / 2) * prod_i h_i^alpha_i / sqrt(alpha_i!)`.
pub fn lognormal_pce(gaussian_kl: &KLExpansion, out_basis: &MultiIndexBasis) -> Result<FieldExpansion> {
    if out_basis.family() != Family::Hermite {
        return Err(SgError::InvalidArgument("lognormal chaos needs a Hermite basis".into()));
    }
    if out_basis.dim() != gaussian_kl.n_terms() {
        return Err(SgError::DimensionMismatch { expected: gaussian_kl.n_terms(), got: out_basis.dim() });
    }
    let n_nodes = gaussian_kl.mean.len();
    let h: Vec<Vec<f64>> = gaussian_kl
        .eigenvalues
        .iter()
        .zip(&gaussian_kl.modes)
        .map(|(l, g)| g.iter().map(|v| l.sqrt() * v).collect())
        .collect();
    let mean: Vec<f64> = (0..n_nodes)
        .map(|n| (gaussian_kl.mean[n] + 0.5 * h.iter().map(|hi| hi[n] * hi[n]).sum::<f64>()).exp())
        .collect();

    let coeffs = out_basis
        .indices()
        .iter()
        .map(|alpha| {
            let inv_sqrt_fact: f64 = alpha.0.iter().map(|&k| 1.0 / factorial(k).sqrt()).product();
            (0..n_nodes)
                .map(|n| {
                    let mono: f64 = alpha.0.iter().zip(&h).map(|(&k, hi)| hi[n].powi(k as i32)).product();
                    mean[n] * mono * inv_sqrt_fact
                })
                .collect()
        })
        .collect();
    Ok(FieldExpansion {
        mode: TensorMode::Pce,
        coeffs,
        basis: BasisRef { dim: out_basis.dim(), order: out_basis.order(), family: Family::Hermite },
    })
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Nodal quadrature weights on the mesh: tensor composite Simpson when both
/// cell counts are even, tensor trapezoid otherwise.
pub fn nodal_quadrature_weights(mesh: &Mesh) -> Vec<f64> {
    fn axis(n: usize, h: f64) -> Vec<f64> {
        if n % 2 == 0 {
            (0..=n)
                .map(|i| {
                    let c = if i == 0 || i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    c * h / 3.0
                })
                .collect()
        } else {
            (0..=n).map(|i| if i == 0 || i == n { 0.5 * h } else { h }).collect()
        }
    }
    let wx = axis(mesh.nx(), mesh.hx());
    let wy = axis(mesh.ny(), mesh.hy());
    let mut w = Vec::with_capacity(mesh.n_nodes());
    for wy_i in &wy {
        for wx_i in &wx {
            w.push(wx_i * wy_i);
        }
    }
    w
}

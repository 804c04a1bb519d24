use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Result, SgError};
use crate::preconditioners::PrecondKind;

/// Random diffusivity model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldModel {
    /// `a = a_0 + sum sqrt(lambda_i) a_i xi_i`, uniform `xi_i`, Legendre chaos.
    UniformKl,
    /// `a = exp(g)` with Gaussian KL `g`, Hermite chaos.
    Lognormal,
}

impl FieldModel {
    pub fn name(self) -> &'static str {
        match self {
            FieldModel::UniformKl => "uniform",
            FieldModel::Lognormal => "lognormal",
        }
    }
}

impl FromStr for FieldModel {
    type Err = SgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform_kl" => Ok(FieldModel::UniformKl),
            "lognormal" => Ok(FieldModel::Lognormal),
            other => Err(SgError::Config(format!("unknown model '{other}' (expected uniform or lognormal)"))),
        }
    }
}

/// A solver configuration run by the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Gmres(PrecondKind),
    GaussSeidelSolver,
    JacobiSolver,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Gmres(PrecondKind::MeanBased),
        Method::Gmres(PrecondKind::ApproxGaussSeidel),
        Method::Gmres(PrecondKind::ApproxJacobi),
        Method::Gmres(PrecondKind::GaussSeidel { sweeps: 1 }),
        Method::Gmres(PrecondKind::KroneckerProduct),
        Method::GaussSeidelSolver,
        Method::JacobiSolver,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gmres(kind) => kind.short_name(),
            Method::GaussSeidelSolver => "GS_solver",
            Method::JacobiSolver => "Jacobi_solver",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "GS_solver" => Ok(Method::GaussSeidelSolver),
            "Jacobi_solver" => Ok(Method::JacobiSolver),
            other => other
                .parse::<PrecondKind>()
                .map(Method::Gmres)
                .map_err(|_| SgError::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Total order of the lognormal coefficient expansion relative to the
/// solution order `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffOrder {
    Same,
    Double,
}

impl FromStr for CoeffOrder {
    type Err = SgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" | "same" => Ok(CoeffOrder::Same),
            "2p" | "double" => Ok(CoeffOrder::Double),
            other => Err(SgError::Config(format!("unknown coeff_order '{other}' (expected p or 2p)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: FieldModel,
    /// Stochastic dimension `M`.
    pub dim: usize,
    /// Total polynomial order `p` of the solution.
    pub order: usize,
    pub sigma: f64,
    pub corr_length: f64,
    /// Cells per axis.
    pub mesh: (usize, usize),
    pub velocity: [f64; 2],
    /// Mean `a_0` (uniform) or `g_0` (lognormal); see [`Self::mean_value`].
    pub mean: Option<f64>,
    pub coeff_order: CoeffOrder,
    pub tol: f64,
    pub inner_tol: f64,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub restart: usize,
    pub max_iter: usize,
    /// Directory for Matrix Market dumps of the `K_i`, if requested.
    pub export_matrices: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: FieldModel::UniformKl,
            dim: 4,
            order: 4,
            sigma: 0.1,
            corr_length: 1.0,
            mesh: (32, 32),
            velocity: [1.0, 1.0],
            mean: None,
            coeff_order: CoeffOrder::Same,
            tol: 1e-12,
            inner_tol: 3e-13,
            methods: Method::ALL.to_vec(),
            seed: 0,
            restart: 100,
            max_iter: 5000,
            export_matrices: None,
        }
    }
}

/// Keys accepted by [`ExperimentConfig::set`] and in config files.
pub const CONFIG_KEYS: [&str; 16] = [
    "model",
    "dim",
    "order",
    "sigma",
    "corr_length",
    "mesh",
    "velocity",
    "mean",
    "coeff_order",
    "tol",
    "inner_tol",
    "methods",
    "seed",
    "restart",
    "max_iter",
    "export_matrices",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| SgError::Config(format!("bad value '{value}' for {key}")))
}

/// `32` or `32x16`.
pub fn parse_mesh(value: &str) -> Result<(usize, usize)> {
    let value = value.trim();
    match value.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse("mesh", a)?, parse("mesh", b)?)),
        None => {
            let n = parse("mesh", value)?;
            Ok((n, n))
        }
    }
}

/// Comma-separated method names.
pub fn parse_methods(value: &str) -> Result<Vec<Method>> {
    let methods: Vec<Method> =
        value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(SgError::Config("methods must not be empty".into()));
    }
    Ok(methods)
}

impl ExperimentConfig {
    /// The configured mean, defaulting to `a_0 = 1` (uniform) or `g_0 = 0`
    /// (lognormal), so both models have unit median diffusivity.
    pub fn mean_value(&self) -> f64 {
        self.mean.unwrap_or(match self.model {
            FieldModel::UniformKl => 1.0,
            FieldModel::Lognormal => 0.0,
        })
    }

    /// Set one key from its text value. An empty `export_matrices` clears it.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = value.trim().parse()?,
            "dim" => self.dim = parse(key, value)?,
            "order" => self.order = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "corr_length" => self.corr_length = parse(key, value)?,
            "mesh" => self.mesh = parse_mesh(value)?,
            "velocity" => {
                let parts: Vec<f64> = value.split(',').map(|v| parse(key, v)).collect::<Result<_>>()?;
                self.velocity = <[f64; 2]>::try_from(parts)
                    .map_err(|_| SgError::Config(format!("velocity needs two components, got '{value}'")))?;
            }
            "mean" => self.mean = if value.trim().is_empty() { None } else { Some(parse(key, value)?) },
            "coeff_order" => self.coeff_order = value.trim().parse()?,
            "tol" => self.tol = parse(key, value)?,
            "inner_tol" => self.inner_tol = parse(key, value)?,
            "methods" => self.methods = parse_methods(value)?,
            "seed" => self.seed = parse(key, value)?,
            "restart" => self.restart = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "export_matrices" => {
                let v = value.trim();
                self.export_matrices = (!v.is_empty()).then(|| PathBuf::from(v));
            }
            other => return Err(SgError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` file. Blank lines and lines starting with
    /// `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SgError::Config(format!("line {}: expected key=value, got '{line}'", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| SgError::Config(format!("line {}: {}", n + 1, e)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SgError::Config(msg));
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.corr_length > 0.0) {
            return bad(format!("corr_length must be > 0, got {}", self.corr_length));
        }
        if self.mesh.0 < 2 || self.mesh.1 < 2 {
            return bad(format!("mesh needs >= 2 cells per axis, got {}x{}", self.mesh.0, self.mesh.1));
        }
        if !(self.tol > 0.0) || !(self.inner_tol > 0.0) {
            return bad("tolerances must be > 0".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.restart == 0 || self.max_iter == 0 {
            return bad("restart and max_iter must be >= 1".into());
        }
        Ok(())
    }

    /// The same config as `key=value` lines, readable by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let coeff_order = match self.coeff_order {
            CoeffOrder::Same => "p",
            CoeffOrder::Double => "2p",
        };
        format!(
            "model = {}\ndim = {}\norder = {}\nsigma = {}\ncorr_length = {}\nmesh = {}x{}\nvelocity = {},{}\n\
             mean = {}\ncoeff_order = {}\ntol = {:e}\ninner_tol = {:e}\nmethods = {}\nseed = {}\nrestart = {}\n\
             max_iter = {}\nexport_matrices = {}\n",
            self.model.name(),
            self.dim,
            self.order,
            self.sigma,
            self.corr_length,
            self.mesh.0,
            self.mesh.1,
            self.velocity[0],
            self.velocity[1],
            self.mean.map(|m| m.to_string()).unwrap_or_default(),
            coeff_order,
            self.tol,
            self.inner_tol,
            methods.join(","),
            self.seed,
            self.restart,
            self.max_iter,
            self.export_matrices.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_text() {
        let mut cfg = ExperimentConfig { model: FieldModel::Lognormal, mesh: (16, 8), ..Default::default() };
        cfg.methods = vec![Method::GaussSeidelSolver, Method::Gmres(PrecondKind::KroneckerProduct)];
        cfg.coeff_order = CoeffOrder::Double;
        cfg.export_matrices = Some(PathBuf::from("dump"));
        assert_eq!(ExperimentConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ExperimentConfig::from_text("dim = 2\nsigmaa = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("unknown key 'sigmaa'"), "{err}");
    }

    #[test]
    fn comments_and_mesh_forms() {
        let cfg = ExperimentConfig::from_text("# c\n\nmesh = 8\n").unwrap();
        assert_eq!(cfg.mesh, (8, 8));
        assert_eq!(parse_mesh("4x6").unwrap(), (4, 6));
        assert!(ExperimentConfig::from_text("mesh = 1").is_err());
        assert!(ExperimentConfig::from_text("methods = MB,XX").is_err());
        assert!(ExperimentConfig::from_text("velocity = 1").is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }
}

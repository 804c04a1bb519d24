//! Experiment harness: builds a problem from an [`ExperimentConfig`], runs
//! the requested solvers and writes result tables and residual histories.

mod config;

pub use config::{parse_mesh, parse_methods, CoeffOrder, ExperimentConfig, FieldModel, Method, CONFIG_KEYS};

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DVector;

use crate::error::{Result, SgError};
use crate::fem2d::{assemble_stiffness_family, Domain, Mesh, StiffnessFamily};
use crate::krylov::{gmres, GmresConfig, MeanInverse, MeanSolver, SolveReport};
use crate::pc_basis::{triple_products, Family, MultiIndexBasis, TensorMode};
use crate::preconditioners::Preconditioner;
use crate::random_field::{kl_expand_2d, lognormal_pce, CovarianceSpec, FieldBounds, FieldExpansion};
use crate::relaxation::{gauss_seidel_solve, jacobi_solve, RelaxConfig};
use crate::sg_operator::{BlockVector, SGOperator};

/// First line of every results CSV.
pub const RESULTS_HEADER: &str = "# sgkit-results v1";

/// Largest global system solved densely for the reference solution.
const DENSE_REFERENCE_LIMIT: usize = 1500;

/// Random germs drawn when reporting the sampled field range.
const FIELD_SAMPLES: usize = 1000;

/// Tensor entries below this magnitude are dropped.
const TENSOR_DROP_TOL: f64 = 1e-14;

/// Everything needed to solve one stochastic Galerkin system.
pub struct Problem {
    pub mesh: Mesh,
    pub basis: MultiIndexBasis,
    pub field: FieldExpansion,
    pub stiffness: StiffnessFamily,
    pub op: SGOperator,
    pub rhs: BlockVector,
    pub mean: MeanSolver,
    /// Factorization plus one solve of the deterministic mean problem.
    pub mean_solve_time: Duration,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    cfg.validate()?;
    let mesh = Mesh::new(cfg.mesh.0, cfg.mesh.1, Domain::centered_unit())?;
    let cov = CovarianceSpec::new(cfg.sigma, cfg.corr_length)?;
    let kl = kl_expand_2d(&cov, &mesh, cfg.dim, cfg.mean_value())?;
    let (basis, field, tensor) = match cfg.model {
        FieldModel::UniformKl => {
            let basis = MultiIndexBasis::new(cfg.dim, cfg.order, Family::Legendre)?;
            let field = kl.to_field(Family::Legendre);
            let tensor = triple_products(&basis, TensorMode::Kl, cfg.dim, TENSOR_DROP_TOL)?;
            (basis, field, tensor)
        }
        FieldModel::Lognormal => {
            let basis = MultiIndexBasis::new(cfg.dim, cfg.order, Family::Hermite)?;
            let coeff_order = match cfg.coeff_order {
                CoeffOrder::Same => cfg.order,
                CoeffOrder::Double => 2 * cfg.order,
            };
            let coeff_basis = MultiIndexBasis::new(cfg.dim, coeff_order, Family::Hermite)?;
            let field = lognormal_pce(&kl, &coeff_basis)?;
            let tensor = triple_products(&basis, TensorMode::Pce, field.p_hat(), TENSOR_DROP_TOL)?;
            (basis, field, tensor)
        }
    };
    let stiffness = assemble_stiffness_family(&mesh, &field, cfg.velocity)?;
    let op = SGOperator::new(stiffness.matrices.clone(), tensor)?;
    let rhs = BlockVector::from_mean_block(op.n_blocks(), &stiffness.load);

    let start = Instant::now();
    let mean = MeanSolver::new(op.mean_matrix(), 1.0)?;
    let mut u = vec![0.0; stiffness.load.len()];
    mean.solve(&stiffness.load, &mut u);
    let mean_solve_time = start.elapsed();

    Ok(Problem { mesh, basis, field, stiffness, op, rhs, mean, mean_solve_time })
}

/// How a method run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    Diverged,
    /// Iteration cap or GMRES breakdown before reaching the tolerance.
    NotConverged,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Converged => "conv",
            Status::Diverged => "div",
            Status::NotConverged => "maxit",
        }
    }

    fn of(report: &SolveReport) -> Self {
        if report.converged {
            Status::Converged
        } else if report.diverged {
            Status::Diverged
        } else {
            Status::NotConverged
        }
    }
}

#[derive(Clone, Debug)]
pub struct MethodResult {
    pub method: Method,
    pub status: Status,
    pub report: SolveReport,
    /// Wall time over the deterministic mean-solve time.
    pub scaled_time: f64,
    /// `||u - u_ref|| / ||u_ref||`.
    pub rel_diff: f64,
}

impl MethodResult {
    pub fn iterations(&self) -> usize {
        self.report.iterations
    }
}

#[derive(Clone, Debug)]
pub struct ResultRow {
    pub config: ExperimentConfig,
    pub n_blocks: usize,
    pub n_dofs: usize,
    pub field_bounds: FieldBounds,
    /// `"dense"` or `"MB"`.
    pub reference: &'static str,
    pub methods: Vec<MethodResult>,
}

impl ResultRow {
    pub fn get(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// Iteration count of `method`; panics if it was not run.
    pub fn iterations(&self, method: Method) -> usize {
        self.get(method).unwrap_or_else(|| panic!("{method} not in this row")).iterations()
    }
}

/// Run one method on a built problem.
pub fn run_method(problem: &Problem, method: Method, cfg: &ExperimentConfig) -> Result<(BlockVector, SolveReport)> {
    let op = &problem.op;
    let relax = RelaxConfig { tol: cfg.tol, inner_tol: cfg.inner_tol, max_outer: cfg.max_iter, ..Default::default() };
    match method {
        Method::GaussSeidelSolver => gauss_seidel_solve(op, &problem.rhs, &relax, &problem.mean),
        Method::JacobiSolver => jacobi_solve(op, &problem.rhs, &relax, &problem.mean),
        Method::Gmres(kind) => {
            let start = Instant::now();
            let (mv0, solves0) = (op.matvec_count(), problem.mean.solve_count());
            let precond = Preconditioner::build(kind, op, &problem.mean)?;
            let gcfg = GmresConfig { tol: cfg.tol, max_iter: cfg.max_iter, restart: cfg.restart };
            let (u, mut report) = gmres(op, &problem.rhs, Some(&precond), &gcfg);
            report.matvec_count = op.matvec_count() - mv0 + precond.matvec_count();
            report.inner_solve_count = problem.mean.solve_count() - solves0;
            report.wall_time = start.elapsed();
            Ok((u, report))
        }
    }
}

fn dense_reference(problem: &Problem) -> Result<BlockVector> {
    let a = problem.op.assemble_explicit()?;
    let b = DVector::from_column_slice(problem.rhs.as_slice());
    let x = a.lu().solve(&b).ok_or(SgError::Singular { column: 0 })?;
    BlockVector::from_vec(problem.op.n_blocks(), problem.op.block_len(), x.as_slice().to_vec())
}

/// Build the problem and run every configured method.
pub fn run_single(cfg: &ExperimentConfig) -> Result<ResultRow> {
    let problem = build_problem(cfg)?;
    let base_time = problem.mean_solve_time.as_secs_f64().max(1e-9);
    let mut solutions = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let (u, report) = run_method(&problem, method, cfg)?;
        solutions.push((method, u, report));
    }

    let mb = Method::Gmres(crate::preconditioners::PrecondKind::MeanBased);
    let (reference, label) = if problem.op.n_blocks() * problem.op.block_len() <= DENSE_REFERENCE_LIMIT {
        (dense_reference(&problem)?, "dense")
    } else if let Some((_, u, _)) = solutions.iter().find(|(m, _, _)| *m == mb) {
        (u.clone(), "MB")
    } else {
        (run_method(&problem, mb, cfg)?.0, "MB")
    };

    let methods = solutions
        .into_iter()
        .map(|(method, u, report)| MethodResult {
            method,
            status: Status::of(&report),
            scaled_time: report.wall_time.as_secs_f64() / base_time,
            rel_diff: u.rel_diff(&reference),
            report,
        })
        .collect();
    Ok(ResultRow {
        config: cfg.clone(),
        n_blocks: problem.op.n_blocks(),
        n_dofs: problem.op.block_len(),
        field_bounds: problem.field.sample_bounds(FIELD_SAMPLES, cfg.seed)?,
        reference: label,
        methods,
    })
}

/// Parameter swept by [`run_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Dim,
    Order,
    Sigma,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Dim => "dim",
            SweepAxis::Order => "order",
            SweepAxis::Sigma => "sigma",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = SgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dim" => Ok(SweepAxis::Dim),
            "order" => Ok(SweepAxis::Order),
            "sigma" => Ok(SweepAxis::Sigma),
            other => Err(SgError::Config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

fn axis_value(cfg: &ExperimentConfig, axis: SweepAxis) -> String {
    match axis {
        SweepAxis::Dim => cfg.dim.to_string(),
        SweepAxis::Order => cfg.order.to_string(),
        SweepAxis::Sigma => cfg.sigma.to_string(),
    }
}

/// One [`run_single`] per value, in order.
pub fn run_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<ResultRow>> {
    if values.is_empty() {
        return Err(SgError::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            match axis {
                SweepAxis::Sigma => cfg.sigma = v,
                SweepAxis::Dim | SweepAxis::Order => {
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(SgError::Config(format!("{} values must be integers, got {v}", axis.name())));
                    }
                    if axis == SweepAxis::Dim {
                        cfg.dim = v as usize;
                    } else {
                        cfg.order = v as usize;
                    }
                }
            }
            run_single(&cfg)
        })
        .collect()
}

/// Results table: one line per row, six columns per method.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], axis: Option<SweepAxis>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    let methods: Vec<Method> = rows.first().map(|r| r.config.methods.clone()).unwrap_or_default();
    write!(w, "axis,value,model,dim,order,sigma,mesh,n_xi,n_x,reference,field_min,field_max")?;
    for m in &methods {
        write!(w, ",{m}_time,{m}_iters,{m}_status,{m}_matvecs,{m}_inner_solves,{m}_reldiff")?;
    }
    writeln!(w)?;
    for row in rows {
        let c = &row.config;
        let (axis_name, value) = match axis {
            Some(a) => (a.name(), axis_value(c, a)),
            None => ("none", String::new()),
        };
        write!(
            w,
            "{axis_name},{value},{},{},{},{},{}x{},{},{},{},{:.17e},{:.17e}",
            c.model.name(),
            c.dim,
            c.order,
            c.sigma,
            c.mesh.0,
            c.mesh.1,
            row.n_blocks,
            row.n_dofs,
            row.reference,
            row.field_bounds.min,
            row.field_bounds.max
        )?;
        for m in &methods {
            match row.get(*m) {
                Some(r) => write!(
                    w,
                    ",{:.6e},{},{},{},{},{:.17e}",
                    r.scaled_time,
                    r.iterations(),
                    r.status.label(),
                    r.report.matvec_count,
                    r.report.inner_solve_count,
                    r.rel_diff
                )?,
                None => write!(w, ",,,,,,")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Run every configured method and keep its residual history.
pub fn residual_history(cfg: &ExperimentConfig) -> Result<Vec<(Method, SolveReport)>> {
    let problem = build_problem(cfg)?;
    cfg.methods.iter().map(|&m| Ok((m, run_method(&problem, m, cfg)?.1))).collect()
}

/// Write `history_<method>.csv` files into `dir`, returning their paths.
pub fn write_histories(histories: &[(Method, SolveReport)], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(histories.len());
    for (method, report) in histories {
        let path = dir.join(format!("history_{method}.csv"));
        let mut w = BufWriter::new(File::create(&path)?);
        report.write_history_csv(&mut w)?;
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Dump `K_<i>.mtx` (Matrix Market), `tensor.txt` and `field.csv` into `dir`.
pub fn export_problem(problem: &Problem, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (i, k) in problem.stiffness.matrices.iter().enumerate() {
        let path = dir.join(format!("K_{i}.mtx"));
        let mut w = BufWriter::new(File::create(&path)?);
        k.write_matrix_market(&mut w)?;
        w.flush()?;
        paths.push(path);
    }
    let path = dir.join("tensor.txt");
    let mut w = BufWriter::new(File::create(&path)?);
    problem.op.tensor().write_text(&mut w)?;
    w.flush()?;
    paths.push(path);
    let path = dir.join("field.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    problem.field.write_csv(&problem.mesh, &mut w)?;
    w.flush()?;
    paths.push(path);
    Ok(paths)
}

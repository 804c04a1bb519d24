use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sgkit::bench::{
    build_problem, export_problem, residual_history, run_single, run_sweep, write_histories, write_results_csv,
    ExperimentConfig, ResultRow, SweepAxis,
};

#[derive(Parser, Debug)]
#[command(name = "sgkit", version, about = "Stochastic Galerkin advection-diffusion solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every configured method once and write a results CSV.
    Solve(Common),
    /// Repeat `solve` over one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["dim", "order", "sigma"])]
        axis: String,
        /// Comma-separated values for the swept parameter.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
    /// Write one `iter,relres` CSV per method.
    History(Common),
}

/// Shared options. Each one overrides the config-file key of the same name.
#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// uniform | lognormal
    #[arg(long)]
    model: Option<String>,
    /// Stochastic dimension M.
    #[arg(long)]
    dim: Option<String>,
    /// Total polynomial order p.
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long = "corr_length", alias = "corr-length")]
    corr_length: Option<String>,
    /// Cells per axis, `N` or `NxM`.
    #[arg(long)]
    mesh: Option<String>,
    /// `wx,wy`
    #[arg(long, allow_hyphen_values = true)]
    velocity: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mean: Option<String>,
    /// p | 2p
    #[arg(long = "coeff_order", alias = "coeff-order")]
    coeff_order: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "inner_tol", alias = "inner-tol")]
    inner_tol: Option<String>,
    /// Comma-separated subset of MB,AGS,AJ,GS_prec,KP,GS_solver,Jacobi_solver.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    restart: Option<String>,
    #[arg(long = "max_iter", alias = "max-iter")]
    max_iter: Option<String>,
    /// Directory for `K_i.mtx`, `tensor.txt` and `field.csv`.
    #[arg(long = "export-matrices", alias = "export_matrices")]
    export_matrices: Option<String>,
    /// Output file (`solve`, `sweep`; default stdout) or directory (`history`; default `.`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("model", &self.model),
            ("dim", &self.dim),
            ("order", &self.order),
            ("sigma", &self.sigma),
            ("corr_length", &self.corr_length),
            ("mesh", &self.mesh),
            ("velocity", &self.velocity),
            ("mean", &self.mean),
            ("coeff_order", &self.coeff_order),
            ("tol", &self.tol),
            ("inner_tol", &self.inner_tol),
            ("methods", &self.methods),
            ("seed", &self.seed),
            ("restart", &self.restart),
            ("max_iter", &self.max_iter),
            ("export_matrices", &self.export_matrices),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text).with_context(|| format!("in {}", path.display()))?;
        }
        for (key, value) in self.overrides() {
            cfg.set(key, value).with_context(|| format!("--{key}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn export_if_requested(cfg: &ExperimentConfig) -> Result<()> {
    if let Some(dir) = &cfg.export_matrices {
        let problem = build_problem(cfg)?;
        let paths = export_problem(&problem, dir)?;
        eprintln!("exported {} files to {}", paths.len(), dir.display());
    }
    Ok(())
}

fn summarize(rows: &[ResultRow]) {
    for row in rows {
        let c = &row.config;
        eprintln!(
            "{} M={} p={} sigma={} mesh={}x{} N_xi+1={} N_x={}",
            c.model.name(),
            c.dim,
            c.order,
            c.sigma,
            c.mesh.0,
            c.mesh.1,
            row.n_blocks,
            row.n_dofs
        );
        for m in &row.methods {
            eprintln!(
                "  {:<14} {:>5} it  {:<5} scaled time {:>9.2}  diff {:.1e}",
                m.method.name(),
                m.iterations(),
                m.status.label(),
                m.scaled_time,
                m.rel_diff
            );
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(common) => {
            let cfg = common.experiment()?;
            export_if_requested(&cfg)?;
            let row = run_single(&cfg)?;
            let rows = [row];
            summarize(&rows);
            let mut w = open_out(common.out.as_deref())?;
            write_results_csv(&rows, None, &mut w)?;
            w.flush()?;
        }
        Command::Sweep { common, axis, values } => {
            let cfg = common.experiment()?;
            export_if_requested(&cfg)?;
            let axis: SweepAxis = axis.parse()?;
            let rows = run_sweep(&cfg, axis, &values)?;
            summarize(&rows);
            let mut w = open_out(common.out.as_deref())?;
            write_results_csv(&rows, Some(axis), &mut w)?;
            w.flush()?;
        }
        Command::History(common) => {
            let cfg = common.experiment()?;
            export_if_requested(&cfg)?;
            let histories = residual_history(&cfg)?;
            let dir = common.out.unwrap_or_else(|| PathBuf::from("."));
            for path in write_histories(&histories, &dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

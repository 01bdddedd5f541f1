//! Refinement sweep driver.

use std::io::Write;
use std::path::PathBuf;

use ifem_core::pipeline::{solve_level, LevelSolution};
use ifem_core::postproc::{
    convergence_table, write_convergence_csv, write_solve_csv, write_vtk, ConvergenceTable,
    RunMeta, SolveRow,
};
use ifem_core::Error;

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("assembly: {0}")]
    Assembly(Error),
    #[error("solver: {0}")]
    Solver(Error),
    #[error("io: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Assembly(_) => 3,
            RunError::Solver(_) => 4,
            RunError::Io(_) => 5,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::SingularMatrix { .. } => RunError::Solver(e),
            Error::Io { .. } | Error::Csv { .. } => RunError::Io(e.to_string()),
            _ => RunError::Assembly(e),
        }
    }
}

/// What a sweep produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub table: Option<ConvergenceTable>,
    pub solves: Vec<SolveRow>,
    pub files: Vec<PathBuf>,
}

/// Solve every level of the configured range, write CSV (and VTK) files and
/// print a table to `out`.
pub fn run(cfg: &RunConfig, out: &mut impl Write) -> Result<RunSummary, RunError> {
    let problem = cfg.problem()?;
    let stab = cfg.stabilization()?;
    let opts = cfg.solver_options();
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| RunError::Io(format!("{}: {e}", cfg.out.display())))?;
    let meta = RunMeta {
        tau: stab.tau,
        mu_minus: problem.mat.mu_minus,
        mu_plus: problem.mat.mu_plus,
        lambda_ratio: problem.mat.lambda_ratio(),
    };
    let print = |out: &mut dyn Write, s: &str| {
        out.write_all(s.as_bytes())
            .map_err(|e| RunError::Io(format!("stdout: {e}")))
    };
    print(
        out,
        &format!(
            "{}: mu- = {}, mu+ = {}, lambda- = {}, lambda+ = {}, tau = {}, edges = {}\n",
            cfg.name,
            problem.mat.mu_minus,
            problem.mat.mu_plus,
            problem.mat.lambda_minus,
            problem.mat.lambda_plus,
            stab.tau,
            stab.edge_set
        ),
    )?;

    let mut reports = Vec::new();
    let mut solves = Vec::new();
    let mut files = Vec::new();
    for k in cfg.k_min..=cfg.k_max {
        let level: LevelSolution = solve_level(&problem, k, &stab, &opts)?;
        let inv_h = (1.0 / level.mesh.h).round() as u64;
        print(
            out,
            &format!(
                "1/h = {inv_h}: {} unknowns, {} interface elements, {} iterations, residual {:.2e}\n",
                level.system.dim(),
                level.classes.num_interface_elements(),
                level.report.iterations,
                level.report.residual
            ),
        )?;
        solves.push(SolveRow {
            inv_h,
            dofs: level.system.dim(),
            iterations: level.report.iterations,
            residual: level.report.residual,
        });
        if let Some(e) = level.errors {
            reports.push(e);
        }
        if cfg.vtk {
            let path = cfg.out.join(format!("{}_k{k}.vtk", cfg.name));
            write_vtk(&level.mesh, &level.classes, &level.bases, &level.uh, &path)?;
            files.push(path);
        }
    }

    let table = if problem.exact().is_some() {
        let table = convergence_table(&reports, meta);
        let path = cfg.out.join(format!("{}_convergence.csv", cfg.name));
        write_convergence_csv(&table, &path)?;
        files.push(path);
        print(out, &table.to_text())?;
        Some(table)
    } else {
        let path = cfg.out.join(format!("{}_solve.csv", cfg.name));
        write_solve_csv(&solves, &meta, &path)?;
        files.push(path);
        None
    };
    Ok(RunSummary {
        table,
        solves,
        files,
    })
}

//! One refinement level end to end: mesh, classification, assembly,
//! boundary data, solve and error measurement.

use crate::assembly::{
    apply_dirichlet, assemble_with_bases, element_bases, quadratic_form, GlobalSystem,
    StabilizationConfig,
};
use crate::elements::{ElementBasis, MaterialParams};
use crate::geometry::Point;
use crate::interface::{classify_mesh, Classification, LevelSet};
use crate::manufactured::{unknown_solution_force, ManufacturedSolution};
use crate::mesh::{build_uniform_mesh, Mesh};
use crate::postproc::{error_norms, interpolate, ErrorReport};
use crate::solver::{solve_cg, solve_dense, SolveReport, DEFAULT_TOL};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Domain {
            xmin: -1.0,
            xmax: 1.0,
            ymin: -1.0,
            ymax: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing {
    /// Body force and boundary data of the manufactured solution.
    Manufactured(ManufacturedSolution),
    /// `F = (-11/4 - (lambda/mu) x, -29/4 - (lambda/mu) y)`, zero boundary data.
    UnknownSolution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    pub domain: Domain,
    pub level_set: LevelSet,
    pub mat: MaterialParams,
    pub forcing: Forcing,
}

impl Problem {
    pub fn manufactured(domain: Domain, level_set: LevelSet, mat: MaterialParams) -> Result<Self> {
        Ok(Problem {
            domain,
            level_set,
            mat,
            forcing: Forcing::Manufactured(ManufacturedSolution::new(level_set, mat)?),
        })
    }

    pub fn exact(&self) -> Option<&ManufacturedSolution> {
        match &self.forcing {
            Forcing::Manufactured(m) => Some(m),
            Forcing::UnknownSolution => None,
        }
    }

    pub fn force(&self) -> Box<dyn Fn(Point) -> [f64; 2] + Sync + '_> {
        match &self.forcing {
            Forcing::Manufactured(m) => Box::new(move |p| m.force(p)),
            Forcing::UnknownSolution => Box::new(unknown_solution_force(self.level_set, self.mat)),
        }
    }

    pub fn boundary(&self) -> Box<dyn Fn(Point) -> [f64; 2] + Sync + '_> {
        match &self.forcing {
            Forcing::Manufactured(m) => Box::new(move |p| m.u(p)),
            Forcing::UnknownSolution => Box::new(|_| [0.0, 0.0]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Cg,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    pub tol: f64,
    /// `None`: ten times the number of unknowns.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kind: SolverKind::Cg,
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }
}

/// Everything produced at one level.
#[derive(Debug, Clone)]
pub struct LevelSolution {
    pub k: u32,
    pub mesh: Mesh,
    pub classes: Classification,
    pub bases: Vec<ElementBasis>,
    /// Before boundary constraints.
    pub unconstrained: GlobalSystem,
    pub system: GlobalSystem,
    pub uh: Vec<f64>,
    pub report: SolveReport,
    pub errors: Option<ErrorReport>,
}

pub fn discretize(problem: &Problem, k: u32) -> Result<(Mesh, Classification)> {
    let d = &problem.domain;
    let mesh = build_uniform_mesh(d.xmin, d.xmax, d.ymin, d.ymax, k)?;
    let classes = classify_mesh(&problem.level_set, &mesh)?;
    Ok((mesh, classes))
}

pub fn solve_system(
    system: &GlobalSystem,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    match opts.kind {
        SolverKind::Cg => solve_cg(
            system,
            opts.tol,
            opts.max_iter.unwrap_or(10 * system.dim().max(10)),
        ),
        SolverKind::Dense => {
            let start = std::time::Instant::now();
            let x = solve_dense(system)?;
            let r = crate::assembly::spmv(&system.matrix, &x);
            let num: f64 = r
                .iter()
                .zip(&system.rhs)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            let den: f64 = system.rhs.iter().map(|b| b * b).sum();
            let residual = if den > 0.0 {
                (num / den).sqrt()
            } else {
                num.sqrt()
            };
            Ok((
                x,
                SolveReport {
                    iterations: 0,
                    residual,
                    seconds: start.elapsed().as_secs_f64(),
                },
            ))
        }
    }
}

pub fn solve_level(
    problem: &Problem,
    k: u32,
    stab: &StabilizationConfig,
    opts: &SolverOptions,
) -> Result<LevelSolution> {
    let (mesh, classes) = discretize(problem, k)?;
    let bases = element_bases(&mesh, &classes, &problem.mat)?;
    let force = problem.force();
    let unconstrained = assemble_with_bases(&mesh, &classes, &bases, &problem.mat, &*force, stab)?;
    let boundary = problem.boundary();
    let system = apply_dirichlet(&unconstrained, &mesh, &classes, &*boundary);
    let (uh, report) = solve_system(&system, opts)?;
    let errors = match problem.exact() {
        Some(exact) => {
            let mut e = error_norms(&mesh, &classes, &bases, &uh, exact)?;
            let iu = interpolate(&mesh, &classes, &|p| exact.u(p));
            let diff: Vec<f64> = iu.iter().zip(&uh).map(|(a, b)| a - b).collect();
            e.energy = Some(quadratic_form(&unconstrained.matrix, &diff).max(0.0).sqrt());
            Some(e)
        }
        None => None,
    };
    Ok(LevelSolution {
        k,
        mesh,
        classes,
        bases,
        unconstrained,
        system,
        uh,
        report,
        errors,
    })
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate cut: {0}")]
    DegenerateCut(String),

    /// The interface is too wiggly for the mesh (e.g. crosses an edge twice).
    #[error("interface assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("local interface system of element {element} is singular (pivot {pivot:e})")]
    SingularLocalSystem { element: usize, pivot: f64 },

    #[error("matrix is singular to working precision at column {column}")]
    SingularMatrix { column: usize },

    #[error("CG did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error(
        "matrix is not positive definite: curvature {curvature:e} at CG iteration {iteration}"
    )]
    NotPositiveDefinite { iteration: usize, curvature: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

//! Jacobi-preconditioned conjugate gradients and a dense LU fallback.

use std::time::Instant;

use crate::assembly::{spmv, spmv_into, GlobalSystem};
use crate::linalg::{DenseMatrix, Lu};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;

/// Largest system [`solve_dense`] accepts.
pub const DENSE_MAX_DIM: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||b - K x|| / ||b||` of the returned solution.
    pub residual: f64,
    pub seconds: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual(sys: &GlobalSystem, x: &[f64]) -> Vec<f64> {
    spmv(&sys.matrix, x)
        .iter()
        .zip(&sys.rhs)
        .map(|(kx, b)| b - kx)
        .collect()
}

/// CG with diagonal preconditioning from `x0 = 0`. Convergence is declared
/// on the true relative residual; if the recursive residual has drifted the
/// iteration restarts from the current iterate.
pub fn solve_cg(sys: &GlobalSystem, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = sys.dim();
    let bnorm = norm(&sys.rhs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                seconds: start.elapsed().as_secs_f64(),
            },
        ));
    }
    let mut inv_diag = vec![1.0; n];
    for (i, row) in sys.matrix.outer_iterator().enumerate() {
        let d = row.get(i).copied().unwrap_or(0.0);
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite {
                iteration: 0,
                curvature: d,
            });
        }
        inv_diag[i] = 1.0 / d;
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut r = sys.rhs.clone();
    let mut kp = vec![0.0; n];
    loop {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            let rel = norm(&r) / bnorm;
            history.push(rel);
            if rel <= tol || iterations >= max_iter {
                break;
            }
            spmv_into(&sys.matrix, &p, &mut kp);
            let curvature = dot(&p, &kp);
            if !(curvature > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    iteration: iterations,
                    curvature,
                });
            }
            let alpha = rz / curvature;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * kp[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            iterations += 1;
        }
        r = true_residual(sys, &x);
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok((
                x,
                SolveReport {
                    iterations,
                    residual: rel,
                    seconds: start.elapsed().as_secs_f64(),
                },
            ));
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: rel,
                history,
            });
        }
    }
}

/// Dense LU with partial pivoting.
pub fn solve_dense(sys: &GlobalSystem) -> Result<Vec<f64>> {
    let n = sys.dim();
    if n > DENSE_MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "dense solver limited to {DENSE_MAX_DIM} unknowns, got {n}"
        )));
    }
    let mut a = DenseMatrix::zeros(n, n);
    for (i, row) in sys.matrix.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            a[(i, j)] += v;
        }
    }
    let tol = 1e-14 * a.norm_inf();
    let lu = Lu::factor(a, tol).map_err(|e| Error::SingularMatrix { column: e.column })?;
    Ok(lu.solve(&sys.rhs))
}

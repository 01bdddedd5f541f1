//! Global system for the stabilized bilinear form
//! `a_h(u, v) = sum_T int 2 mu eps(u):eps(v) + lambda div u div v
//!            + tau/h sum_e int_e [u].[v]`
//! and strong Dirichlet data on boundary edge averages.

use rayon::prelude::*;
use sprs::{CsMat, TriMat};

use crate::elements::{element_basis, local_load, local_stiffness, ElementBasis, MaterialParams};
use crate::geometry::{segment_rule, Point};
use crate::interface::{Classification, Side};
use crate::mesh::{build_dof_map, Mesh};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeSet {
    /// Interior edges only; boundary averages are fixed strongly anyway.
    #[default]
    Interior,
    /// Interior and boundary edges (on the boundary the jump is the trace).
    All,
}

impl std::str::FromStr for EdgeSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(EdgeSet::Interior),
            "all" => Ok(EdgeSet::All),
            _ => Err(Error::InvalidInput(format!(
                "edge set must be `interior` or `all`, got `{s}`"
            ))),
        }
    }
}

impl std::fmt::Display for EdgeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EdgeSet::Interior => "interior",
            EdgeSet::All => "all",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationConfig {
    pub tau: f64,
    pub edge_set: EdgeSet,
}

impl StabilizationConfig {
    /// `tau` must be non-negative; zero switches the penalty off.
    pub fn new(tau: f64, edge_set: EdgeSet) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidInput(format!("tau must be >= 0, got {tau}")));
        }
        Ok(StabilizationConfig { tau, edge_set })
    }

    /// `tau = 10 max(mu+, mu-)` on interior edges.
    pub fn default_for(mat: &MaterialParams) -> Self {
        StabilizationConfig {
            tau: default_tau(mat),
            edge_set: EdgeSet::Interior,
        }
    }
}

pub fn default_tau(mat: &MaterialParams) -> f64 {
    10.0 * mat.max_mu()
}

/// Sparse system `K x = b` with the list of constrained DOFs.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub matrix: CsMat<f64>,
    pub rhs: Vec<f64>,
    /// `(dof, value)` sorted by dof; empty before [`apply_dirichlet`].
    pub constraints: Vec<(usize, f64)>,
}

impl GlobalSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// `max |K - K^T| / max |K|`
    pub fn symmetry_error(&self) -> f64 {
        let t = self.matrix.transpose_view().to_csr();
        let mut diff = 0.0f64;
        let mut norm = 0.0f64;
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            for (col, &v) in vec.iter() {
                norm = norm.max(v.abs());
                diff = diff.max((v - t.get(row, col).copied().unwrap_or(0.0)).abs());
            }
        }
        for (row, vec) in t.outer_iterator().enumerate() {
            for (col, &v) in vec.iter() {
                if self.matrix.get(row, col).is_none() {
                    diff = diff.max(v.abs());
                }
            }
        }
        if norm == 0.0 {
            0.0
        } else {
            diff / norm
        }
    }
}

/// `y = K x`, rows in parallel; each row sum is sequential so the result does
/// not depend on the thread count.
pub fn spmv(matrix: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; matrix.rows()];
    spmv_into(matrix, x, &mut y);
    y
}

pub fn spmv_into(matrix: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    assert!(matrix.is_csr());
    let indptr = matrix.indptr();
    let indptr = indptr.raw_storage();
    let (indices, data) = (matrix.indices(), matrix.data());
    y.par_iter_mut()
        .with_min_len(256)
        .enumerate()
        .for_each(|(i, yi)| {
            let mut s = 0.0;
            for k in indptr[i]..indptr[i + 1] {
                s += data[k] * x[indices[k]];
            }
            *yi = s;
        });
}

/// `v^T K v`
pub fn quadratic_form(matrix: &CsMat<f64>, v: &[f64]) -> f64 {
    spmv(matrix, v).iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Shape functions of every element, in element order.
pub fn element_bases(
    mesh: &Mesh,
    classes: &Classification,
    mat: &MaterialParams,
) -> Result<Vec<ElementBasis>> {
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| element_basis(&mesh.triangle_points(t), &classes.classes[t], mat))
        .collect()
}

/// Fallback side of an element for points not decided by a chord.
fn element_side(classes: &Classification, t: usize) -> Side {
    match &classes.classes[t] {
        crate::interface::ElementClass::NonInterface(s) => *s,
        crate::interface::ElementClass::Interface(_) => Side::Plus,
    }
}

/// `(tau / h) int_e [phi_i].[phi_j]` for one edge, as a dense block over the
/// DOFs of the (one or two) adjacent elements.
fn edge_penalty(
    mesh: &Mesh,
    classes: &Classification,
    bases: &[ElementBasis],
    edge: usize,
    tau: f64,
) -> (Vec<usize>, Vec<f64>) {
    let dofs = build_dof_map(mesh);
    let info = &mesh.edges[edge];
    let (p, q) = mesh.edge_points(edge);
    let mut pieces = vec![(p, q)];
    if let Some(c) = classes.edge_cuts[edge].interior_point() {
        pieces = vec![(p, c), (c, q)];
    }
    let rule = segment_rule(3).expect("two-point rule");
    let elems: Vec<(usize, f64)> = match (info.left, info.right) {
        (Some(l), Some(r)) => vec![(l, 1.0), (r, -1.0)],
        (Some(t), None) | (None, Some(t)) => vec![(t, 1.0)],
        (None, None) => vec![],
    };
    let mut ids = Vec::with_capacity(6 * elems.len());
    for &(t, _) in &elems {
        ids.extend(dofs.element_dofs(mesh, t));
    }
    let n = ids.len();
    let mut block = vec![0.0; n * n];
    let scale = tau / mesh.h;
    for (a, b) in pieces {
        for (x, w) in rule.mapped(a, b) {
            // jump values of all local functions, component-wise
            let mut jump = vec![[0.0; 2]; n];
            for (k, &(t, sign)) in elems.iter().enumerate() {
                let basis = &bases[t];
                let side = basis.side_at(x, element_side(classes, t));
                for (i, v) in basis.eval_all_on(side, x).iter().enumerate() {
                    jump[6 * k + i] = [sign * v[0], sign * v[1]];
                }
            }
            for i in 0..n {
                for j in 0..n {
                    block[i * n + j] +=
                        scale * w * (jump[i][0] * jump[j][0] + jump[i][1] * jump[j][1]);
                }
            }
        }
    }
    (ids, block)
}

/// Assemble `K` and `b` for body force `f`. Local contributions are computed
/// in parallel and scattered in a fixed order.
pub fn assemble(
    mesh: &Mesh,
    classes: &Classification,
    mat: &MaterialParams,
    f: &(dyn Fn(Point) -> [f64; 2] + Sync),
    stab: &StabilizationConfig,
) -> Result<GlobalSystem> {
    let bases = element_bases(mesh, classes, mat)?;
    assemble_with_bases(mesh, classes, &bases, mat, f, stab)
}

pub fn assemble_with_bases(
    mesh: &Mesh,
    classes: &Classification,
    bases: &[ElementBasis],
    mat: &MaterialParams,
    f: &(dyn Fn(Point) -> [f64; 2] + Sync),
    stab: &StabilizationConfig,
) -> Result<GlobalSystem> {
    if !(stab.tau.is_finite() && stab.tau >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "tau must be >= 0, got {}",
            stab.tau
        )));
    }
    let dofs = build_dof_map(mesh);
    let n = dofs.total_dofs();
    let locals: Vec<([usize; 6], [[f64; 6]; 6], [f64; 6])> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.triangle_points(t);
            let class = &classes.classes[t];
            (
                dofs.element_dofs(mesh, t),
                local_stiffness(&tri, class, &bases[t], mat),
                local_load(&tri, class, &bases[t], f),
            )
        })
        .collect();
    let edges: Vec<usize> = match stab.edge_set {
        EdgeSet::Interior => mesh.interior_edges().collect(),
        EdgeSet::All => (0..mesh.num_edges()).collect(),
    };
    let penalties: Vec<(Vec<usize>, Vec<f64>)> = if stab.tau > 0.0 {
        edges
            .par_iter()
            .map(|&e| edge_penalty(mesh, classes, bases, e, stab.tau))
            .collect()
    } else {
        Vec::new()
    };

    let nnz = 36 * locals.len() + penalties.iter().map(|(_, b)| b.len()).sum::<usize>();
    let mut tri = TriMat::with_capacity((n, n), nnz);
    let mut rhs = vec![0.0; n];
    for (ids, k, load) in &locals {
        for i in 0..6 {
            rhs[ids[i]] += load[i];
            for j in 0..6 {
                tri.add_triplet(ids[i], ids[j], k[i][j]);
            }
        }
    }
    for (ids, block) in &penalties {
        let m = ids.len();
        for i in 0..m {
            for j in 0..m {
                tri.add_triplet(ids[i], ids[j], block[i * m + j]);
            }
        }
    }
    Ok(GlobalSystem {
        matrix: tri.to_csr(),
        rhs,
        constraints: Vec::new(),
    })
}

/// Averages of `g` over boundary edges, two-point Gauss on each piece of an
/// edge split at its interface crossing.
pub fn boundary_values(
    mesh: &Mesh,
    classes: &Classification,
    g: &(dyn Fn(Point) -> [f64; 2] + Sync),
) -> Vec<(usize, f64)> {
    let dofs = build_dof_map(mesh);
    let rule = segment_rule(3).expect("two-point rule");
    let mut out = Vec::new();
    for e in mesh.boundary_edges() {
        let (p, q) = mesh.edge_points(e);
        let len = p.dist(q);
        let pieces = match classes.edge_cuts[e].interior_point() {
            Some(c) => vec![(p, c), (c, q)],
            None => vec![(p, q)],
        };
        let mut avg = [0.0; 2];
        for (a, b) in pieces {
            for (x, w) in rule.mapped(a, b) {
                let v = g(x);
                avg[0] += w * v[0] / len;
                avg[1] += w * v[1] / len;
            }
        }
        out.push((dofs.index(e, 0), avg[0]));
        out.push((dofs.index(e, 1), avg[1]));
    }
    out.sort_by_key(|&(d, _)| d);
    out
}

/// Fix the given DOFs by symmetric elimination. Constrained rows keep their
/// diagonal entry, so the scaling of the system is unchanged.
pub fn apply_constraints(sys: &GlobalSystem, constraints: &[(usize, f64)]) -> GlobalSystem {
    let n = sys.dim();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &(d, v) in constraints {
        fixed[d] = Some(v);
    }
    let mut rhs = sys.rhs.clone();
    let mut tri = TriMat::with_capacity((n, n), sys.matrix.nnz());
    for (row, vec) in sys.matrix.outer_iterator().enumerate() {
        let mut diag = 0.0;
        for (col, &v) in vec.iter() {
            if col == row {
                diag = v;
            }
            match (fixed[row], fixed[col]) {
                (None, None) => tri.add_triplet(row, col, v),
                (None, Some(g)) => rhs[row] -= v * g,
                _ => {}
            }
        }
        if let Some(g) = fixed[row] {
            let d = if diag > 0.0 { diag } else { 1.0 };
            tri.add_triplet(row, row, d);
            rhs[row] = d * g;
        }
    }
    let mut list = constraints.to_vec();
    list.sort_by_key(|&(d, _)| d);
    GlobalSystem {
        matrix: tri.to_csr(),
        rhs,
        constraints: list,
    }
}

/// Impose `u = g` on the boundary through edge averages.
pub fn apply_dirichlet(
    sys: &GlobalSystem,
    mesh: &Mesh,
    classes: &Classification,
    g: &(dyn Fn(Point) -> [f64; 2] + Sync),
) -> GlobalSystem {
    apply_constraints(sys, &boundary_values(mesh, classes, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::{classify_mesh, LevelSet};
    use crate::mesh::build_uniform_mesh;

    fn setup(k: u32) -> (Mesh, Classification, MaterialParams) {
        let mesh = build_uniform_mesh(-1.0, 1.0, -1.0, 1.0, k).unwrap();
        let cls = classify_mesh(&LevelSet::Circle { r0: 0.36 }, &mesh).unwrap();
        let mat = MaterialParams::with_lambda_ratio(1.0, 100.0, 5.0).unwrap();
        (mesh, cls, mat)
    }

    fn dense(m: &CsMat<f64>) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; m.cols()]; m.rows()];
        for (r, vec) in m.outer_iterator().enumerate() {
            for (c, &v) in vec.iter() {
                d[r][c] += v;
            }
        }
        d
    }

    #[test]
    fn assembled_matrix_is_symmetric_with_translations_in_kernel() {
        let (mesh, cls, mat) = setup(3);
        assert!(cls.num_interface_elements() > 0);
        for edge_set in [EdgeSet::Interior, EdgeSet::All] {
            let stab = StabilizationConfig::new(10.0, edge_set).unwrap();
            let sys = assemble(&mesh, &cls, &mat, &|_| [0.0, 0.0], &stab).unwrap();
            assert!(sys.symmetry_error() <= 1e-12);
            let n = sys.dim();
            let norm = sys.matrix.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for comp in 0..2 {
                let t: Vec<f64> = (0..n)
                    .map(|i| if i % 2 == comp { 1.0 } else { 0.0 })
                    .collect();
                let kt = spmv(&sys.matrix, &t);
                let tol = 1e-11 * norm;
                if edge_set == EdgeSet::Interior {
                    assert!(kt.iter().all(|v| v.abs() <= tol));
                } else {
                    // boundary traces of a translation do not vanish
                    assert!(kt.iter().any(|v| v.abs() > tol));
                }
            }
        }
    }

    #[test]
    fn linear_in_tau() {
        let (mesh, cls, mat) = setup(2);
        let k = |tau| {
            let stab = StabilizationConfig::new(tau, EdgeSet::Interior).unwrap();
            dense(
                &assemble(&mesh, &cls, &mat, &|_| [0.0, 0.0], &stab)
                    .unwrap()
                    .matrix,
            )
        };
        let (k0, k1, k2) = (k(0.0), k(1.0), k(2.0));
        let norm = k2.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..k0.len() {
            for j in 0..k0.len() {
                let d = (k2[i][j] - k1[i][j]) - (k1[i][j] - k0[i][j]);
                assert!(d.abs() <= 1e-12 * norm, "{d}");
            }
        }
    }

    #[test]
    fn constraints_keep_symmetry_and_values() {
        let (mesh, cls, mat) = setup(2);
        let stab = StabilizationConfig::default_for(&mat);
        let sys = assemble(&mesh, &cls, &mat, &|p| [p.x, 1.0], &stab).unwrap();
        let con = apply_dirichlet(&sys, &mesh, &cls, &|_| [0.0, 0.0]);
        assert!(con.symmetry_error() <= 1e-12);
        assert_eq!(con.constraints.len(), 2 * mesh.boundary_edges().count());
        assert!(con.constraints.iter().all(|&(_, v)| v == 0.0));
        for &(d, _) in &con.constraints {
            assert_eq!(con.rhs[d], 0.0);
            let row = con.matrix.outer_view(d).unwrap();
            assert_eq!(row.nnz(), 1);
        }
    }

    #[test]
    fn thread_count_does_not_change_the_matrix() {
        let (mesh, cls, mat) = setup(3);
        let stab = StabilizationConfig::default_for(&mat);
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| assemble(&mesh, &cls, &mat, &|p| [p.x, p.y], &stab).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn negative_tau_rejected() {
        assert!(StabilizationConfig::new(-1.0, EdgeSet::Interior).is_err());
        assert_eq!("all".parse::<EdgeSet>().unwrap(), EdgeSet::All);
        assert!("none".parse::<EdgeSet>().is_err());
    }
}

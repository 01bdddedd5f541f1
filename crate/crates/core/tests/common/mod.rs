//! Plain Crouzeix-Raviart elasticity assembled from scratch, used as an
//! oracle. Shares only the mesh with the library.

#![allow(dead_code)]

use ifem_core::geometry::Point;
use ifem_core::mesh::Mesh;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

/// Gradients of the barycentric coordinates and the area.
fn barycentric(tri: &[Point; 3]) -> ([[f64; 2]; 3], f64) {
    let m = Matrix3::new(
        tri[0].x, tri[1].x, tri[2].x, tri[0].y, tri[1].y, tri[2].y, 1.0, 1.0, 1.0,
    );
    let area = 0.5 * m.determinant();
    let inv = m.try_inverse().expect("nondegenerate triangle");
    // lambda = inv * (x, y, 1): row j of inv holds grad lambda_j
    let g = [0, 1, 2].map(|j| [inv[(j, 0)], inv[(j, 1)]]);
    (g, area)
}

/// Global DOFs of a triangle: (component 0 on local edges 0..3, component 1 on 0..3),
/// local edge j opposite vertex j.
fn dofs(mesh: &Mesh, t: usize) -> [usize; 6] {
    let v = mesh.triangles[t];
    let edge = |j: usize| {
        let (a, b) = (v[(j + 1) % 3], v[(j + 2) % 3]);
        let key = [a.min(b), a.max(b)];
        mesh.edges.iter().position(|e| e.vertices == key).unwrap()
    };
    let e = [edge(0), edge(1), edge(2)];
    [
        2 * e[0],
        2 * e[1],
        2 * e[2],
        2 * e[0] + 1,
        2 * e[1] + 1,
        2 * e[2] + 1,
    ]
}

/// Value of CR function `j` (scalar `1 - 2 lambda_j`) at local vertex `k`.
fn cr_at_vertex(j: usize, k: usize) -> f64 {
    if j == k {
        -1.0
    } else {
        1.0
    }
}

pub struct Reference {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

/// `K` and `b` with volume terms, loads by the edge-midpoint rule and the
/// edge penalty `tau/h int [u].[v]` on interior edges by Simpson's rule.
pub fn reference_system(
    mesh: &Mesh,
    mu: f64,
    lambda: f64,
    tau: f64,
    f: impl Fn(Point) -> [f64; 2],
) -> Reference {
    let n = 2 * mesh.num_edges();
    let mut k = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle_points(t);
        let (g, area) = barycentric(&tri);
        let d = dofs(mesh, t);
        // vector basis i: component i / 3 times psi_{i % 3}, grad psi_j = -2 grad lambda_j
        let grad = |i: usize| {
            let s = [-2.0 * g[i % 3][0], -2.0 * g[i % 3][1]];
            if i < 3 {
                [[s[0], s[1]], [0.0, 0.0]]
            } else {
                [[0.0, 0.0], [s[0], s[1]]]
            }
        };
        for i in 0..6 {
            let gi = grad(i);
            let ei = [
                [gi[0][0], 0.5 * (gi[0][1] + gi[1][0])],
                [0.5 * (gi[0][1] + gi[1][0]), gi[1][1]],
            ];
            let di = gi[0][0] + gi[1][1];
            for j in 0..6 {
                let gj = grad(j);
                let ej = [
                    [gj[0][0], 0.5 * (gj[0][1] + gj[1][0])],
                    [0.5 * (gj[0][1] + gj[1][0]), gj[1][1]],
                ];
                let dj = gj[0][0] + gj[1][1];
                let ee: f64 = (0..2)
                    .flat_map(|r| (0..2).map(move |c| (r, c)))
                    .map(|(r, c)| ei[r][c] * ej[r][c])
                    .sum();
                k[(d[i], d[j])] += area * (2.0 * mu * ee + lambda * di * dj);
            }
            // psi_j is 1 at the midpoint of edge j and 0 at the other two
            let j = i % 3;
            let m = Point::new(
                0.5 * (tri[(j + 1) % 3].x + tri[(j + 2) % 3].x),
                0.5 * (tri[(j + 1) % 3].y + tri[(j + 2) % 3].y),
            );
            b[d[i]] += area / 3.0 * f(m)[i / 3];
        }
    }
    if tau > 0.0 {
        for edge in mesh.edges.iter().filter(|e| !e.is_boundary()) {
            let (l, r) = (edge.left.unwrap(), edge.right.unwrap());
            let [va, vb] = edge.vertices;
            let len = (mesh.vertices[va] - mesh.vertices[vb]).norm();
            // Simpson nodes a, m, b: values of the scalar CR functions of each side
            let side_values = |t: usize| -> Vec<[f64; 3]> {
                let v = mesh.triangles[t];
                let ka = v.iter().position(|&x| x == va).unwrap();
                let kb = v.iter().position(|&x| x == vb).unwrap();
                let own = 3 - ka - kb;
                (0..3)
                    .map(|j| {
                        let mid = if j == own { 1.0 } else { 0.0 };
                        [cr_at_vertex(j, ka), mid, cr_at_vertex(j, kb)]
                    })
                    .collect()
            };
            let (sl, sr) = (side_values(l), side_values(r));
            let (dl, dr) = (dofs(mesh, l), dofs(mesh, r));
            let mut ids = Vec::new();
            let mut vals: Vec<[f64; 3]> = Vec::new();
            for (d, s, sign) in [(dl, &sl, 1.0), (dr, &sr, -1.0)] {
                for i in 0..6 {
                    ids.push((d[i], i / 3));
                    vals.push(s[i % 3].map(|x| sign * x));
                }
            }
            let w = [len / 6.0, 4.0 * len / 6.0, len / 6.0];
            for (a, (ia, ca)) in ids.iter().enumerate() {
                for (c, (ic, cc)) in ids.iter().enumerate() {
                    if ca != cc {
                        continue;
                    }
                    let s: f64 = (0..3).map(|q| w[q] * vals[a][q] * vals[c][q]).sum();
                    k[(*ia, *ic)] += tau / mesh.h * s;
                }
            }
        }
    }
    Reference { matrix: k, rhs: b }
}

/// Boundary edge averages of `g` by Simpson's rule, as `(dof, value)`.
pub fn reference_boundary(mesh: &Mesh, g: impl Fn(Point) -> [f64; 2]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for (e, edge) in mesh.edges.iter().enumerate() {
        if !edge.is_boundary() {
            continue;
        }
        let (a, b) = (
            mesh.vertices[edge.vertices[0]],
            mesh.vertices[edge.vertices[1]],
        );
        let m = Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
        for c in 0..2 {
            out.push((2 * e + c, (g(a)[c] + 4.0 * g(m)[c] + g(b)[c]) / 6.0));
        }
    }
    out
}

/// Solve with the constrained DOFs removed.
pub fn reference_solve(sys: &Reference, constraints: &[(usize, f64)]) -> DVector<f64> {
    let n = sys.rhs.len();
    let mut fixed = vec![None; n];
    for &(d, v) in constraints {
        fixed[d] = Some(v);
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let kff = DMatrix::from_fn(free.len(), free.len(), |i, j| {
        sys.matrix[(free[i], free[j])]
    });
    let rhs = DVector::from_fn(free.len(), |i, _| {
        let r = free[i];
        sys.rhs[r]
            - (0..n)
                .filter_map(|c| fixed[c].map(|g| sys.matrix[(r, c)] * g))
                .sum::<f64>()
    });
    let xf = kff.lu().solve(&rhs).expect("nonsingular reduced system");
    let mut x = DVector::zeros(n);
    for (i, &r) in free.iter().enumerate() {
        x[r] = xf[i];
    }
    for (d, v) in fixed.iter().enumerate() {
        if let Some(v) = v {
            x[d] = *v;
        }
    }
    x
}

/// Dense copy of a CSR matrix.
pub fn to_dense(m: &sprs::CsMat<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.rows(), m.cols());
    for (r, vec) in m.outer_iterator().enumerate() {
        for (c, &v) in vec.iter() {
            d[(r, c)] += v;
        }
    }
    d
}

#[allow(unused)]
pub fn vec3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v)
}

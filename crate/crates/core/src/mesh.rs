//! Uniform right-triangle meshes of a rectangle with edge connectivity, and
//! the edge-based DOF numbering of the vector Crouzeix-Raviart space.

use std::collections::HashMap;
use std::io::Write;

use crate::geometry::{local_edge_vertices, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// End points, lower vertex index first. This is the canonical orientation.
    pub vertices: [usize; 2],
    /// Triangle to the left of the canonical direction.
    pub left: Option<usize>,
    /// Triangle to the right of the canonical direction.
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.left.is_none() || self.right.is_none()
    }

    /// Adjacent triangles, the one on the left first.
    pub fn triangles(&self) -> impl Iterator<Item = usize> {
        self.left.into_iter().chain(self.right)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Vertex triples in counter-clockwise order.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// `triangle_edges[t][j]` is the global id of local edge `j` (opposite
    /// local vertex `j`).
    pub triangle_edges: Vec<[usize; 3]>,
    /// `+1` when local edge `j` runs in the canonical direction, `-1` otherwise.
    pub edge_signs: Vec<[i8; 3]>,
    pub h: f64,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn edge_points(&self, e: usize) -> (Point, Point) {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[a], self.vertices[b])
    }

    /// Local index (0..3) of global edge `e` in triangle `t`.
    pub fn local_edge_index(&self, t: usize, e: usize) -> Option<usize> {
        self.triangle_edges[t].iter().position(|&g| g == e)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edges[e].is_boundary())
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.edges[e].is_boundary())
    }

    /// Plain-text dump: `v x y`, `e a b left right` (`-1` on the boundary),
    /// `t a b c`, one item per line.
    pub fn write_text(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# h {}", self.h)?;
        for p in &self.vertices {
            writeln!(out, "v {} {}", p.x, p.y)?;
        }
        let id = |t: Option<usize>| t.map_or(-1, |t| t as i64);
        for e in &self.edges {
            writeln!(
                out,
                "e {} {} {} {}",
                e.vertices[0],
                e.vertices[1],
                id(e.left),
                id(e.right)
            )?;
        }
        for t in &self.triangles {
            writeln!(out, "t {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

fn cells_along(len: f64, h: f64, axis: &str) -> Result<usize> {
    let n = len / h;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "{axis}-extent {len} is not an integral number of cells of size {h}"
        )));
    }
    Ok(rounded as usize)
}

/// Square cells of side `h = 2^-k`, each split by the lower-left to
/// upper-right diagonal.
pub fn build_uniform_mesh(xmin: f64, xmax: f64, ymin: f64, ymax: f64, k: u32) -> Result<Mesh> {
    if !(xmax > xmin && ymax > ymin) {
        return Err(Error::InvalidInput(format!(
            "empty rectangle [{xmin}, {xmax}] x [{ymin}, {ymax}]"
        )));
    }
    if k > 30 {
        return Err(Error::InvalidInput(format!(
            "refinement level {k} too large"
        )));
    }
    let h = 0.5f64.powi(k as i32);
    let nx = cells_along(xmax - xmin, h, "x")?;
    let ny = cells_along(ymax - ymin, h, "y")?;

    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(xmin + i as f64 * h, ymin + j as f64 * h));
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    let mut edge_signs = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut ids = [0; 3];
        let mut signs = [0; 3];
        for j in 0..3 {
            let (a, b) = local_edge_vertices(j);
            let (va, vb) = (tri[a], tri[b]);
            let key = [va.min(vb), va.max(vb)];
            let forward = va < vb;
            let id = *lookup.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    vertices: key,
                    left: None,
                    right: None,
                });
                edges.len() - 1
            });
            // CCW traversal keeps the triangle on the left of its own edges.
            if forward {
                edges[id].left = Some(t);
            } else {
                edges[id].right = Some(t);
            }
            ids[j] = id;
            signs[j] = if forward { 1 } else { -1 };
        }
        triangle_edges.push(ids);
        edge_signs.push(signs);
    }

    Ok(Mesh {
        vertices,
        triangles,
        edges,
        triangle_edges,
        edge_signs,
        h,
    })
}

/// Two DOFs per edge (the two displacement components' edge averages).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    pub num_edges: usize,
}

impl DofMap {
    pub fn total_dofs(&self) -> usize {
        2 * self.num_edges
    }

    /// Global index of `(edge, component)` with component in `{0, 1}`.
    pub fn index(&self, edge: usize, component: usize) -> usize {
        debug_assert!(component < 2 && edge < self.num_edges);
        2 * edge + component
    }

    pub fn edge_and_component(&self, dof: usize) -> (usize, usize) {
        (dof / 2, dof % 2)
    }

    /// The 12 global DOFs of a triangle in local order: local basis `i < 3`
    /// carries component 0 on local edge `i`, `i >= 3` component 1 on local
    /// edge `i - 3`.
    pub fn element_dofs(&self, mesh: &Mesh, t: usize) -> [usize; 6] {
        let e = mesh.triangle_edges[t];
        [
            self.index(e[0], 0),
            self.index(e[1], 0),
            self.index(e[2], 0),
            self.index(e[0], 1),
            self.index(e[1], 1),
            self.index(e[2], 1),
        ]
    }
}

pub fn build_dof_map(mesh: &Mesh) -> DofMap {
    DofMap {
        num_edges: mesh.num_edges(),
    }
}

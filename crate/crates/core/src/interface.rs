//! Level-set interfaces, element classification and per-element cut data.
//!
//! Sign convention: `L > 0` is the `+` material, `L < 0` the `-` material.
//! Inside a cut element the interface is replaced by the chord `DE` joining
//! its two edge crossings.

use rayon::prelude::*;

use crate::geometry::{
    clip_triangle_by_segment, local_edge_vertices, orient, triangle_centroid, Point, Polygon,
    TriangleLocation, SNAP_TOL,
};
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Bisection steps used by [`bisect_root`].
pub const BISECTION_STEPS: usize = 50;

/// Samples per edge used to detect multiple crossings.
pub const CROSSING_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn of_value(l: f64) -> Side {
        if l >= 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// Analytic level sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelSet {
    /// `x^2 + y^2 - r0^2`
    Circle { r0: f64 },
    /// `x^2 / 4 + y^2 - r0^2`
    Ellipse { r0: f64 },
    /// `a x + b y - c`
    Line { a: f64, b: f64, c: f64 },
}

impl LevelSet {
    /// The vertical line `x = gamma`, with `+` on the right.
    pub fn vertical_line(gamma: f64) -> Self {
        LevelSet::Line {
            a: 1.0,
            b: 0.0,
            c: gamma,
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        match *self {
            LevelSet::Circle { r0 } => p.x * p.x + p.y * p.y - r0 * r0,
            LevelSet::Ellipse { r0 } => 0.25 * p.x * p.x + p.y * p.y - r0 * r0,
            LevelSet::Line { a, b, c } => a * p.x + b * p.y - c,
        }
    }

    pub fn gradient(&self, p: Point) -> Point {
        match *self {
            LevelSet::Circle { .. } => Point::new(2.0 * p.x, 2.0 * p.y),
            LevelSet::Ellipse { .. } => Point::new(0.5 * p.x, 2.0 * p.y),
            LevelSet::Line { a, b, .. } => Point::new(a, b),
        }
    }

    pub fn side(&self, p: Point) -> Side {
        Side::of_value(self.value(p))
    }

    /// Coefficients `(a2, a1, a0)` of `t -> L(p + t (q - p))`; every level set
    /// here is at most quadratic.
    pub fn along(&self, p: Point, q: Point) -> (f64, f64, f64) {
        let d = q - p;
        let a0 = self.value(p);
        match *self {
            LevelSet::Circle { .. } => (d.dot(d), 2.0 * p.dot(d), a0),
            LevelSet::Ellipse { .. } => (
                0.25 * d.x * d.x + d.y * d.y,
                2.0 * (0.25 * p.x * d.x + p.y * d.y),
                a0,
            ),
            LevelSet::Line { a, b, .. } => (0.0, a * d.x + b * d.y, a0),
        }
    }
}

/// Root of `f` on `[0, 1]` by bisection, given a sign change at the ends.
pub fn bisect_root(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    let flo = f(lo);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of `a2 t^2 + a1 t + a0` in `[0, 1]`, cancellation-free form.
fn quadratic_root(a2: f64, a1: f64, a0: f64) -> Option<f64> {
    let in_unit = |t: f64| (-1e-12..=1.0 + 1e-12).contains(&t);
    if a2 == 0.0 {
        let t = -a0 / a1;
        return (a1 != 0.0 && in_unit(t)).then(|| t.clamp(0.0, 1.0));
    }
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
    let roots = [q / a2, if q != 0.0 { a0 / q } else { f64::NAN }];
    roots
        .into_iter()
        .find(|t| in_unit(*t))
        .map(|t| t.clamp(0.0, 1.0))
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Parameter `t` of the interface crossing on segment `p -> q`, if the end
/// values have strictly opposite signs.
pub fn edge_root(ls: &LevelSet, p: Point, q: Point) -> Result<Option<f64>> {
    let (a2, a1, a0) = ls.along(p, q);
    let poly = |t: f64| (a2 * t + a1) * t + a0;
    let mut changes = 0;
    let mut last = 0i8;
    for i in 0..=CROSSING_SAMPLES {
        let t = i as f64 / CROSSING_SAMPLES as f64;
        let s = sign(ls.value(p.lerp(q, t)));
        if s != 0 {
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
    }
    if changes > 1 {
        return Err(Error::AssumptionViolation(format!(
            "interface crosses edge ({}, {})-({}, {}) more than once; refine the mesh",
            p.x, p.y, q.x, q.y
        )));
    }
    let (lp, lq) = (ls.value(p), ls.value(q));
    if sign(lp) * sign(lq) >= 0 {
        return Ok(None);
    }
    let t = quadratic_root(a2, a1, a0).unwrap_or_else(|| bisect_root(poly));
    Ok(Some(t))
}

/// Where the interface meets a mesh edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeCut {
    None,
    /// Strictly inside the edge at parameter `t` along the canonical direction.
    Interior {
        t: f64,
        point: Point,
    },
    /// Snapped onto the given mesh vertex.
    Vertex(usize),
}

impl EdgeCut {
    pub fn interior_point(&self) -> Option<Point> {
        match self {
            EdgeCut::Interior { point, .. } => Some(*point),
            _ => None,
        }
    }
}

pub fn edge_cut(ls: &LevelSet, mesh: &Mesh, edge: usize) -> Result<EdgeCut> {
    let [a, b] = mesh.edges[edge].vertices;
    let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
    let Some(t) = edge_root(ls, p, q)? else {
        return Ok(EdgeCut::None);
    };
    let len = p.dist(q);
    let tol = SNAP_TOL * mesh.h;
    Ok(if t * len <= tol {
        EdgeCut::Vertex(a)
    } else if (1.0 - t) * len <= tol {
        EdgeCut::Vertex(b)
    } else {
        EdgeCut::Interior {
            t,
            point: p.lerp(q, t),
        }
    })
}

/// The straight segment standing in for the interface inside one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub d: Point,
    pub e: Point,
    /// Unit normal pointing from the `-` piece into the `+` piece.
    pub normal: Point,
}

impl Chord {
    /// Side of `p` relative to the chord line.
    pub fn side(&self, p: Point) -> Side {
        Side::of_value(self.normal.dot(p - self.d))
    }

    pub fn length(&self) -> f64 {
        self.d.dist(self.e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutInfo {
    pub element: usize,
    pub d: Point,
    pub e: Point,
    pub d_location: TriangleLocation,
    pub e_location: TriangleLocation,
    /// Unit normal of `DE`, from `minus` into `plus`.
    pub normal: Point,
    pub plus: Polygon,
    pub minus: Polygon,
}

impl CutInfo {
    /// Build cut data for triangle `tri` crossed at `d` and `e`, with `plus`
    /// on the side of `plus_vertex`.
    pub fn new(
        element: usize,
        tri: &[Point; 3],
        mut d: Point,
        mut e: Point,
        plus_vertex: Point,
    ) -> Result<Self> {
        if orient(d, e, plus_vertex) < 0.0 {
            std::mem::swap(&mut d, &mut e);
        }
        let (plus, minus) = clip_triangle_by_segment(tri, d, e)?;
        let d_location = crate::geometry::locate_on_boundary(tri, d)?;
        let e_location = crate::geometry::locate_on_boundary(tri, e)?;
        let snap = |loc, p| match loc {
            TriangleLocation::Vertex(i) => tri[i],
            TriangleLocation::Edge(_) => p,
        };
        let (d, e) = (snap(d_location, d), snap(e_location, e));
        let dir = e - d;
        let normal = Point::new(-dir.y, dir.x) * (1.0 / dir.norm());
        Ok(CutInfo {
            element,
            d,
            e,
            d_location,
            e_location,
            normal,
            plus,
            minus,
        })
    }

    pub fn chord(&self) -> Chord {
        Chord {
            d: self.d,
            e: self.e,
            normal: self.normal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementClass {
    NonInterface(Side),
    Interface(Box<CutInfo>),
}

impl ElementClass {
    pub fn is_interface(&self) -> bool {
        matches!(self, ElementClass::Interface(_))
    }

    pub fn cut(&self) -> Option<&CutInfo> {
        match self {
            ElementClass::Interface(c) => Some(c),
            ElementClass::NonInterface(_) => None,
        }
    }

    /// Material side of a point inside the element (by chord for cut elements).
    pub fn side_at(&self, p: Point) -> Side {
        match self {
            ElementClass::NonInterface(s) => *s,
            ElementClass::Interface(c) => c.chord().side(p),
        }
    }
}

fn classify_with_cuts(
    ls: &LevelSet,
    mesh: &Mesh,
    elem: usize,
    cuts: [EdgeCut; 3],
) -> Result<ElementClass> {
    let tri = mesh.triangle_points(elem);
    let verts = mesh.triangles[elem];
    let values = tri.map(|p| ls.value(p));

    let mut on_vertex = [false; 3];
    let mut interior: Vec<Point> = Vec::with_capacity(3);
    for (i, v) in values.iter().enumerate() {
        if *v == 0.0 {
            on_vertex[i] = true;
        }
    }
    for cut in cuts {
        match cut {
            EdgeCut::None => {}
            EdgeCut::Interior { point, .. } => interior.push(point),
            EdgeCut::Vertex(gv) => {
                let i = verts
                    .iter()
                    .position(|&v| v == gv)
                    .expect("edge vertex in element");
                on_vertex[i] = true;
            }
        }
    }
    let vertex_cuts: Vec<usize> = (0..3).filter(|&i| on_vertex[i]).collect();
    let count = interior.len() + vertex_cuts.len();
    if count > 2 {
        return Err(Error::AssumptionViolation(format!(
            "element {elem} meets the interface at {count} points"
        )));
    }
    let centroid_side = || ls.side(triangle_centroid(&tri));
    if count < 2 || interior.is_empty() {
        // untouched, touched at one vertex, or cut exactly along an edge
        return Ok(ElementClass::NonInterface(centroid_side()));
    }
    let points: Vec<Point> = vertex_cuts
        .iter()
        .map(|&i| tri[i])
        .chain(interior.iter().copied())
        .collect();
    let plus_vertex = (0..3)
        .filter(|&i| !on_vertex[i] && values[i] > 0.0)
        .map(|i| tri[i])
        .next()
        .ok_or_else(|| {
            Error::AssumptionViolation(format!("element {elem} has no vertex on the + side"))
        })?;
    let info = CutInfo::new(elem, &tri, points[0], points[1], plus_vertex)?;
    Ok(ElementClass::Interface(Box::new(info)))
}

/// Classify one element of `mesh`.
pub fn classify(ls: &LevelSet, mesh: &Mesh, elem: usize) -> Result<ElementClass> {
    let mut cuts = [EdgeCut::None; 3];
    for (j, cut) in cuts.iter_mut().enumerate() {
        *cut = edge_cut(ls, mesh, mesh.triangle_edges[elem][j])?;
    }
    classify_with_cuts(ls, mesh, elem, cuts)
}

/// Classification of every element together with the per-edge crossings.
#[derive(Debug, Clone)]
pub struct Classification {
    pub level_set: LevelSet,
    pub classes: Vec<ElementClass>,
    pub edge_cuts: Vec<EdgeCut>,
}

impl Classification {
    pub fn num_interface_elements(&self) -> usize {
        self.classes.iter().filter(|c| c.is_interface()).count()
    }
}

pub fn classify_mesh(ls: &LevelSet, mesh: &Mesh) -> Result<Classification> {
    let edge_cuts = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| edge_cut(ls, mesh, e))
        .collect::<Result<Vec<_>>>()?;
    let classes = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let cuts = mesh.triangle_edges[t].map(|e| edge_cuts[e]);
            classify_with_cuts(ls, mesh, t, cuts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Classification {
        level_set: *ls,
        classes,
        edge_cuts,
    })
}

/// Sub-segments of local edge `j` of triangle `tri`, split at an interior cut
/// point if there is one.
pub fn edge_pieces(tri: &[Point; 3], j: usize, cut: Option<Point>) -> Vec<(Point, Point)> {
    let (a, b) = local_edge_vertices(j);
    let (p, q) = (tri[a], tri[b]);
    match cut {
        Some(c) => vec![(p, c), (c, q)],
        None => vec![(p, q)],
    }
}

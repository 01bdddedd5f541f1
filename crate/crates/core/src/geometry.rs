//! Planar primitives: points, convex polygons, clipping a triangle along a
//! chord, and Gauss rules on segments and triangles.

use std::ops::{Add, Mul, Sub};

use crate::{Error, Result};

/// Relative tolerance (times the element diameter) under which a point is
/// identified with a triangle vertex.
pub const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// `self + t (other - self)`
    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when CCW.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

pub fn triangle_area(tri: &[Point; 3]) -> f64 {
    0.5 * orient(tri[0], tri[1], tri[2])
}

pub fn triangle_centroid(tri: &[Point; 3]) -> Point {
    Point::new(
        (tri[0].x + tri[1].x + tri[2].x) / 3.0,
        (tri[0].y + tri[1].y + tri[2].y) / 3.0,
    )
}

/// Shoelace signed area of a closed vertex loop.
pub fn polygon_area(vertices: &[Point]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "polygon needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum();
    Ok(0.5 * twice)
}

/// A counter-clockwise simple polygon with positive area.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite vertex {p:?}")));
        }
        let area = polygon_area(&vertices)?;
        if area <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "polygon must be counter-clockwise with positive area, got {area:e}"
            )));
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        // Invariant: at least three vertices.
        polygon_area(&self.vertices).unwrap_or(0.0)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        let mut acc = Point::default();
        let mut area = 0.0;
        for tri in fan_triangulate(self) {
            let a = triangle_area(&tri);
            acc = acc + triangle_centroid(&tri) * a;
            area += a;
        }
        acc * (1.0 / area)
    }
}

/// Fan triangulation from vertex 0. Only valid for convex polygons, which is
/// all this crate produces.
pub fn fan_triangulate(p: &Polygon) -> Vec<[Point; 3]> {
    let v = p.vertices();
    (1..v.len() - 1).map(|i| [v[0], v[i], v[i + 1]]).collect()
}

/// Where a cut point sits on a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleLocation {
    Vertex(usize),
    /// Local edge `j`, the one opposite vertex `j`.
    Edge(usize),
}

impl TriangleLocation {
    fn on_edge(self, edge: usize) -> bool {
        match self {
            TriangleLocation::Edge(j) => j == edge,
            TriangleLocation::Vertex(i) => i != edge,
        }
    }
}

/// Local edge `j` of a triangle runs from vertex `j+1` to vertex `j+2`.
pub fn local_edge_vertices(j: usize) -> (usize, usize) {
    ((j + 1) % 3, (j + 2) % 3)
}

fn boundary_tolerance(tri: &[Point; 3]) -> f64 {
    let diam = (0..3)
        .map(|j| {
            let (a, b) = local_edge_vertices(j);
            tri[a].dist(tri[b])
        })
        .fold(0.0, f64::max);
    let scale = tri
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(0.0, f64::max);
    SNAP_TOL * diam + 8.0 * f64::EPSILON * scale
}

/// Locate a point on the boundary of a triangle, snapping to vertices within
/// `SNAP_TOL * diam`.
pub fn locate_on_boundary(tri: &[Point; 3], p: Point) -> Result<TriangleLocation> {
    let tol = boundary_tolerance(tri);
    if let Some(i) = (0..3).find(|&i| tri[i].dist(p) <= tol) {
        return Ok(TriangleLocation::Vertex(i));
    }
    for j in 0..3 {
        let (a, b) = local_edge_vertices(j);
        let (pa, pb) = (tri[a], tri[b]);
        let edge = pb - pa;
        let len = edge.norm();
        let t = (p - pa).dot(edge) / (len * len);
        let dist = (edge.cross(p - pa) / len).abs();
        if dist <= tol && (0.0..=1.0).contains(&t) {
            return Ok(TriangleLocation::Edge(j));
        }
    }
    Err(Error::InvalidInput(format!(
        "point ({}, {}) is not on the triangle boundary",
        p.x, p.y
    )))
}

/// Split a CCW triangle along the segment `d -> e`, whose end points must lie
/// on two distinct edges. Returns `(left, right)` pieces relative to the
/// direction `d -> e`. A cut point that snaps onto a vertex is replaced by the
/// vertex itself, in which case both pieces are triangles.
pub fn clip_triangle_by_segment(
    tri: &[Point; 3],
    d: Point,
    e: Point,
) -> Result<(Polygon, Polygon)> {
    let loc_d = locate_on_boundary(tri, d)?;
    let loc_e = locate_on_boundary(tri, e)?;
    if (0..3).any(|j| loc_d.on_edge(j) && loc_e.on_edge(j)) {
        return Err(Error::DegenerateCut(format!(
            "cut points {loc_d:?} and {loc_e:?} lie on a common edge"
        )));
    }
    let snap = |loc: TriangleLocation, p: Point| match loc {
        TriangleLocation::Vertex(i) => tri[i],
        TriangleLocation::Edge(_) => p,
    };
    let (d, e) = (snap(loc_d, d), snap(loc_e, e));

    let mut left = Vec::with_capacity(4);
    let mut right = Vec::with_capacity(4);
    for i in 0..3 {
        let v = tri[i];
        let on_cut = loc_d == TriangleLocation::Vertex(i) || loc_e == TriangleLocation::Vertex(i);
        if on_cut {
            left.push(v);
            right.push(v);
        } else if orient(d, e, v) > 0.0 {
            left.push(v);
        } else {
            right.push(v);
        }
        // edge from vertex i to i+1 is local edge i+2
        let edge = (i + 2) % 3;
        for (loc, p) in [(loc_d, d), (loc_e, e)] {
            if loc == TriangleLocation::Edge(edge) {
                left.push(p);
                right.push(p);
            }
        }
    }
    Ok((Polygon::new(left)?, Polygon::new(right)?))
}

/// A Gauss rule on a reference element: the unit interval `[0, 1]` (`D = 1`)
/// or the triangle `(0,0), (1,0), (0,1)` (`D = 2`). Weights sum to the
/// reference measure and the rule is exact for polynomials of total degree
/// `degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub type SegmentRule = QuadratureRule<1>;
pub type TriangleRule = QuadratureRule<2>;

const GAUSS4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Supported degrees: 1 (centroid), 2 (3 edge-interior points), 4 (6-point
/// Strang-Fix), 6 (collapsed 4x4 Gauss-Legendre).
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    let (points, weights) = match degree {
        1 => (vec![[1.0 / 3.0, 1.0 / 3.0]], vec![0.5]),
        2 => (
            vec![
                [1.0 / 6.0, 1.0 / 6.0],
                [2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0],
            ],
            vec![1.0 / 6.0; 3],
        ),
        4 => {
            let a = 0.445_948_490_915_964_886_3;
            let b = 0.091_576_213_509_770_743_46;
            let wa = 0.5 * 0.223_381_589_678_011_465_7;
            let wb = 0.5 * 0.109_951_743_655_321_867_6;
            (
                vec![
                    [a, a],
                    [1.0 - 2.0 * a, a],
                    [a, 1.0 - 2.0 * a],
                    [b, b],
                    [1.0 - 2.0 * b, b],
                    [b, 1.0 - 2.0 * b],
                ],
                vec![wa, wa, wa, wb, wb, wb],
            )
        }
        6 => {
            let mut points = Vec::with_capacity(16);
            let mut weights = Vec::with_capacity(16);
            for (gu, wu) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS) {
                let u = 0.5 * (gu + 1.0);
                for (gv, wv) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS) {
                    let v = 0.5 * (gv + 1.0);
                    points.push([u, v * (1.0 - u)]);
                    weights.push(0.25 * wu * wv * (1.0 - u));
                }
            }
            (points, weights)
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "no triangle rule of degree {degree} (supported: 1, 2, 4, 6)"
            )))
        }
    };
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

/// Supported degrees: 1 (midpoint), 3 (2-point Gauss), 5 (3-point Gauss).
pub fn segment_rule(degree: usize) -> Result<SegmentRule> {
    let (points, weights) = match degree {
        1 => (vec![[0.5]], vec![1.0]),
        3 => {
            let s = 0.5 / 3f64.sqrt();
            (vec![[0.5 - s], [0.5 + s]], vec![0.5, 0.5])
        }
        5 => {
            let s = 0.5 * (0.6f64).sqrt();
            (
                vec![[0.5 - s], [0.5], [0.5 + s]],
                vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
            )
        }
        7 => {
            let (a, b) = (0.339_981_043_584_856_3, 0.861_136_311_594_052_6);
            let (wa, wb) = (0.652_145_154_862_546_1, 0.347_854_845_137_453_9);
            (
                vec![
                    [0.5 - 0.5 * b],
                    [0.5 - 0.5 * a],
                    [0.5 + 0.5 * a],
                    [0.5 + 0.5 * b],
                ],
                vec![0.5 * wb, 0.5 * wa, 0.5 * wa, 0.5 * wb],
            )
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "no segment rule of degree {degree} (supported: 1, 3, 5, 7)"
            )))
        }
    };
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

impl TriangleRule {
    /// Physical points and weights on `tri` (weights include the Jacobian).
    pub fn mapped<'a>(&'a self, tri: &'a [Point; 3]) -> impl Iterator<Item = (Point, f64)> + 'a {
        let jac = 2.0 * triangle_area(tri);
        let (e1, e2) = (tri[1] - tri[0], tri[2] - tri[0]);
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&[s, t], &w)| (tri[0] + e1 * s + e2 * t, w * jac))
    }
}

impl SegmentRule {
    /// Physical points and weights on the segment `a -> b`.
    pub fn mapped(&self, a: Point, b: Point) -> impl Iterator<Item = (Point, f64)> + '_ {
        let len = a.dist(b);
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&[t], &w)| (a.lerp(b, t), w * len))
    }
}

//! Local shape functions and element matrices.
//!
//! Uncut elements use the vector Crouzeix-Raviart basis. On an element cut by
//! the interface chord `DE` each basis function is made of two linear vector
//! fields, one per side, fixed by twelve conditions: the six edge averages,
//! continuity of both components at `D` and at `E`, and continuity of the
//! traction `sigma(phi) n` across `DE`. The twelve coefficients are found by
//! a dense solve in physical coordinates.

use crate::geometry::{
    fan_triangulate, local_edge_vertices, triangle_area, triangle_centroid, triangle_rule, Point,
    TriangleLocation,
};
use crate::interface::{edge_pieces, Chord, CutInfo, ElementClass, Side};
use crate::linalg::{DenseMatrix, Lu};
use crate::{Error, Result};

/// Pivot threshold of the local solve, relative to the equilibrated matrix norm.
pub const LOCAL_SINGULAR_TOL: f64 = 1e-13;

/// Lamé parameters on both sides of the interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

impl MaterialParams {
    pub fn new(mu_minus: f64, mu_plus: f64, lambda_minus: f64, lambda_plus: f64) -> Result<Self> {
        let ok_mu = |m: f64| m.is_finite() && m > 0.0;
        let ok_lambda = |l: f64| l.is_finite() && l >= 0.0;
        if !(ok_mu(mu_minus) && ok_mu(mu_plus)) {
            return Err(Error::InvalidInput(format!(
                "shear moduli must be positive, got mu- = {mu_minus}, mu+ = {mu_plus}"
            )));
        }
        if !(ok_lambda(lambda_minus) && ok_lambda(lambda_plus)) {
            return Err(Error::InvalidInput(format!(
                "lambda must be finite and non-negative, got lambda- = {lambda_minus}, lambda+ = {lambda_plus}"
            )));
        }
        Ok(MaterialParams {
            mu_minus,
            mu_plus,
            lambda_minus,
            lambda_plus,
        })
    }

    /// `lambda = ratio * mu` on both sides.
    pub fn with_lambda_ratio(mu_minus: f64, mu_plus: f64, ratio: f64) -> Result<Self> {
        Self::new(mu_minus, mu_plus, ratio * mu_minus, ratio * mu_plus)
    }

    pub fn homogeneous(mu: f64, lambda: f64) -> Result<Self> {
        Self::new(mu, mu, lambda, lambda)
    }

    /// `(mu, lambda)` from Young's modulus and Poisson ratio.
    pub fn lame(young: f64, poisson: f64) -> Result<(f64, f64)> {
        if !(young > 0.0 && poisson > -1.0 && poisson < 0.5) {
            return Err(Error::InvalidInput(format!(
                "need E > 0 and -1 < nu < 1/2, got E = {young}, nu = {poisson}"
            )));
        }
        let mu = young / (2.0 * (1.0 + poisson));
        let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        Ok((mu, lambda))
    }

    pub fn from_young_poisson(minus: (f64, f64), plus: (f64, f64)) -> Result<Self> {
        let (mu_m, l_m) = Self::lame(minus.0, minus.1)?;
        let (mu_p, l_p) = Self::lame(plus.0, plus.1)?;
        Self::new(mu_m, mu_p, l_m, l_p)
    }

    pub fn mu(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.mu_plus,
            Side::Minus => self.mu_minus,
        }
    }

    pub fn lambda(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.lambda_plus,
            Side::Minus => self.lambda_minus,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.mu_plus == self.mu_minus && self.lambda_plus == self.lambda_minus
    }

    pub fn max_mu(&self) -> f64 {
        self.mu_plus.max(self.mu_minus)
    }

    /// `lambda / mu` when it is the same on both sides.
    pub fn lambda_ratio(&self) -> Option<f64> {
        let (m, p) = (
            self.lambda_minus / self.mu_minus,
            self.lambda_plus / self.mu_plus,
        );
        ((m - p).abs() <= 1e-12 * m.abs().max(p.abs())).then_some(m)
    }
}

/// The vector field `(a1 + b1 dx + c1 dy, a2 + b2 dx + c2 dy)` in coordinates
/// relative to an element origin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearPiece {
    /// `[a1, b1, c1, a2, b2, c2]`
    pub coef: [f64; 6],
}

impl LinearPiece {
    pub fn eval(&self, dx: f64, dy: f64) -> [f64; 2] {
        let c = &self.coef;
        [c[0] + c[1] * dx + c[2] * dy, c[3] + c[4] * dx + c[5] * dy]
    }

    /// `grad[i][j] = d v_i / d x_j`
    pub fn gradient(&self) -> [[f64; 2]; 2] {
        let c = &self.coef;
        [[c[1], c[2]], [c[4], c[5]]]
    }

    pub fn divergence(&self) -> f64 {
        self.coef[1] + self.coef[5]
    }

    pub fn max_abs(&self) -> f64 {
        self.coef.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainStress {
    pub strain: [[f64; 2]; 2],
    pub stress: [[f64; 2]; 2],
    pub divergence: f64,
}

impl StrainStress {
    pub fn traction(&self, n: Point) -> [f64; 2] {
        let s = &self.stress;
        [s[0][0] * n.x + s[0][1] * n.y, s[1][0] * n.x + s[1][1] * n.y]
    }
}

pub fn strain_stress(piece: &LinearPiece, side: Side, mat: &MaterialParams) -> StrainStress {
    let g = piece.gradient();
    let shear = 0.5 * (g[0][1] + g[1][0]);
    let strain = [[g[0][0], shear], [shear, g[1][1]]];
    let div = piece.divergence();
    let (mu, lambda) = (mat.mu(side), mat.lambda(side));
    let stress = [
        [2.0 * mu * strain[0][0] + lambda * div, 2.0 * mu * shear],
        [2.0 * mu * shear, 2.0 * mu * strain[1][1] + lambda * div],
    ];
    StrainStress {
        strain,
        stress,
        divergence: div,
    }
}

fn double_dot(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// One local shape function: a single linear field, or two glued along a chord.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFunction {
    pub origin: Point,
    pub plus: LinearPiece,
    pub minus: LinearPiece,
    pub chord: Option<Chord>,
}

impl ShapeFunction {
    pub fn is_broken(&self) -> bool {
        self.chord.is_some()
    }

    pub fn piece(&self, side: Side) -> &LinearPiece {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    pub fn eval_on(&self, side: Side, p: Point) -> [f64; 2] {
        self.piece(side)
            .eval(p.x - self.origin.x, p.y - self.origin.y)
    }

    pub fn eval(&self, p: Point) -> [f64; 2] {
        let side = self.chord.map_or(Side::Plus, |c| c.side(p));
        self.eval_on(side, p)
    }
}

/// The six local shape functions of one element. Basis `i < 3` carries the
/// first component's average on local edge `i`; `i >= 3` the second
/// component's on edge `i - 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBasis {
    pub origin: Point,
    pub chord: Option<Chord>,
    pub plus: [LinearPiece; 6],
    pub minus: [LinearPiece; 6],
}

impl ElementBasis {
    pub fn function(&self, i: usize) -> ShapeFunction {
        ShapeFunction {
            origin: self.origin,
            plus: self.plus[i],
            minus: self.minus[i],
            chord: self.chord,
        }
    }

    pub fn pieces(&self, side: Side) -> &[LinearPiece; 6] {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    /// Values of all six functions on the given side at `p`.
    pub fn eval_all_on(&self, side: Side, p: Point) -> [[f64; 2]; 6] {
        let (dx, dy) = (p.x - self.origin.x, p.y - self.origin.y);
        self.pieces(side).map(|piece| piece.eval(dx, dy))
    }

    /// Evaluate a combination `sum_i coef[i] phi_i` on the given side.
    pub fn combine_on(&self, side: Side, coef: &[f64; 6], p: Point) -> [f64; 2] {
        let vals = self.eval_all_on(side, p);
        let mut out = [0.0; 2];
        for (v, c) in vals.iter().zip(coef) {
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        out
    }

    /// Side used for a point inside the element.
    pub fn side_at(&self, p: Point, fallback: Side) -> Side {
        self.chord.map_or(fallback, |c| c.side(p))
    }
}

/// Vector Crouzeix-Raviart basis. The scalar factor of edge `j` is
/// `1 - 2 lambda_j`, with `lambda_j` the barycentric coordinate of the vertex
/// opposite edge `j`.
pub fn cr_basis(tri: &[Point; 3]) -> Result<ElementBasis> {
    let area = triangle_area(tri);
    let diam2 = (0..3)
        .map(|j| {
            let (a, b) = local_edge_vertices(j);
            let d = tri[a] - tri[b];
            d.dot(d)
        })
        .fold(0.0, f64::max);
    if !(area > 1e-14 * diam2) {
        return Err(Error::InvalidInput(format!(
            "degenerate or clockwise triangle (area {area:e})"
        )));
    }
    let origin = triangle_centroid(tri);
    let mut plus = [LinearPiece::default(); 6];
    for j in 0..3 {
        let (a, b) = local_edge_vertices(j);
        // grad lambda_j = perp(p_b - p_a) / (2 area), rotated inward
        let gx = (tri[a].y - tri[b].y) / (2.0 * area);
        let gy = (tri[b].x - tri[a].x) / (2.0 * area);
        let (a0, b0, c0) = (1.0 / 3.0, -2.0 * gx, -2.0 * gy);
        plus[j].coef = [a0, b0, c0, 0.0, 0.0, 0.0];
        plus[j + 3].coef = [0.0, 0.0, 0.0, a0, b0, c0];
    }
    Ok(ElementBasis {
        origin,
        chord: None,
        plus,
        minus: plus,
    })
}

/// Column of coefficient `k` (0 = constant, 1 = x, 2 = y) of `component` on `side`.
fn column(component: usize, side: Side, k: usize) -> usize {
    component * 6 + if side == Side::Minus { 3 } else { 0 } + k
}

/// The 12x12 interface system of a cut element with its six right-hand sides.
///
/// Unknowns: `[a1+, b1+, c1+, a1-, b1-, c1-, a2+, b2+, c2+, a2-, b2-, c2-]`
/// relative to `origin`. Rows: averages of component 1 on edges 0..3,
/// averages of component 2 on edges 0..3, continuity of components 1 and 2
/// at `D`, the same at `E`, then the two traction components.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub origin: Point,
    pub matrix: DenseMatrix,
    /// Right-hand side of basis `i` is the unit vector `e_i` (rows 0..6).
    pub rhs: [[f64; 12]; 6],
}

pub fn local_system_matrix(tri: &[Point; 3], cut: &CutInfo, mat: &MaterialParams) -> LocalSystem {
    local_system_about(tri, cut, mat, triangle_centroid(tri))
}

/// As [`local_system_matrix`] with an explicit coordinate origin.
pub fn local_system_about(
    tri: &[Point; 3],
    cut: &CutInfo,
    mat: &MaterialParams,
    origin: Point,
) -> LocalSystem {
    let chord = cut.chord();
    let mut m = DenseMatrix::zeros(12, 12);
    let mono = |p: Point| [1.0, p.x - origin.x, p.y - origin.y];

    for j in 0..3 {
        let split = [(cut.d_location, cut.d), (cut.e_location, cut.e)]
            .into_iter()
            .find(|(loc, _)| *loc == TriangleLocation::Edge(j))
            .map(|(_, p)| p);
        let (a, b) = local_edge_vertices(j);
        let len = tri[a].dist(tri[b]);
        for (p, q) in edge_pieces(tri, j, split) {
            let mid = p.midpoint(q);
            let side = chord.side(mid);
            let w = p.dist(q) / len;
            let basis = mono(mid);
            for comp in 0..2 {
                for k in 0..3 {
                    m[(3 * comp + j, column(comp, side, k))] += w * basis[k];
                }
            }
        }
    }

    for (r, p) in [(6, cut.d), (8, cut.e)] {
        let basis = mono(p);
        for comp in 0..2 {
            for k in 0..3 {
                m[(r + comp, column(comp, Side::Plus, k))] = basis[k];
                m[(r + comp, column(comp, Side::Minus, k))] = -basis[k];
            }
        }
    }

    let n = cut.normal;
    for (side, sgn) in [(Side::Plus, 1.0), (Side::Minus, -1.0)] {
        let (mu, lambda) = (mat.mu(side), mat.lambda(side));
        let (b1, c1) = (column(0, side, 1), column(0, side, 2));
        let (b2, c2) = (column(1, side, 1), column(1, side, 2));
        // (sigma n)_1 = (2mu+lambda) b1 n1 + lambda c2 n1 + mu (c1 + b2) n2
        m[(10, b1)] += sgn * (2.0 * mu + lambda) * n.x;
        m[(10, c2)] += sgn * lambda * n.x;
        m[(10, c1)] += sgn * mu * n.y;
        m[(10, b2)] += sgn * mu * n.y;
        // (sigma n)_2 = mu (c1 + b2) n1 + lambda b1 n2 + (2mu+lambda) c2 n2
        m[(11, c1)] += sgn * mu * n.x;
        m[(11, b2)] += sgn * mu * n.x;
        m[(11, b1)] += sgn * lambda * n.y;
        m[(11, c2)] += sgn * (2.0 * mu + lambda) * n.y;
    }

    let mut rhs = [[0.0; 12]; 6];
    for (i, r) in rhs.iter_mut().enumerate() {
        r[i] = 1.0;
    }
    LocalSystem {
        origin,
        matrix: m,
        rhs,
    }
}

impl LocalSystem {
    /// Solve for the six basis functions with row equilibration and scaling of
    /// the gradient columns by the element size.
    pub fn solve(&self, element: usize, scale: f64) -> Result<[[f64; 12]; 6]> {
        let mut a = self.matrix.clone();
        let col_scale: [f64; 12] =
            std::array::from_fn(|c| if c % 3 == 0 { 1.0 } else { 1.0 / scale });
        for i in 0..12 {
            for (j, s) in col_scale.iter().enumerate() {
                a[(i, j)] /= s;
            }
        }
        let row_scale: [f64; 12] = std::array::from_fn(|i| {
            let r = a.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if r > 0.0 {
                1.0 / r
            } else {
                1.0
            }
        });
        for (i, s) in row_scale.iter().enumerate() {
            a.row_mut(i).iter_mut().for_each(|v| *v *= s);
        }
        let tol = LOCAL_SINGULAR_TOL * a.norm_inf();
        let lu = Lu::factor(a, tol).map_err(|e| Error::SingularLocalSystem {
            element,
            pivot: e.pivot,
        })?;
        let mut out = [[0.0; 12]; 6];
        for (i, rhs) in self.rhs.iter().enumerate() {
            let b: Vec<f64> = rhs.iter().zip(&row_scale).map(|(v, s)| v * s).collect();
            let y = lu.solve(&b);
            for j in 0..12 {
                out[i][j] = y[j] / col_scale[j];
            }
        }
        Ok(out)
    }
}

/// Broken basis of a cut element.
pub fn broken_basis(tri: &[Point; 3], cut: &CutInfo, mat: &MaterialParams) -> Result<ElementBasis> {
    let system = local_system_matrix(tri, cut, mat);
    let diam = (0..3)
        .map(|j| {
            let (a, b) = local_edge_vertices(j);
            tri[a].dist(tri[b])
        })
        .fold(0.0, f64::max);
    let coefs = system.solve(cut.element, diam)?;
    let mut plus = [LinearPiece::default(); 6];
    let mut minus = [LinearPiece::default(); 6];
    for i in 0..6 {
        let c = &coefs[i];
        plus[i].coef = [c[0], c[1], c[2], c[6], c[7], c[8]];
        minus[i].coef = [c[3], c[4], c[5], c[9], c[10], c[11]];
    }
    Ok(ElementBasis {
        origin: system.origin,
        chord: Some(cut.chord()),
        plus,
        minus,
    })
}

/// Basis of any element according to its classification.
pub fn element_basis(
    tri: &[Point; 3],
    class: &ElementClass,
    mat: &MaterialParams,
) -> Result<ElementBasis> {
    match class {
        ElementClass::NonInterface(_) => cr_basis(tri),
        ElementClass::Interface(cut) => broken_basis(tri, cut, mat),
    }
}

/// Worst violation of each group of defining conditions, measured directly
/// on the constructed functions (not through the system matrix).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConditionResiduals {
    /// `|average - delta|`
    pub averages: f64,
    /// `|phi+(P) - phi-(P)|` at `D` and `E`, relative to the function size
    pub continuity: f64,
    /// `|sigma+ n - sigma- n|` relative to the traction scale of the function
    pub traction: f64,
}

impl ConditionResiduals {
    pub fn max(&self) -> f64 {
        self.averages.max(self.continuity).max(self.traction)
    }
}

pub fn condition_residuals(
    tri: &[Point; 3],
    cut: &CutInfo,
    mat: &MaterialParams,
    basis: &ElementBasis,
) -> ConditionResiduals {
    let chord = cut.chord();
    let mut res = ConditionResiduals::default();
    for i in 0..6 {
        let f = basis.function(i);
        for j in 0..3 {
            let split = [(cut.d_location, cut.d), (cut.e_location, cut.e)]
                .into_iter()
                .find(|(loc, _)| *loc == TriangleLocation::Edge(j))
                .map(|(_, p)| p);
            let (a, b) = local_edge_vertices(j);
            let len = tri[a].dist(tri[b]);
            let mut avg = [0.0; 2];
            for (p, q) in edge_pieces(tri, j, split) {
                let mid = p.midpoint(q);
                let v = f.eval_on(chord.side(mid), mid);
                let w = p.dist(q) / len;
                avg[0] += w * v[0];
                avg[1] += w * v[1];
            }
            for (comp, value) in avg.iter().enumerate() {
                let target = if i == j + 3 * comp { 1.0 } else { 0.0 };
                res.averages = res.averages.max((value - target).abs());
            }
        }
        let size = 1.0f64.max(
            [cut.d, cut.e]
                .iter()
                .flat_map(|&p| f.eval_on(Side::Plus, p))
                .fold(0.0, |m: f64, v| m.max(v.abs())),
        );
        for p in [cut.d, cut.e] {
            let (vp, vm) = (f.eval_on(Side::Plus, p), f.eval_on(Side::Minus, p));
            let jump = (vp[0] - vm[0]).abs().max((vp[1] - vm[1]).abs());
            res.continuity = res.continuity.max(jump / size);
        }
        let sp = strain_stress(&f.plus, Side::Plus, mat);
        let sm = strain_stress(&f.minus, Side::Minus, mat);
        let (tp, tm) = (sp.traction(cut.normal), sm.traction(cut.normal));
        let stress_scale = |s: &StrainStress| {
            s.stress
                .iter()
                .flatten()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let scale = stress_scale(&sp)
            .max(stress_scale(&sm))
            .max(f64::MIN_POSITIVE);
        let jump = (tp[0] - tm[0]).abs().max((tp[1] - tm[1]).abs());
        res.traction = res.traction.max(jump / scale);
    }
    res
}

/// The polygons making up an element, each with its material side.
pub fn element_pieces(tri: &[Point; 3], class: &ElementClass) -> Vec<(Side, Vec<[Point; 3]>)> {
    match class {
        ElementClass::NonInterface(side) => vec![(*side, vec![*tri])],
        ElementClass::Interface(cut) => vec![
            (Side::Plus, fan_triangulate(&cut.plus)),
            (Side::Minus, fan_triangulate(&cut.minus)),
        ],
    }
}

fn piece_areas(tri: &[Point; 3], class: &ElementClass) -> Vec<(Side, f64)> {
    match class {
        ElementClass::NonInterface(side) => vec![(*side, triangle_area(tri))],
        ElementClass::Interface(cut) => vec![
            (Side::Plus, cut.plus.area()),
            (Side::Minus, cut.minus.area()),
        ],
    }
}

/// Element stiffness `sum_pieces |piece| (2 mu eps_i : eps_j + lambda div_i div_j)`,
/// exact since strains are constant on each piece.
pub fn local_stiffness(
    tri: &[Point; 3],
    class: &ElementClass,
    basis: &ElementBasis,
    mat: &MaterialParams,
) -> [[f64; 6]; 6] {
    let mut k = [[0.0; 6]; 6];
    for (side, area) in piece_areas(tri, class) {
        let (mu, lambda) = (mat.mu(side), mat.lambda(side));
        let ss = basis.pieces(side).map(|p| strain_stress(&p, side, mat));
        for i in 0..6 {
            for j in i..6 {
                let v = area
                    * (2.0 * mu * double_dot(&ss[i].strain, &ss[j].strain)
                        + lambda * ss[i].divergence * ss[j].divergence);
                k[i][j] += v;
                if i != j {
                    k[j][i] += v;
                }
            }
        }
    }
    k
}

/// Element load `int f . phi_i` with the degree-2 rule on every sub-triangle.
pub fn local_load(
    tri: &[Point; 3],
    class: &ElementClass,
    basis: &ElementBasis,
    f: &(dyn Fn(Point) -> [f64; 2] + Sync),
) -> [f64; 6] {
    let rule = triangle_rule(2).expect("degree-2 rule");
    let mut out = [0.0; 6];
    for (side, tris) in element_pieces(tri, class) {
        for sub in &tris {
            for (q, w) in rule.mapped(sub) {
                let fq = f(q);
                let vals = basis.eval_all_on(side, q);
                for (o, v) in out.iter_mut().zip(&vals) {
                    *o += w * (fq[0] * v[0] + fq[1] * v[1]);
                }
            }
        }
    }
    out
}

/// The interface system in the coordinates of the unit right triangle
/// `(0,0), (1,0), (0,1)` cut at `D = (x, 0)`, `E = (0, y)`, with the corner at
/// the origin on the `-` side. Rows: for each component, the averages over
/// the hypotenuse, the vertical and the horizontal leg, continuity at `D` and
/// `E` written as `phi- - phi+`, then that component's traction jump.
/// Columns as in [`LocalSystem`], about the origin.
pub fn reference_cut_matrix(x: f64, y: f64, mat: &MaterialParams) -> DenseMatrix {
    let a = [
        [1.0, 0.5, 0.5, 0.0, 0.0, 0.0],
        [1.0 - y, 0.0, 0.5 * (1.0 - y * y), y, 0.0, 0.5 * y * y],
        [1.0 - x, 0.5 * (1.0 - x * x), 0.0, x, 0.5 * x * x, 0.0],
        [-1.0, -x, 0.0, 1.0, x, 0.0],
        [-1.0, 0.0, -y, 1.0, 0.0, y],
    ];
    let r = x.hypot(y);
    let (n1, n2) = (y / r, x / r);
    let (mp, mm, lp, lm) = (mat.mu_plus, mat.mu_minus, mat.lambda_plus, mat.lambda_minus);
    let d1 = [
        0.0,
        (2.0 * mp + lp) * n1,
        mp * n2,
        0.0,
        -(2.0 * mm + lm) * n1,
        -mm * n2,
    ];
    let d2 = [0.0, mp * n2, lp * n1, 0.0, -mm * n2, -lm * n1];
    let e1 = [0.0, lp * n2, mp * n1, 0.0, -lm * n2, -mm * n1];
    let e2 = [
        0.0,
        mp * n1,
        (2.0 * mp + lp) * n2,
        0.0,
        -mm * n1,
        -(2.0 * mm + lm) * n2,
    ];
    let mut m = DenseMatrix::zeros(12, 12);
    for (i, row) in a.iter().enumerate() {
        for k in 0..6 {
            m[(i, k)] = row[k];
            m[(6 + i, 6 + k)] = row[k];
        }
    }
    for k in 0..6 {
        m[(5, k)] = d1[k];
        m[(5, 6 + k)] = d2[k];
        m[(11, k)] = e1[k];
        m[(11, 6 + k)] = e2[k];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::CutInfo;
    use approx::assert_relative_eq;

    const UNIT: [Point; 3] = [
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(0.0, 1.0),
    ];

    fn reference_cut(x: f64, y: f64) -> CutInfo {
        CutInfo::new(0, &UNIT, Point::new(x, 0.0), Point::new(0.0, y), UNIT[1]).unwrap()
    }

    #[test]
    fn lame_from_young_poisson() {
        let (mu, lambda) = MaterialParams::lame(2.5, 0.25).unwrap();
        assert_relative_eq!(mu, 1.0, max_relative = 1e-15);
        assert_relative_eq!(lambda, 1.0, max_relative = 1e-15);
        assert!(MaterialParams::lame(1.0, 0.5).is_err());
        assert!(MaterialParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(MaterialParams::new(1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn strain_stress_examples() {
        let mat = MaterialParams::homogeneous(1.0, 0.0).unwrap();
        let v = LinearPiece {
            coef: [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        };
        let s = strain_stress(&v, Side::Plus, &mat);
        assert_eq!(s.strain, [[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(s.stress, [[2.0, 0.0], [0.0, 0.0]]);
        assert_eq!(s.divergence, 1.0);

        let v = LinearPiece {
            coef: [0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        };
        let s = strain_stress(&v, Side::Plus, &mat);
        assert_eq!(s.strain, [[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(s.divergence, 0.0);

        let mat = MaterialParams::homogeneous(1.0, 5.0).unwrap();
        let v = LinearPiece {
            coef: [0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        };
        let s = strain_stress(&v, Side::Minus, &mat);
        assert_eq!(s.stress, [[12.0, 0.0], [0.0, 12.0]]);
    }

    #[test]
    fn cr_basis_duality_on_reference_triangle() {
        let b = cr_basis(&UNIT).unwrap();
        for i in 0..6 {
            let f = b.function(i);
            for j in 0..3 {
                let (a, c) = local_edge_vertices(j);
                let avg = f.eval(UNIT[a].midpoint(UNIT[c]));
                let comp = i / 3;
                let expect = if i % 3 == j { 1.0 } else { 0.0 };
                assert_relative_eq!(avg[comp], expect, epsilon = 1e-15);
                assert_eq!(avg[1 - comp], 0.0);
            }
        }
        // edge e3 (index 2) is opposite (0,1)
        assert_relative_eq!(b.function(2).eval(UNIT[2])[0], -1.0, epsilon = 1e-15);
        assert!(cr_basis(&[UNIT[0], UNIT[2], UNIT[1]]).is_err());
        assert!(cr_basis(&[UNIT[0], UNIT[1], Point::new(2.0, 0.0)]).is_err());
    }

    #[test]
    fn equal_materials_reproduce_cr_basis() {
        let mat = MaterialParams::homogeneous(3.0, 7.0).unwrap();
        let cr = cr_basis(&UNIT).unwrap();
        for (x, y) in [(0.5, 0.5), (0.1, 0.9), (0.8, 0.05)] {
            let cut = reference_cut(x, y);
            let b = broken_basis(&UNIT, &cut, &mat).unwrap();
            for i in 0..6 {
                for k in 0..6 {
                    assert!((b.plus[i].coef[k] - cr.plus[i].coef[k]).abs() < 1e-12);
                    assert!((b.minus[i].coef[k] - cr.plus[i].coef[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn reference_cut_conditions_hold() {
        let mat = MaterialParams::with_lambda_ratio(1.0, 100.0, 5.0).unwrap();
        let cut = reference_cut(0.5, 0.5);
        let b = broken_basis(&UNIT, &cut, &mat).unwrap();
        let res = condition_residuals(&UNIT, &cut, &mat, &b);
        assert!(res.max() <= 1e-10, "{res:?}");
        // independent dense solve of the same system
        let sys = local_system_matrix(&UNIT, &cut, &mat);
        let m = nalgebra::DMatrix::from_fn(12, 12, |i, j| sys.matrix[(i, j)]);
        let lu = m.lu();
        for i in 0..6 {
            let rhs = nalgebra::DVector::from_column_slice(&sys.rhs[i]);
            let x = lu.solve(&rhs).unwrap();
            for k in 0..3 {
                assert_relative_eq!(
                    x[k],
                    b.plus[i].coef[k],
                    epsilon = 1e-10,
                    max_relative = 1e-10
                );
                assert_relative_eq!(
                    x[3 + k],
                    b.minus[i].coef[k],
                    epsilon = 1e-10,
                    max_relative = 1e-10
                );
                assert_relative_eq!(
                    x[6 + k],
                    b.plus[i].coef[3 + k],
                    epsilon = 1e-10,
                    max_relative = 1e-10
                );
                assert_relative_eq!(
                    x[9 + k],
                    b.minus[i].coef[3 + k],
                    epsilon = 1e-10,
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn production_system_matches_reference_matrix_up_to_row_order() {
        let mat = MaterialParams::new(1.0, 10.0, 5.0, 50.0).unwrap();
        for (x, y) in [(0.5, 0.5), (0.3, 0.8), (0.9, 0.15)] {
            let cut = reference_cut(x, y);
            let sys = local_system_about(&UNIT, &cut, &mat, Point::new(0.0, 0.0));
            let ours = Lu::factor(sys.matrix, 0.0).unwrap().determinant();
            let reference = Lu::factor(reference_cut_matrix(x, y, &mat), 0.0)
                .unwrap()
                .determinant();
            assert_relative_eq!(ours.abs(), reference.abs(), max_relative = 1e-12);
        }
    }

    #[test]
    fn reference_determinant_closed_form() {
        // 16 (x^2 + y^2) det = y^4 A(2A+B) + x^4 A(2A+B) + x^2y^2((2A+B)^2 + A^2) - (xy)^2 (A+B)^2
        // with A = [mu] xy + mu-, B = [lambda] xy + lambda-
        let mat = MaterialParams::new(1.0, 10.0, 5.0, 50.0).unwrap();
        for (x, y) in [(0.5, 0.5), (0.3, 0.8), (0.02, 0.97)] {
            let a = (mat.mu_plus - mat.mu_minus) * x * y + mat.mu_minus;
            let b = (mat.lambda_plus - mat.lambda_minus) * x * y + mat.lambda_minus;
            let closed = y.powi(4) * a * (2.0 * a + b)
                + x.powi(4) * a * (2.0 * a + b)
                + x * x * y * y * ((2.0 * a + b).powi(2) + a * a)
                - (x * y).powi(2) * (a + b).powi(2);
            let det = Lu::factor(reference_cut_matrix(x, y, &mat), 0.0)
                .unwrap()
                .determinant();
            assert_relative_eq!(16.0 * (x * x + y * y) * det, closed, max_relative = 1e-10);
            // which collapses to A (2A + B) (x^2 + y^2) / 16 > 0
            let short = a * (2.0 * a + b) * (x * x + y * y) / 16.0;
            assert_relative_eq!(det, short, max_relative = 1e-10);
        }
    }

    #[test]
    fn broken_basis_through_vertex() {
        let mat = MaterialParams::with_lambda_ratio(1.0, 10.0, 5.0).unwrap();
        let cut = CutInfo::new(0, &UNIT, UNIT[1], Point::new(0.0, 0.5), UNIT[2]).unwrap();
        let b = broken_basis(&UNIT, &cut, &mat).unwrap();
        assert!(condition_residuals(&UNIT, &cut, &mat, &b).max() <= 1e-10);
    }

    #[test]
    fn uncut_stiffness_matches_hand_assembled_matrix() {
        // mu = 1, lambda = 0 on the unit right triangle. CR gradients:
        // grad psi_0 = (2, 2), grad psi_1 = (-2, 0), grad psi_2 = (0, -2).
        // K = |T| * 2 eps_i : eps_j; for (psi, 0) and (psi', 0):
        //   2 (gx gx' + gy gy' / 2); for (psi, 0) and (0, psi'): gy gx'.
        let g = [[2.0, 2.0], [-2.0, 0.0], [0.0, -2.0]];
        let mut oracle = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = (g[i], g[j]);
                oracle[i][j] = 0.5 * 2.0 * (a[0] * b[0] + 0.5 * a[1] * b[1]);
                oracle[i + 3][j + 3] = 0.5 * 2.0 * (a[1] * b[1] + 0.5 * a[0] * b[0]);
                oracle[i][j + 3] = 0.5 * a[1] * b[0];
                oracle[j + 3][i] = oracle[i][j + 3];
            }
        }
        let mat = MaterialParams::homogeneous(1.0, 0.0).unwrap();
        let class = ElementClass::NonInterface(Side::Plus);
        let basis = cr_basis(&UNIT).unwrap();
        let k = local_stiffness(&UNIT, &class, &basis, &mat);
        for i in 0..6 {
            for j in 0..6 {
                assert_relative_eq!(k[i][j], oracle[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn stiffness_is_symmetric_with_translations_in_kernel() {
        let mat = MaterialParams::new(1.0, 100.0, 5.0, 500.0).unwrap();
        for (x, y) in [(0.5, 0.5), (0.2, 0.7), (0.95, 0.05)] {
            let cut = reference_cut(x, y);
            let class = ElementClass::Interface(Box::new(cut.clone()));
            let b = broken_basis(&UNIT, &cut, &mat).unwrap();
            let k = local_stiffness(&UNIT, &class, &b, &mat);
            let norm = k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..6 {
                for j in 0..6 {
                    assert!((k[i][j] - k[j][i]).abs() <= 1e-13 * norm);
                }
                let tx: f64 = (0..3).map(|j| k[i][j]).sum();
                let ty: f64 = (3..6).map(|j| k[i][j]).sum();
                assert!(tx.abs() <= 1e-12 * norm && ty.abs() <= 1e-12 * norm);
            }
        }
    }

    #[test]
    fn load_vector_examples() {
        let tri = [
            Point::new(0.25, 0.5),
            Point::new(0.5, 0.5),
            Point::new(0.5, 0.75),
        ];
        let class = ElementClass::NonInterface(Side::Minus);
        let basis = cr_basis(&tri).unwrap();
        let zero = local_load(&tri, &class, &basis, &|_| [0.0, 0.0]);
        assert_eq!(zero, [0.0; 6]);
        let unit = local_load(&tri, &class, &basis, &|_| [1.0, 0.0]);
        let area = triangle_area(&tri);
        assert_relative_eq!(unit[0] + unit[1] + unit[2], area, max_relative = 1e-14);
        assert!(unit[3..].iter().all(|v| v.abs() < 1e-16));
        // f = (x, y): int psi_j x over the triangle, oracle by the 6-point rule
        let lin = local_load(&tri, &class, &basis, &|p| [p.x, p.y]);
        let rule = triangle_rule(4).unwrap();
        for i in 0..6 {
            let f = basis.function(i);
            let oracle: f64 = rule
                .mapped(&tri)
                .map(|(q, w)| {
                    let v = f.eval(q);
                    w * (q.x * v[0] + q.y * v[1])
                })
                .sum();
            assert_relative_eq!(lin[i], oracle, max_relative = 1e-13);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(500))]
            #[test]
            fn broken_basis_satisfies_its_conditions(
                x in 0.01..0.99f64, y in 0.01..0.99f64,
                mu_m in 0.1..1e3f64, mu_p in 0.1..1e3f64,
                l_m in 0.0..1e6f64, l_p in 0.0..1e6f64,
            ) {
                let mat = MaterialParams::new(mu_m, mu_p, l_m, l_p).unwrap();
                let cut = reference_cut(x, y);
                let b = broken_basis(&UNIT, &cut, &mat).unwrap();
                let res = condition_residuals(&UNIT, &cut, &mat, &b);
                prop_assert!(res.max() <= 1e-9, "{:?}", res);
            }
        }
    }
}

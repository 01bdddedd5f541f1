//! Interpolation, error norms, convergence tables and CSV/VTK output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::elements::{element_pieces, ElementBasis};
use crate::geometry::{segment_rule, triangle_rule, Point, SegmentRule};
use crate::interface::{Classification, CutInfo, ElementClass, Side};
use crate::manufactured::ManufacturedSolution;
use crate::mesh::{build_dof_map, Mesh};
use crate::{Error, Result};

/// `I_h u`: averages of `u` over every edge, three-point Gauss on each piece
/// of an edge split at its interface crossing.
pub fn interpolate(
    mesh: &Mesh,
    classes: &Classification,
    u: &(dyn Fn(Point) -> [f64; 2] + Sync),
) -> Vec<f64> {
    let dofs = build_dof_map(mesh);
    let rule = segment_rule(5).expect("three-point rule");
    let averages: Vec<[f64; 2]> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            let (p, q) = mesh.edge_points(e);
            let len = p.dist(q);
            let pieces = match classes.edge_cuts[e].interior_point() {
                Some(c) => vec![(p, c), (c, q)],
                None => vec![(p, q)],
            };
            let mut avg = [0.0; 2];
            for (a, b) in pieces {
                for (x, w) in rule.mapped(a, b) {
                    let v = u(x);
                    avg[0] += w * v[0] / len;
                    avg[1] += w * v[1] / len;
                }
            }
            avg
        })
        .collect();
    let mut out = vec![0.0; dofs.total_dofs()];
    for (e, avg) in averages.iter().enumerate() {
        out[dofs.index(e, 0)] = avg[0];
        out[dofs.index(e, 1)] = avg[1];
    }
    out
}

fn element_coefficients(mesh: &Mesh, uh: &[f64], t: usize) -> [f64; 6] {
    build_dof_map(mesh).element_dofs(mesh, t).map(|d| uh[d])
}

fn fallback_side(class: &ElementClass) -> Side {
    match class {
        ElementClass::NonInterface(s) => *s,
        ElementClass::Interface(_) => Side::Plus,
    }
}

/// Value and gradient of the discrete field on one side of an element.
fn discrete_value(
    basis: &ElementBasis,
    coef: &[f64; 6],
    side: Side,
    p: Point,
) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut grad = [[0.0; 2]; 2];
    for (piece, c) in basis.pieces(side).iter().zip(coef) {
        let g = piece.gradient();
        for i in 0..2 {
            for j in 0..2 {
                grad[i][j] += c * g[i][j];
            }
        }
    }
    (basis.combine_on(side, coef, p), grad)
}

/// Errors at one refinement level. `h1` is the full broken norm
/// `sqrt(l2^2 + h1_semi^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub inv_h: u64,
    pub l2: f64,
    pub h1: f64,
    pub h1_semi: f64,
    pub div: f64,
    /// `sqrt(a_h(e, e))` of the DOF-space error `I_h u - u_h`, when computed.
    pub energy: Option<f64>,
}

/// Squared pointwise errors `[|u - v|^2, |grad u - grad v|^2, (div u - div v)^2]`
/// with the exact branch of `side`.
fn error_densities(
    exact: &ManufacturedSolution,
    side: Side,
    q: Point,
    v: [f64; 2],
    g: [[f64; 2]; 2],
) -> [f64; 3] {
    let u = exact.u_on(side, q);
    let gu = exact.grad_on(side, q);
    let mut grad = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            grad += (gu[i][j] - g[i][j]).powi(2);
        }
    }
    [
        (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2),
        grad,
        (gu[0][0] + gu[1][1] - g[0][0] - g[1][1]).powi(2),
    ]
}

/// Root of `a2 t^2 + a1 t + a0` closest to zero.
fn nearest_root(a2: f64, a1: f64, a0: f64) -> Option<f64> {
    if a2 == 0.0 {
        return (a1 != 0.0).then(|| -a0 / a1);
    }
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
    if q == 0.0 {
        return Some(0.0);
    }
    let (r1, r2) = (q / a2, a0 / q);
    Some(if r1.abs() < r2.abs() { r1 } else { r2 })
}

/// Between the chord and the curved interface the exact solution follows the
/// other branch. Integrates (true branch) - (chord branch) over that region,
/// walking along the chord and out along its normal to the curve.
fn sliver_correction(
    cut: &CutInfo,
    basis: &ElementBasis,
    coef: &[f64; 6],
    exact: &ManufacturedSolution,
    rule: &SegmentRule,
) -> [f64; 3] {
    let (d, e, n) = (cut.d, cut.e, cut.normal);
    let len = d.dist(e);
    let mut s = [0.0; 3];
    for (ps, ws) in rule.points.iter().zip(&rule.weights) {
        let c = d.lerp(e, ps[0]);
        let (a2, a1, a0) = exact.level_set.along(c, c + n);
        let Some(t_star) = nearest_root(a2, a1, a0) else {
            continue;
        };
        if t_star == 0.0 || !(t_star.abs() < len) {
            continue;
        }
        let (chord_side, true_side) = if t_star > 0.0 {
            (Side::Plus, Side::Minus)
        } else {
            (Side::Minus, Side::Plus)
        };
        for (pt, wt) in rule.points.iter().zip(&rule.weights) {
            let q = c + n * (t_star * pt[0]);
            let w = len * ws * t_star.abs() * wt;
            let (v, g) = discrete_value(basis, coef, chord_side, q);
            let on_true = error_densities(exact, true_side, q, v, g);
            let on_chord = error_densities(exact, chord_side, q, v, g);
            for k in 0..3 {
                s[k] += w * (on_true[k] - on_chord[k]);
            }
        }
    }
    s
}

/// Errors of `uh` against `exact`. Element pieces are integrated with the
/// triangle rule of the given degree; the exact branch follows the true level
/// set, the discrete branch the chord, and the region between the two is
/// integrated separately.
pub fn error_norms_with_degree(
    mesh: &Mesh,
    classes: &Classification,
    bases: &[ElementBasis],
    uh: &[f64],
    exact: &ManufacturedSolution,
    degree: usize,
) -> Result<ErrorReport> {
    let rule = triangle_rule(degree)?;
    let line = segment_rule(if degree + 1 <= 5 { 5 } else { 7 })?;
    let sums: Vec<[f64; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.triangle_points(t);
            let class = &classes.classes[t];
            let basis = &bases[t];
            let coef = element_coefficients(mesh, uh, t);
            let mut s = [0.0; 3];
            for (side, subs) in element_pieces(&tri, class) {
                for sub in &subs {
                    for (q, w) in rule.mapped(sub) {
                        let (v, g) = discrete_value(basis, &coef, side, q);
                        let exact_side = match class {
                            ElementClass::Interface(_) => side,
                            ElementClass::NonInterface(_) => exact.side(q),
                        };
                        let r = error_densities(exact, exact_side, q, v, g);
                        for k in 0..3 {
                            s[k] += w * r[k];
                        }
                    }
                }
            }
            if let ElementClass::Interface(cut) = class {
                let r = sliver_correction(cut, basis, &coef, exact, &line);
                for k in 0..3 {
                    s[k] += r[k];
                }
            }
            s
        })
        .collect();
    let mut total = [0.0; 3];
    for s in &sums {
        for k in 0..3 {
            total[k] += s[k];
        }
    }
    let total = total.map(|v| v.max(0.0));
    Ok(ErrorReport {
        inv_h: (1.0 / mesh.h).round() as u64,
        l2: total[0].sqrt(),
        h1: (total[0] + total[1]).sqrt(),
        h1_semi: total[1].sqrt(),
        div: total[2].sqrt(),
        energy: None,
    })
}

/// [`error_norms_with_degree`] with the degree-4 rule.
pub fn error_norms(
    mesh: &Mesh,
    classes: &Classification,
    bases: &[ElementBasis],
    uh: &[f64],
    exact: &ManufacturedSolution,
) -> Result<ErrorReport> {
    error_norms_with_degree(mesh, classes, bases, uh, exact, 4)
}

/// Side of a point inside element `t`, by chord for cut elements.
pub fn discrete_side(classes: &Classification, bases: &[ElementBasis], t: usize, p: Point) -> Side {
    bases[t].side_at(p, fallback_side(&classes.classes[t]))
}

/// Observed order `log(e_coarse / e_fine) / log(h_coarse / h_fine)`; `None`
/// when undefined.
pub fn observed_order(
    e_coarse: f64,
    e_fine: f64,
    inv_h_coarse: f64,
    inv_h_fine: f64,
) -> Option<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0 && e_coarse.is_finite() && e_fine.is_finite()) {
        return None;
    }
    let ratio = inv_h_fine / inv_h_coarse;
    if !(ratio > 0.0) || ratio == 1.0 {
        return None;
    }
    Some((e_coarse / e_fine).ln() / ratio.ln())
}

/// Material and penalty values recorded next to every table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMeta {
    pub tau: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub lambda_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub inv_h: u64,
    pub l2: f64,
    pub l2_order: Option<f64>,
    pub h1: f64,
    pub h1_order: Option<f64>,
    pub div: f64,
    pub div_order: Option<f64>,
    pub h1_semi: f64,
    pub h1_semi_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub meta: RunMeta,
    pub rows: Vec<ConvergenceRow>,
}

pub fn convergence_table(reports: &[ErrorReport], meta: RunMeta) -> ConvergenceTable {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(reports.len());
    for (k, r) in reports.iter().enumerate() {
        let order = |f: fn(&ErrorReport) -> f64| {
            k.checked_sub(1).and_then(|j| {
                let c = &reports[j];
                observed_order(f(c), f(r), c.inv_h as f64, r.inv_h as f64)
            })
        };
        rows.push(ConvergenceRow {
            inv_h: r.inv_h,
            l2: r.l2,
            l2_order: order(|e| e.l2),
            h1: r.h1,
            h1_order: order(|e| e.h1),
            div: r.div,
            div_order: order(|e| e.div),
            h1_semi: r.h1_semi,
            h1_semi_order: order(|e| e.h1_semi),
        });
    }
    ConvergenceTable { meta, rows }
}

impl ConvergenceTable {
    /// Mean of the defined orders of one column.
    pub fn mean_order(&self, f: fn(&ConvergenceRow) -> Option<f64>) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Text table with one `error order` pair per norm.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>6} | {:>10} {:>6} | {:>10} {:>6} | {:>10} {:>6}\n",
            "1/h", "L2", "order", "H1", "order", "div", "order"
        );
        let o = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.3}"));
        for r in &self.rows {
            s += &format!(
                "{:>6} | {:>10.3e} {:>6} | {:>10.3e} {:>6} | {:>10.3e} {:>6}\n",
                r.inv_h,
                r.l2,
                o(r.l2_order),
                r.h1,
                o(r.h1_order),
                r.div,
                o(r.div_order)
            );
        }
        s
    }
}

pub const CONVERGENCE_HEADER: [&str; 13] = [
    "inv_h",
    "l2",
    "l2_order",
    "h1",
    "h1_order",
    "div",
    "div_order",
    "tau",
    "mu_minus",
    "mu_plus",
    "lambda_ratio",
    "h1_semi",
    "h1_semi_order",
];

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Write the table; floats use the shortest representation that reads back
/// to the same value.
pub fn write_convergence_csv(table: &ConvergenceTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(CONVERGENCE_HEADER).map_err(csv_err(path))?;
    let m = &table.meta;
    for r in &table.rows {
        w.write_record([
            r.inv_h.to_string(),
            r.l2.to_string(),
            opt(r.l2_order),
            r.h1.to_string(),
            opt(r.h1_order),
            r.div.to_string(),
            opt(r.div_order),
            m.tau.to_string(),
            m.mu_minus.to_string(),
            m.mu_plus.to_string(),
            opt(m.lambda_ratio),
            r.h1_semi.to_string(),
            opt(r.h1_semi_order),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_convergence_csv(path: &Path) -> Result<ConvergenceTable> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(CONVERGENCE_HEADER) {
        return Err(Error::InvalidInput(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    let bad = |field: &str, v: &str| {
        Error::InvalidInput(format!(
            "{}: bad value `{v}` in column {field}",
            path.display()
        ))
    };
    let mut rows = Vec::new();
    let mut meta = None;
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(CONVERGENCE_HEADER[i], &rec[i]))
        };
        let maybe = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        meta = Some(RunMeta {
            tau: num(7)?,
            mu_minus: num(8)?,
            mu_plus: num(9)?,
            lambda_ratio: maybe(10)?,
        });
        rows.push(ConvergenceRow {
            inv_h: rec[0].parse().map_err(|_| bad("inv_h", &rec[0]))?,
            l2: num(1)?,
            l2_order: maybe(2)?,
            h1: num(3)?,
            h1_order: maybe(4)?,
            div: num(5)?,
            div_order: maybe(6)?,
            h1_semi: num(11)?,
            h1_semi_order: maybe(12)?,
        });
    }
    let meta = meta.ok_or_else(|| Error::InvalidInput(format!("{}: no rows", path.display())))?;
    Ok(ConvergenceTable { meta, rows })
}

/// One solve of a problem without an exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveRow {
    pub inv_h: u64,
    pub dofs: usize,
    pub iterations: usize,
    pub residual: f64,
}

pub const SOLVE_HEADER: [&str; 8] = [
    "inv_h",
    "dofs",
    "iterations",
    "residual",
    "tau",
    "mu_minus",
    "mu_plus",
    "lambda_ratio",
];

pub fn write_solve_csv(rows: &[SolveRow], meta: &RunMeta, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SOLVE_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.inv_h.to_string(),
            r.dofs.to_string(),
            r.iterations.to_string(),
            r.residual.to_string(),
            meta.tau.to_string(),
            meta.mu_minus.to_string(),
            meta.mu_plus.to_string(),
            opt(meta.lambda_ratio),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Render triangles of the discrete field: each cut element contributes its
/// sub-triangles, each with its own three points.
pub fn render_triangles(
    mesh: &Mesh,
    classes: &Classification,
    bases: &[ElementBasis],
    uh: &[f64],
) -> Vec<([Point; 3], [[f64; 2]; 3], Side)> {
    let mut out = Vec::new();
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle_points(t);
        let coef = element_coefficients(mesh, uh, t);
        for (side, subs) in element_pieces(&tri, &classes.classes[t]) {
            for sub in subs {
                let vals = sub.map(|p| bases[t].combine_on(side, &coef, p));
                out.push((sub, vals, side));
            }
        }
    }
    out
}

/// Legacy ASCII VTK unstructured grid with point data `displacement` and
/// cell data `side` (+1 / -1).
pub fn write_vtk(
    mesh: &Mesh,
    classes: &Classification,
    bases: &[ElementBasis],
    uh: &[f64],
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_vtk_to(&mut w, mesh, classes, bases, uh)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_vtk_to(
    w: &mut impl Write,
    mesh: &Mesh,
    classes: &Classification,
    bases: &[ElementBasis],
    uh: &[f64],
) -> std::io::Result<()> {
    let tris = render_triangles(mesh, classes, bases, uh);
    let n = tris.len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "interface elasticity displacement")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * n)?;
    for (pts, _, _) in &tris {
        for p in pts {
            writeln!(w, "{} {} 0", p.x, p.y)?;
        }
    }
    writeln!(w, "CELLS {} {}", n, 4 * n)?;
    for i in 0..n {
        writeln!(w, "3 {} {} {}", 3 * i, 3 * i + 1, 3 * i + 2)?;
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "5")?;
    }
    writeln!(w, "CELL_DATA {n}")?;
    writeln!(w, "SCALARS side int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for (_, _, side) in &tris {
        writeln!(w, "{}", if *side == Side::Plus { 1 } else { -1 })?;
    }
    writeln!(w, "POINT_DATA {}", 3 * n)?;
    writeln!(w, "VECTORS displacement double")?;
    for (_, vals, _) in &tris {
        for v in vals {
            writeln!(w, "{} {} 0", v[0], v[1])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::element_bases;
    use crate::elements::MaterialParams;
    use crate::interface::{classify_mesh, LevelSet};
    use crate::mesh::build_uniform_mesh;

    #[test]
    fn orders() {
        assert_eq!(observed_order(4.0, 1.0, 8.0, 16.0), Some(2.0));
        let o = observed_order(1.887e-3, 5.354e-4, 8.0, 16.0).unwrap();
        assert!((o - 1.817).abs() < 5e-4, "{o}");
        let o = observed_order(1.628, 9.065e-1, 8.0, 16.0).unwrap();
        assert!((o - 0.845).abs() < 1e-3, "{o}");
        assert_eq!(observed_order(0.0, 1.0, 8.0, 16.0), None);
    }

    #[test]
    fn interpolation_reproduces_linear_fields() {
        let mesh = build_uniform_mesh(-1.0, 1.0, -1.0, 1.0, 2).unwrap();
        let ls = LevelSet::Circle { r0: 0.36 };
        let cls = classify_mesh(&ls, &mesh).unwrap();
        let mat = MaterialParams::homogeneous(1.0, 5.0).unwrap();
        let bases = element_bases(&mesh, &cls, &mat).unwrap();
        let lin = |p: Point| [1.0 + 2.0 * p.x - p.y, -0.5 + 0.25 * p.x + 3.0 * p.y];
        let uh = interpolate(&mesh, &cls, &lin);
        for t in 0..mesh.num_triangles() {
            let coef = element_coefficients(&mesh, &uh, t);
            let tri = mesh.triangle_points(t);
            for p in tri {
                let side = discrete_side(&cls, &bases, t, p);
                let v = bases[t].combine_on(side, &coef, p);
                let e = lin(p);
                assert!((v[0] - e[0]).abs() < 1e-12 && (v[1] - e[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_csv_round_trip_and_blank_orders() {
        let reports = [
            ErrorReport {
                inv_h: 8,
                l2: 1.887e-3,
                h1: 4.098e-2,
                h1_semi: 4.09e-2,
                div: 4.694e-2,
                energy: None,
            },
            ErrorReport {
                inv_h: 16,
                l2: 5.354e-4,
                h1: 1.957e-2,
                h1_semi: 1.95e-2,
                div: 2.311e-2,
                energy: None,
            },
            ErrorReport {
                inv_h: 32,
                l2: 0.0,
                h1: 9.547e-3,
                h1_semi: 9.5e-3,
                div: 1.0 / 3.0,
                energy: None,
            },
        ];
        let meta = RunMeta {
            tau: 1000.0,
            mu_minus: 1.0,
            mu_plus: 100.0,
            lambda_ratio: Some(5.0),
        };
        let table = convergence_table(&reports, meta);
        assert!(table.rows[0].l2_order.is_none());
        assert!(table.rows[2].l2_order.is_none());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_convergence_csv(&table, &path).unwrap();
        assert_eq!(read_convergence_csv(&path).unwrap(), table);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "inv_h,l2,l2_order,h1,h1_order,div,div_order,tau,mu_minus,mu_plus,lambda_ratio"
        ));
        assert!(text.lines().nth(1).unwrap().starts_with("8,0.001887,,"));
    }

    #[test]
    fn vtk_duplicates_points_per_render_triangle() {
        let mesh = build_uniform_mesh(-1.0, 1.0, -1.0, 1.0, 2).unwrap();
        let cls = classify_mesh(&LevelSet::Circle { r0: 0.36 }, &mesh).unwrap();
        let mat = MaterialParams::with_lambda_ratio(1.0, 100.0, 5.0).unwrap();
        let bases = element_bases(&mesh, &cls, &mat).unwrap();
        let uh = vec![0.5; 2 * mesh.num_edges()];
        let mut buf = Vec::new();
        write_vtk_to(&mut buf, &mesh, &cls, &bases, &uh).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let n = render_triangles(&mesh, &cls, &bases, &uh).len();
        assert!(n > mesh.num_triangles());
        assert!(text.contains(&format!("POINTS {} double", 3 * n)));
        assert!(text.contains(&format!("CELL_TYPES {n}")));
    }
}

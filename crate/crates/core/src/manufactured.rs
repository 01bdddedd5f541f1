//! Manufactured solutions `u = L(x, y) (x, y) / mu` for quadratic level sets
//! `L = alpha x^2 + y^2 - r0^2`, and the body force of the problem with
//! unknown solution.
//!
//! With `w = L (x, y)` and `c = lambda / mu` on a side,
//! `sigma(u) = 2 eps(w) + c div(w) I` and
//! `f = -div sigma(u) = -(lap w + (1 + c) grad div w)`, where
//! `lap w = ((6 alpha + 2) x, (2 alpha + 6) y)` and
//! `grad div w = (8 alpha x, 8 y)`.

use crate::elements::MaterialParams;
use crate::geometry::Point;
use crate::interface::{LevelSet, Side};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub level_set: LevelSet,
    pub mat: MaterialParams,
    alpha: f64,
    r0: f64,
}

impl ManufacturedSolution {
    pub fn new(level_set: LevelSet, mat: MaterialParams) -> Result<Self> {
        let (alpha, r0) = match level_set {
            LevelSet::Circle { r0 } => (1.0, r0),
            LevelSet::Ellipse { r0 } => (0.25, r0),
            LevelSet::Line { .. } => {
                return Err(Error::InvalidInput(
                    "manufactured solution needs a circle or ellipse".into(),
                ))
            }
        };
        Ok(ManufacturedSolution {
            level_set,
            mat,
            alpha,
            r0,
        })
    }

    pub fn side(&self, p: Point) -> Side {
        self.level_set.side(p)
    }

    fn l(&self, p: Point) -> f64 {
        self.alpha * p.x * p.x + p.y * p.y - self.r0 * self.r0
    }

    fn ratio(&self, side: Side) -> f64 {
        self.mat.lambda(side) / self.mat.mu(side)
    }

    pub fn u_on(&self, side: Side, p: Point) -> [f64; 2] {
        let s = self.l(p) / self.mat.mu(side);
        [s * p.x, s * p.y]
    }

    pub fn u(&self, p: Point) -> [f64; 2] {
        self.u_on(self.side(p), p)
    }

    /// `grad[i][j] = d u_i / d x_j`
    pub fn grad_on(&self, side: Side, p: Point) -> [[f64; 2]; 2] {
        let (x, y, l, a) = (p.x, p.y, self.l(p), self.alpha);
        let m = self.mat.mu(side);
        [
            [(l + 2.0 * a * x * x) / m, 2.0 * x * y / m],
            [2.0 * a * x * y / m, (l + 2.0 * y * y) / m],
        ]
    }

    pub fn grad(&self, p: Point) -> [[f64; 2]; 2] {
        self.grad_on(self.side(p), p)
    }

    pub fn div_on(&self, side: Side, p: Point) -> f64 {
        let g = self.grad_on(side, p);
        g[0][0] + g[1][1]
    }

    pub fn div(&self, p: Point) -> f64 {
        self.div_on(self.side(p), p)
    }

    pub fn stress_on(&self, side: Side, p: Point) -> [[f64; 2]; 2] {
        let g = self.grad_on(side, p);
        let (mu, lambda) = (self.mat.mu(side), self.mat.lambda(side));
        let div = g[0][0] + g[1][1];
        let shear = mu * (g[0][1] + g[1][0]);
        [
            [2.0 * mu * g[0][0] + lambda * div, shear],
            [shear, 2.0 * mu * g[1][1] + lambda * div],
        ]
    }

    pub fn force_on(&self, side: Side, p: Point) -> [f64; 2] {
        let (a, c) = (self.alpha, self.ratio(side));
        [
            -((6.0 * a + 2.0) + (1.0 + c) * 8.0 * a) * p.x,
            -((2.0 * a + 6.0) + (1.0 + c) * 8.0) * p.y,
        ]
    }

    pub fn force(&self, p: Point) -> [f64; 2] {
        self.force_on(self.side(p), p)
    }
}

/// `F = (-11/4 - (lambda/mu) x, -29/4 - (lambda/mu) y)` with the ratio of the
/// side containing the point.
pub fn unknown_solution_force(
    level_set: LevelSet,
    mat: MaterialParams,
) -> impl Fn(Point) -> [f64; 2] + Sync {
    move |p| {
        let side = level_set.side(p);
        let c = mat.lambda(side) / mat.mu(side);
        [-11.0 / 4.0 - c * p.x, -29.0 / 4.0 - c * p.y]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cases() -> Vec<ManufacturedSolution> {
        vec![
            ManufacturedSolution::new(
                LevelSet::Circle { r0: 0.36 },
                MaterialParams::with_lambda_ratio(1.0, 100.0, 5.0).unwrap(),
            )
            .unwrap(),
            ManufacturedSolution::new(
                LevelSet::Ellipse { r0: 0.3 },
                MaterialParams::with_lambda_ratio(1.0, 10.0, 1000.0).unwrap(),
            )
            .unwrap(),
        ]
    }

    #[test]
    fn circle_force_closed_form() {
        let m = &cases()[0];
        let p = Point::new(0.7, -0.2);
        let f = m.force(p);
        assert!((f[0] + (16.0 + 8.0 * 5.0) * p.x).abs() < 1e-12);
        assert!((f[1] + (16.0 + 8.0 * 5.0) * p.y).abs() < 1e-12);
    }

    #[test]
    fn force_matches_finite_differences_of_stress() {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in cases() {
            for _ in 0..100 {
                let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let side = m.side(p);
                let s = |q: Point| m.stress_on(side, q);
                let (sxp, sxm) = (s(Point::new(p.x + h, p.y)), s(Point::new(p.x - h, p.y)));
                let (syp, sym) = (s(Point::new(p.x, p.y + h)), s(Point::new(p.x, p.y - h)));
                let fd = [
                    -((sxp[0][0] - sxm[0][0]) + (syp[0][1] - sym[0][1])) / (2.0 * h),
                    -((sxp[1][0] - sxm[1][0]) + (syp[1][1] - sym[1][1])) / (2.0 * h),
                ];
                let f = m.force_on(side, p);
                let scale = f[0].abs().max(f[1].abs()).max(1.0);
                for c in 0..2 {
                    assert!((f[c] - fd[c]).abs() <= 1e-6 * scale, "{f:?} {fd:?}");
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-6;
        let m = &cases()[1];
        let p = Point::new(0.41, 0.77);
        let side = m.side(p);
        let g = m.grad_on(side, p);
        for c in 0..2 {
            let dx = (m.u_on(side, Point::new(p.x + h, p.y))[c]
                - m.u_on(side, Point::new(p.x - h, p.y))[c])
                / (2.0 * h);
            let dy = (m.u_on(side, Point::new(p.x, p.y + h))[c]
                - m.u_on(side, Point::new(p.x, p.y - h))[c])
                / (2.0 * h);
            assert!((g[c][0] - dx).abs() < 1e-8 && (g[c][1] - dy).abs() < 1e-8);
        }
    }

    #[test]
    fn continuous_displacement_and_traction_on_interface() {
        for m in cases() {
            let (a, r0) = match m.level_set {
                LevelSet::Circle { r0 } => (1.0, r0),
                LevelSet::Ellipse { r0 } => (2.0, r0),
                _ => unreachable!(),
            };
            for k in 0..64 {
                let t = k as f64 * std::f64::consts::TAU / 64.0;
                let p = Point::new(a * r0 * t.cos(), r0 * t.sin());
                let (up, um) = (m.u_on(Side::Plus, p), m.u_on(Side::Minus, p));
                assert!((up[0] - um[0]).abs() <= 1e-12 && (up[1] - um[1]).abs() <= 1e-12);
                let gl = m.level_set.gradient(p);
                let n = gl * (1.0 / gl.norm());
                let (sp, sm) = (m.stress_on(Side::Plus, p), m.stress_on(Side::Minus, p));
                for i in 0..2 {
                    let tp = sp[i][0] * n.x + sp[i][1] * n.y;
                    let tm = sm[i][0] * n.x + sm[i][1] * n.y;
                    assert!((tp - tm).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn unknown_solution_force_uses_side_ratio() {
        let mat = MaterialParams::from_young_poisson((2.56, 0.28), (280.0, 0.4)).unwrap();
        let f = unknown_solution_force(LevelSet::Ellipse { r0: 0.3 }, mat);
        let inside = f(Point::new(0.0, 0.0));
        assert_eq!(inside, [-2.75, -7.25]);
        let out = f(Point::new(1.0, 1.0));
        assert!((out[0] - (-2.75 - 4.0)).abs() < 1e-12);
        assert!(ManufacturedSolution::new(LevelSet::vertical_line(0.1), mat).is_err());
    }
}

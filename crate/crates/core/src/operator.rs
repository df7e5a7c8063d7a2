//! Discrete complex Hessian, Monge-Ampere determinant, the determinant-shift
//! inequality, and the radial reduction for rotation-invariant fields.
//!
//! Interior nodes use second-order central stencils; the solver applies
//! Shortley-Weller unequal arms at boundary-adjacent nodes internally.
//! Operator-level evaluation requires every stencil value to be finite and
//! reports `MissingNeighbor` otherwise.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geom::Point;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Entries of the complex Hessian at a point: n = 1 keeps u11 only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianPair {
    pub n: usize,
    pub u11: f64,
    pub u22: f64,
    pub u12: Complex64,
}

impl HermitianPair {
    pub fn dim1(u11: f64) -> Self {
        HermitianPair { n: 1, u11, u22: 0.0, u12: Complex64::new(0.0, 0.0) }
    }

    pub fn dim2(u11: f64, u22: f64, u12: Complex64) -> Self {
        HermitianPair { n: 2, u11, u22, u12 }
    }

    /// Monge-Ampere determinant: u11 for n = 1, u11 u22 - |u12|^2 for n = 2.
    pub fn ma_det(&self) -> f64 {
        match self.n {
            1 => self.u11,
            _ => self.u11 * self.u22 - self.u12.norm_sqr(),
        }
    }

    pub fn lambda_min(&self) -> f64 {
        match self.n {
            1 => self.u11,
            _ => {
                let tr = self.u11 + self.u22;
                let gap = (self.u11 - self.u22).powi(2) + 4.0 * self.u12.norm_sqr();
                0.5 * (tr - gap.sqrt())
            }
        }
    }

    /// Discrete plurisubharmonicity: PSD within tolerance.
    pub fn psh_check(&self, tol: f64) -> bool {
        match self.n {
            1 => self.u11 >= -tol,
            _ => self.u11 >= -tol && self.u22 >= -tol && self.ma_det() >= -tol,
        }
    }

    /// Scale-aware default PSD tolerance.
    pub fn default_tol(&self) -> f64 {
        1e-10 * (1.0 + self.u11.abs() + self.u22.abs())
    }
}

pub fn ma_det(hp: &HermitianPair) -> f64 {
    hp.ma_det()
}

pub fn psh_check(hp: &HermitianPair, tol: f64) -> bool {
    hp.psh_check(tol)
}

/// Both sides of det(A + beta I) >= sum_k beta^k det(A)^{(n-k)/n} for a PSD
/// pair. Determinants in (-tol, 0) are clamped to 0 before fractional powers.
pub fn det_shift_bound(hp: &HermitianPair, beta: f64) -> Result<(f64, f64)> {
    let tol = hp.default_tol();
    if !hp.psh_check(tol) {
        return Err(Error::NotPSD(hp.ma_det().min(hp.u11.min(hp.u22))));
    }
    if beta <= 0.0 {
        return Err(Error::OutOfRange { value: beta, range: "beta > 0" });
    }
    let det = hp.ma_det().max(0.0);
    let (lhs, rhs) = match hp.n {
        1 => (hp.u11.max(0.0) + beta, det + beta),
        _ => {
            let lhs = (hp.u11 + beta) * (hp.u22 + beta) - hp.u12.norm_sqr();
            let rhs = det + beta * det.sqrt() + beta * beta;
            (lhs, rhs)
        }
    };
    Ok((lhs, rhs))
}

/// rhs of the shift inequality for an n x n PSD matrix given det(A), any n.
pub fn det_shift_rhs(det: f64, n: usize, beta: f64) -> f64 {
    let det = det.max(0.0);
    let mut rhs = 0.0;
    for k in 0..=n {
        let frac = (n - k) as f64 / n as f64;
        let pow = if frac == 0.0 { 1.0 } else { det.powf(frac) };
        rhs += beta.powi(k as i32) * pow;
    }
    rhs
}

/// Determinant of an n x n complex matrix, n <= 3.
pub fn complex_det(m: &[[Complex64; 3]; 3], n: usize) -> Complex64 {
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("complex_det supports n <= 3"),
    }
}

fn value(field: &ScalarField, idx: Option<usize>) -> Result<f64> {
    match idx {
        Some(i) => {
            let v = field.values[i];
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::MissingNeighbor(i))
            }
        }
        None => Err(Error::MissingNeighbor(usize::MAX)),
    }
}

/// Central second difference along one axis.
fn second_diff(field: &ScalarField, node: usize, axis: usize) -> Result<f64> {
    let g = &field.grid;
    let up = value(field, g.neighbor(node, axis, true))?;
    let dn = value(field, g.neighbor(node, axis, false))?;
    let c = field.values[node];
    Ok((up + dn - 2.0 * c) / (g.spacing * g.spacing))
}

/// Central cross difference d^2 u / (d axis_a d axis_b).
fn cross_diff(field: &ScalarField, node: usize, a: usize, b: usize) -> Result<f64> {
    let g = &field.grid;
    let step = |i: usize, axis: usize, pos: bool| g.neighbor(i, axis, pos);
    let pp = value(field, step(node, a, true).and_then(|i| step(i, b, true)))?;
    let pm = value(field, step(node, a, true).and_then(|i| step(i, b, false)))?;
    let mp = value(field, step(node, a, false).and_then(|i| step(i, b, true)))?;
    let mm = value(field, step(node, a, false).and_then(|i| step(i, b, false)))?;
    Ok((pp - pm - mp + mm) / (4.0 * g.spacing * g.spacing))
}

/// Discrete complex Hessian at a node by central differences.
///
/// n = 1: u_{z zbar} = (four-neighbor sum - 4u) / (4 h^2). n = 2 adds the
/// second diagonal and the mixed entry from the four 16-node cross stencils.
pub fn complex_hessian(field: &ScalarField, node: usize) -> Result<HermitianPair> {
    let g = &field.grid;
    if g.radial {
        return Err(Error::RadialModeInvalid(
            "complex_hessian expects a full grid; use radial_det".into(),
        ));
    }
    let u11 = (second_diff(field, node, 0)? + second_diff(field, node, 1)?) / 4.0;
    if g.domain.n() == 1 {
        return Ok(HermitianPair::dim1(u11));
    }
    let u22 = (second_diff(field, node, 2)? + second_diff(field, node, 3)?) / 4.0;
    let x1x2 = cross_diff(field, node, 0, 2)?;
    let y1y2 = cross_diff(field, node, 1, 3)?;
    let x1y2 = cross_diff(field, node, 0, 3)?;
    let y1x2 = cross_diff(field, node, 1, 2)?;
    let u12 = Complex64::new((x1x2 + y1y2) / 4.0, (x1y2 - y1x2) / 4.0);
    Ok(HermitianPair::dim2(u11, u22, u12))
}

/// Complex Hessian of a closure at an arbitrary point, central differences at
/// step `h`.
pub fn hessian_of_fn<F: Fn(&Point) -> f64 + ?Sized>(f: &F, p: &Point, h: f64) -> HermitianPair {
    let d2 = |axis: usize| {
        let mut e = [0.0; 4];
        e[axis] = 1.0;
        (f(&p.add_scaled(&e, h)) + f(&p.add_scaled(&e, -h)) - 2.0 * f(p)) / (h * h)
    };
    let cross = |a: usize, b: usize| {
        let mut ea = [0.0; 4];
        ea[a] = 1.0;
        let shift = |sa: f64, sb: f64| {
            let mut q = p.add_scaled(&ea, sa * h);
            q.coords[b] += sb * h;
            f(&q)
        };
        (shift(1.0, 1.0) - shift(1.0, -1.0) - shift(-1.0, 1.0) + shift(-1.0, -1.0))
            / (4.0 * h * h)
    };
    let u11 = (d2(0) + d2(1)) / 4.0;
    if p.n() == 1 {
        return HermitianPair::dim1(u11);
    }
    let u22 = (d2(2) + d2(3)) / 4.0;
    let u12 = Complex64::new(
        (cross(0, 2) + cross(1, 3)) / 4.0,
        (cross(0, 3) - cross(1, 2)) / 4.0,
    );
    HermitianPair::dim2(u11, u22, u12)
}

/// Monge-Ampere determinant of a rotation-invariant field on an (r1, r2) grid:
/// (1/16) [(u_{r1 r1} + u_{r1}/r1)(u_{r2 r2} + u_{r2}/r2) - u_{r1 r2}^2],
/// with u_{rr} replacing u_r/r at the axes.
pub fn radial_det(field: &ScalarField, node: usize) -> Result<f64> {
    let g = &field.grid;
    if !g.radial {
        return Err(Error::RadialModeInvalid("radial_det expects a radial grid".into()));
    }
    let p = g.node_point(node);
    let h = g.spacing;
    let mut a = [0.0f64; 2];
    for axis in 0..2 {
        let r = p.coords[axis];
        let up = value(field, g.neighbor(node, axis, true))?;
        let c = field.values[node];
        if r < 0.5 * h {
            // axis limit: A = 2 u_rr with the reflected arm
            a[axis] = 4.0 * (up - c) / (h * h);
        } else {
            let dn = value(field, g.neighbor(node, axis, false))?;
            let urr = (up + dn - 2.0 * c) / (h * h);
            let ur = (up - dn) / (2.0 * h);
            a[axis] = urr + ur / r;
        }
    }
    // mixed term, with even reflection across the axes
    let corner = |s1: bool, s2: bool| -> Result<f64> {
        let mi = g.multi_index(node);
        let i1 = if s1 { mi[0] + 1 } else { mi[0].wrapping_sub(1) };
        let i2 = if s2 { mi[1] + 1 } else { mi[1].wrapping_sub(1) };
        let i1 = if mi[0] == 0 && !s1 { 1 } else { i1 };
        let i2 = if mi[1] == 0 && !s2 { 1 } else { i2 };
        if i1 >= g.shape[0] || i2 >= g.shape[1] {
            return Err(Error::MissingNeighbor(node));
        }
        value(field, Some(g.flat_index(&[i1, i2, 0, 0])))
    };
    let m = (corner(true, true)? - corner(true, false)? - corner(false, true)?
        + corner(false, false)?)
        / (4.0 * h * h);
    Ok((a[0] * a[1] - m * m) / 16.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, Grid};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn ball_grid(spacing: f64) -> Arc<Grid> {
        Arc::new(Grid::classify(&DomainSpec::ball2(), spacing).unwrap())
    }

    #[test]
    fn hessian_exact_on_norm_square() {
        let grid = ball_grid(0.25);
        let f = ScalarField::from_fn(grid.clone(), |p| p.norm2());
        for &i in grid.interior_nodes().iter().take(200) {
            let hp = complex_hessian(&f, i).unwrap();
            assert_relative_eq!(hp.u11, 1.0, max_relative = 1e-12);
            assert_relative_eq!(hp.u22, 1.0, max_relative = 1e-12);
            assert!(hp.u12.norm() < 1e-12);
            assert_relative_eq!(hp.ma_det(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn hessian_vanishes_on_pluriharmonic_functions() {
        let grid = ball_grid(0.25);
        // Re(z1^2) and Re(z1 z2) are real parts of holomorphic functions
        for f in [
            ScalarField::from_fn(grid.clone(), |p| (p.z(0) * p.z(0)).re),
            ScalarField::from_fn(grid.clone(), |p| (p.z(0) * p.z(1)).re),
        ] {
            for &i in grid.interior_nodes().iter().take(100) {
                let hp = complex_hessian(&f, i).unwrap();
                assert!(hp.u11.abs() < 1e-10 && hp.u22.abs() < 1e-10);
                assert!(hp.u12.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn hessian_of_separable_quartic() {
        let grid = ball_grid(0.125);
        let f = ScalarField::from_fn(grid.clone(), |p| p.z(0).norm_sqr() * p.z(1).norm_sqr());
        let node = grid.nearest_node(&Point::new4(0.5, 0.0, 0.5, 0.0)).unwrap();
        let hp = complex_hessian(&f, node).unwrap();
        // u11 = |z2|^2, u22 = |z1|^2, u12 = conj(z1) z2
        assert_relative_eq!(hp.u11, 0.25, max_relative = 1e-10);
        assert_relative_eq!(hp.u22, 0.25, max_relative = 1e-10);
        assert_relative_eq!(hp.u12.re, 0.25, max_relative = 1e-10);
        assert_relative_eq!(hp.ma_det(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ma_det_arithmetic() {
        assert_eq!(HermitianPair::dim2(1.0, 1.0, Complex64::new(0.0, 0.0)).ma_det(), 1.0);
        assert_eq!(HermitianPair::dim2(1.0, 1.0, Complex64::new(1.0, 0.0)).ma_det(), 0.0);
        let hp = HermitianPair::dim2(2.0, 3.0, Complex64::new(1.0, 1.0));
        assert_eq!(hp.ma_det(), 4.0);
    }

    #[test]
    fn psh_check_cases() {
        let tol = 1e-10;
        assert!(HermitianPair::dim2(1.0, 1.0, Complex64::new(0.0, 0.0)).psh_check(tol));
        assert!(!HermitianPair::dim2(1.0, 1.0, Complex64::new(2.0, 0.0)).psh_check(tol));
        assert!(!HermitianPair::dim2(-1.0, 5.0, Complex64::new(0.0, 0.0)).psh_check(tol));
    }

    #[test]
    fn det_shift_bound_examples() {
        // zero matrix, beta = 1, n = 2: equality at 1
        let z = HermitianPair::dim2(0.0, 0.0, Complex64::new(0.0, 0.0));
        let (lhs, rhs) = det_shift_bound(&z, 1.0).unwrap();
        assert_relative_eq!(lhs, 1.0);
        assert_relative_eq!(rhs, 1.0);
        // diag(1,1), beta = 1: 4 >= 3
        let id = HermitianPair::dim2(1.0, 1.0, Complex64::new(0.0, 0.0));
        let (lhs, rhs) = det_shift_bound(&id, 1.0).unwrap();
        assert_relative_eq!(lhs, 4.0);
        assert_relative_eq!(rhs, 3.0);
        // diag(1,4), beta = 2: 18 >= 12
        let d = HermitianPair::dim2(1.0, 4.0, Complex64::new(0.0, 0.0));
        let (lhs, rhs) = det_shift_bound(&d, 2.0).unwrap();
        assert_relative_eq!(lhs, 18.0);
        assert_relative_eq!(rhs, 12.0);
        // non-PSD input is rejected
        let bad = HermitianPair::dim2(1.0, 1.0, Complex64::new(2.0, 0.0));
        assert!(matches!(det_shift_bound(&bad, 1.0), Err(Error::NotPSD(_))));
    }

    #[test]
    fn radial_det_matches_full_grid_values() {
        let d = DomainSpec::ball2();
        let grid = Arc::new(Grid::classify_radial(&d, 0.0625).unwrap());
        // u = r1^2 + r2^2 -> det 1; u = r1^2 r2^2 -> det 0; u = f(r2) -> det 0
        let f1 = ScalarField::from_fn(grid.clone(), |p| p.coords[0].powi(2) + p.coords[1].powi(2));
        let f2 = ScalarField::from_fn(grid.clone(), |p| (p.coords[0] * p.coords[1]).powi(2));
        let f3 = ScalarField::from_fn(grid.clone(), |p| p.coords[1].powi(2));
        for &i in grid.interior_nodes().iter().take(300) {
            assert_relative_eq!(radial_det(&f1, i).unwrap(), 1.0, max_relative = 1e-9);
            assert!(radial_det(&f2, i).unwrap().abs() < 1e-9);
            assert!(radial_det(&f3, i).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn radial_det_agrees_with_complex_hessian_on_invariant_fields() {
        let d = DomainSpec::ball2();
        let full = Arc::new(Grid::classify(&d, 0.125).unwrap());
        let rad = Arc::new(Grid::classify_radial(&d, 0.125).unwrap());
        // five rotation-invariant test fields
        let fields: Vec<(Box<dyn Fn(f64, f64) -> f64>, &str)> = vec![
            (Box::new(|a, b| a * a + b * b), "r2"),
            (Box::new(|a, b| (a * a + b * b).powi(2)), "r4"),
            (Box::new(|a: f64, b: f64| (a * a).exp() + b * b), "exp"),
            (Box::new(|a, b| a * a * b * b), "prod"),
            (Box::new(|a: f64, b: f64| (1.0 + a * a + 0.5 * b * b).ln()), "log"),
        ];
        let full_deep: std::collections::HashSet<usize> =
            full.deep_interior_nodes(1).into_iter().collect();
        for (f, name) in &fields {
            let uf = ScalarField::from_fn(full.clone(), |p| {
                f(p.z(0).norm(), p.z(1).norm())
            });
            let ur = ScalarField::from_fn(rad.clone(), |p| f(p.coords[0], p.coords[1]));
            for &i in rad.deep_interior_nodes(1).iter().take(150) {
                let p = rad.node_point(i);
                if p.coords[0] < 0.2 || p.coords[1] < 0.2 {
                    continue; // matched full-grid node must sit away from the axes
                }
                let q = Point::new4(p.coords[0], 0.0, p.coords[1], 0.0);
                let Some(j) = full.nearest_node(&q) else { continue };
                if full.node_point(j).dist(&q) > 1e-12 || !full_deep.contains(&j) {
                    continue;
                }
                let dr = radial_det(&ur, i).unwrap();
                let df = complex_hessian(&uf, j).unwrap().ma_det();
                assert!(
                    (dr - df).abs() <= 10.0 * full.spacing * full.spacing,
                    "{name}: radial {dr} vs full {df} at {:?}",
                    p
                );
            }
        }
    }
}

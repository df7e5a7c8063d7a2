//! Small geometric primitives: points of R^2 / R^4 viewed as C^1 / C^2,
//! low-discrepancy sequences, and scalar root bracketing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point of R^{2n}, n = 1 or 2. Coordinates are stored padded to length 4;
/// `dim` gives the number of real coordinates in use. Axis pairs (0,1) and
/// (2,3) are the real and imaginary parts of z1 and z2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: [f64; 4],
    pub dim: usize,
}

impl Point {
    pub fn new2(x: f64, y: f64) -> Self {
        Point { coords: [x, y, 0.0, 0.0], dim: 2 }
    }

    pub fn new4(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Point { coords: [x1, y1, x2, y2], dim: 4 }
    }

    pub fn zero(dim: usize) -> Self {
        Point { coords: [0.0; 4], dim }
    }

    pub fn from_slice(c: &[f64]) -> Self {
        let mut coords = [0.0; 4];
        coords[..c.len()].copy_from_slice(c);
        Point { coords, dim: c.len() }
    }

    /// Complex dimension (1 or 2).
    pub fn n(&self) -> usize {
        self.dim / 2
    }

    pub fn z(&self, j: usize) -> Complex64 {
        Complex64::new(self.coords[2 * j], self.coords[2 * j + 1])
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim {
            let d = self.coords[k] - other.coords[k];
            s += d * d;
        }
        s
    }

    pub fn norm2(&self) -> f64 {
        self.coords[..self.dim].iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn add_scaled(&self, dir: &[f64], t: f64) -> Point {
        let mut coords = self.coords;
        for k in 0..self.dim {
            coords[k] += t * dir[k];
        }
        Point { coords, dim: self.dim }
    }
}

/// Halton sequence in `dim` dimensions (bases 2, 3, 5, 7), index starting at 1.
pub fn halton(index: usize, dim: usize) -> [f64; 4] {
    const BASES: [u64; 4] = [2, 3, 5, 7];
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate().take(dim) {
        let b = BASES[k];
        let mut f = 1.0;
        let mut r = 0.0;
        let mut i = index as u64;
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        *slot = r;
    }
    out
}

/// Bisection on [a, b] assuming phi(a) and phi(b) have opposite signs.
/// Refines until the interval is below `xtol` or |phi| below `ftol`.
pub fn bisect<F: Fn(f64) -> f64>(phi: F, mut a: f64, mut b: f64, xtol: f64, ftol: f64) -> f64 {
    let mut fa = phi(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = phi(m);
        if fm.abs() <= ftol || (b - a).abs() <= xtol {
            return m;
        }
        if (fa <= 0.0) == (fm <= 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (0.0, sy / n.max(1.0));
    }
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_views() {
        let p = Point::new4(1.0, 2.0, 3.0, 4.0);
        assert_eq!(p.z(0), Complex64::new(1.0, 2.0));
        assert_eq!(p.z(1), Complex64::new(3.0, 4.0));
        assert_eq!(p.n(), 2);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 0.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn halton_is_in_unit_cube() {
        for i in 1..100 {
            let h = halton(i, 4);
            assert!(h.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, c) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12);
    }
}

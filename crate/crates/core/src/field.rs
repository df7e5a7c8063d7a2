//! Real scalar fields on grid lattices.

use crate::geom::Point;
use crate::geometry::Grid;
use std::sync::Arc;

/// Values on every lattice node of a grid. Fields produced by the solver carry
/// NaN at exterior nodes; fields sampled from formulas are finite everywhere.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn from_fn<F: Fn(&Point) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let values = (0..grid.node_count())
            .map(|i| f(&grid.node_point(i)))
            .collect();
        ScalarField { grid, values }
    }

    /// Evaluate only at inside nodes; exterior nodes get NaN.
    pub fn from_fn_inside<F: Fn(&Point) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let values = (0..grid.node_count())
            .map(|i| {
                if grid.is_inside(i) {
                    f(&grid.node_point(i))
                } else {
                    f64::NAN
                }
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let values = vec![value; grid.node_count()];
        ScalarField { grid, values }
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
            || (self.grid.shape == other.grid.shape
                && self.grid.origin == other.grid.origin
                && self.grid.spacing == other.grid.spacing
                && self.grid.radial == other.grid.radial)
    }

    /// Multilinear interpolation; None when the cell is outside the lattice or
    /// touches a node without a finite value.
    pub fn interpolate(&self, p: &Point) -> Option<f64> {
        let g = &self.grid;
        let dim = g.dim;
        let mut base = [0usize; 4];
        let mut frac = [0.0f64; 4];
        for a in 0..dim {
            let x = (p.coords[a] - g.origin[a]) / g.spacing;
            if x < 0.0 || x > (g.shape[a] - 1) as f64 {
                return None;
            }
            let fl = x.floor().min((g.shape[a] - 2) as f64).max(0.0);
            base[a] = fl as usize;
            frac[a] = x - fl;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut mi = base;
            let mut w = 1.0;
            for a in 0..dim {
                if corner & (1 << a) != 0 {
                    mi[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            let v = self.values[g.flat_index(&mi)];
            if !v.is_finite() {
                if w > 0.0 {
                    return None;
                }
                continue;
            }
            acc += w * v;
        }
        Some(acc)
    }

    /// Max |self - other| over nodes where both are finite.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

//! Monotone pointwise relaxation for `det[u_ij] = h` with u = phi on the
//! boundary, realizing the Perron-Bremermann upper envelope on a grid.
//!
//! Each Gauss-Seidel visit solves the per-node quadratic that makes both
//! discrete diagonals nonnegative and det = h + |u12|^2 with the off-diagonal
//! frozen from the current iterate. Sweeps alternate lexicographic and
//! reversed order (symmetric Gauss-Seidel). A sweep is sequential by
//! definition; everything else reads the field immutably.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geom::Point;
use crate::geometry::{sample_boundary, DomainSpec, Grid, NodeClass};
use crate::operator::{complex_hessian, radial_det};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

type PointFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Boundary data catalog. Custom closures receive points in full complex
/// coordinates (radial crossings are embedded as (r1, 0, r2, 0)).
#[derive(Clone)]
pub enum BoundaryData {
    Zero,
    ReZ1,
    AbsZ1Alpha { alpha: f64 },
    /// Sign-flipped power datum; the plurisubharmonic side of the infinite-type
    /// model problem.
    NegAbsZ1Alpha { alpha: f64 },
    Custom(PointFn),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundaryData({})", self.id())
    }
}

impl BoundaryData {
    pub fn parse(id: &str) -> Result<Self> {
        let invalid = |reason: String| Error::ConfigInvalid { key: "phi".into(), reason };
        match id {
            "zero" => return Ok(BoundaryData::Zero),
            "re-z1" => return Ok(BoundaryData::ReZ1),
            _ => {}
        }
        if let Some(v) = id.strip_prefix("abs-z1:") {
            let alpha: f64 = v.parse().map_err(|_| invalid(format!("bad exponent `{v}`")))?;
            return Ok(BoundaryData::AbsZ1Alpha { alpha });
        }
        if let Some(v) = id.strip_prefix("neg-abs-z1:") {
            let alpha: f64 = v.parse().map_err(|_| invalid(format!("bad exponent `{v}`")))?;
            return Ok(BoundaryData::NegAbsZ1Alpha { alpha });
        }
        Err(invalid(format!("unknown boundary data `{id}`")))
    }

    pub fn id(&self) -> String {
        match self {
            BoundaryData::Zero => "zero".into(),
            BoundaryData::ReZ1 => "re-z1".into(),
            BoundaryData::AbsZ1Alpha { alpha } => format!("abs-z1:{alpha}"),
            BoundaryData::NegAbsZ1Alpha { alpha } => format!("neg-abs-z1:{alpha}"),
            BoundaryData::Custom(_) => "custom".into(),
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            BoundaryData::Zero => 0.0,
            BoundaryData::ReZ1 => p.coords[0],
            BoundaryData::AbsZ1Alpha { alpha } => p.z(0).norm().powf(*alpha),
            BoundaryData::NegAbsZ1Alpha { alpha } => -p.z(0).norm().powf(*alpha),
            BoundaryData::Custom(f) => f(p),
        }
    }

    fn rotation_invariant_at(&self, p: &Point) -> bool {
        let base = self.eval(p);
        for (t1, t2) in [(0.7, 1.3), (2.1, 0.4), (4.0, 5.5)] {
            let z1 = p.z(0) * num_complex::Complex64::from_polar(1.0, t1);
            let z2 = p.z(1) * num_complex::Complex64::from_polar(1.0, t2);
            let q = Point::new4(z1.re, z1.im, z2.re, z2.im);
            if (self.eval(&q) - base).abs() > 1e-12 * (1.0 + base.abs()) {
                return false;
            }
        }
        true
    }
}

/// Right-hand-side density catalog.
#[derive(Clone)]
pub enum Density {
    Zero,
    One,
    Custom(PointFn),
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Density({})", self.id())
    }
}

impl Density {
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "zero" => Ok(Density::Zero),
            "one" => Ok(Density::One),
            _ => Err(Error::ConfigInvalid {
                key: "h".into(),
                reason: format!("unknown density `{id}`"),
            }),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Density::Zero => "zero".into(),
            Density::One => "one".into(),
            Density::Custom(_) => "custom".into(),
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::One => 1.0,
            Density::Custom(f) => f(p),
        }
    }
}

/// The Dirichlet problem data.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: DomainSpec,
    pub phi: BoundaryData,
    pub h: Density,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    pub spacing: f64,
    /// Convergence threshold on the sweep update infinity-norm;
    /// default 1e-8 * (1 + data scale).
    pub tol: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub radial: bool,
}

impl SolveConfig {
    pub fn new(spacing: f64) -> Self {
        SolveConfig { spacing, tol: None, max_sweeps: None, radial: false }
    }

    pub fn radial(spacing: f64) -> Self {
        SolveConfig { spacing, tol: None, max_sweeps: None, radial: true }
    }
}

/// Outcome of a solve; `field` carries NaN at exterior lattice nodes.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub domain: String,
    pub phi: String,
    pub h: String,
    pub alpha: f64,
    pub spacing: f64,
    pub radial: bool,
    pub variant: String,
    pub sweeps: usize,
    pub converged: bool,
    pub tol: f64,
    pub final_update: f64,
    /// max |ma_det(H u) - h| over interior nodes at Chebyshev depth >= 2
    pub residual: f64,
    pub residual_nodes: usize,
    /// max |u - phi| at boundary crossings, by linear extrapolation
    pub boundary_mismatch: f64,
    /// most negative single-node update seen in any sweep
    pub min_update_overall: f64,
    pub negative_update_sweeps: usize,
    #[serde(skip)]
    pub field: ScalarField,
    #[serde(skip)]
    pub sweep_log: Vec<(f64, f64)>,
}

/// Precomputed Shortley-Weller stencil data over the inside nodes.
pub(crate) struct SolveGrid {
    pub grid: Arc<Grid>,
    pub inside: Vec<usize>,
    pub rank_of: Vec<i64>,
    pub planes: usize,
    plane_c: Vec<f64>,
    term_start: Vec<u32>,
    term_neighbor: Vec<i32>,
    term_weight: Vec<f64>,
    term_bval: Vec<f64>,
    /// cross-stencil node ranks per inside node; full grid: 4 crosses x 4
    /// corners, radial: 1 cross x 4 corners; first entry -2 if unavailable
    mixed: Vec<i32>,
    mixed_len: usize,
    pub h_at: Vec<f64>,
    pub bval_min: f64,
    pub h_sup: f64,
}

impl SolveGrid {
    pub(crate) fn build(grid: Arc<Grid>, phi: &BoundaryData, h: &Density) -> Result<SolveGrid> {
        let n_nodes = grid.node_count();
        let inside = grid.inside_nodes();
        let mut rank_of = vec![-1i64; n_nodes];
        for (r, &i) in inside.iter().enumerate() {
            rank_of[i] = r as i64;
        }
        let planes = if grid.radial { 2 } else { grid.domain.n() };
        let axes_per_plane = if grid.radial { 1 } else { 2 };
        let h_spacing = grid.spacing;

        let eval_phi = |p: &Point| -> f64 {
            if grid.radial {
                phi.eval(&Point::new4(p.coords[0], 0.0, p.coords[1], 0.0))
            } else {
                phi.eval(p)
            }
        };
        let eval_h = |p: &Point| -> f64 {
            if grid.radial {
                h.eval(&Point::new4(p.coords[0], 0.0, p.coords[1], 0.0))
            } else {
                h.eval(p)
            }
        };

        let mut plane_c = Vec::with_capacity(inside.len() * planes);
        let mut term_start = Vec::with_capacity(inside.len() * planes + 1);
        let mut term_neighbor = Vec::new();
        let mut term_weight = Vec::new();
        let mut term_bval = Vec::new();
        term_start.push(0u32);
        let mut bval_min = f64::INFINITY;
        let mut h_sup = 0.0f64;
        let mut h_at = Vec::with_capacity(inside.len());

        for &node in &inside {
            let p = grid.node_point(node);
            let hv = eval_h(&p);
            if hv < 0.0 {
                return Err(Error::OutOfRange { value: hv, range: "h >= 0" });
            }
            if hv > h_sup {
                h_sup = hv;
            }
            h_at.push(hv);

            for plane in 0..planes {
                let mut c_total = 0.0;
                for k in 0..axes_per_plane {
                    let axis = if grid.radial { plane } else { 2 * plane + k };
                    // arm lengths and value sources in the +/- directions
                    let mut arm = [0.0f64; 2];
                    let mut src = [0i32; 2];
                    let mut bv = [0.0f64; 2];
                    let mut reflected = false;
                    for (slot, positive) in [(0usize, true), (1usize, false)] {
                        let dir = 2 * axis + if positive { 0 } else { 1 };
                        if let Some(theta) = grid.crossing(node, dir) {
                            arm[slot] = theta.max(1e-6) * h_spacing;
                            src[slot] = -1;
                            bv[slot] = eval_phi(&grid.crossing_point(node, dir).unwrap());
                            if bv[slot] < bval_min {
                                bval_min = bv[slot];
                            }
                        } else {
                            match grid.neighbor(node, axis, positive) {
                                Some(j) if rank_of[j] >= 0 => {
                                    arm[slot] = h_spacing;
                                    src[slot] = rank_of[j] as i32;
                                }
                                _ if grid.radial && !positive => {
                                    // reflected arm across the coordinate axis
                                    reflected = true;
                                }
                                _ => return Err(Error::MissingNeighbor(node)),
                            }
                        }
                    }
                    let r = p.coords[axis];
                    if grid.radial && (reflected || r < 0.5 * h_spacing) {
                        // axis limit A = 2 u_rr with even reflection
                        let a = arm[0];
                        let w = 4.0 / (a * a);
                        term_neighbor.push(src[0]);
                        term_weight.push(w);
                        term_bval.push(bv[0]);
                        c_total += w;
                    } else {
                        let (a, b) = (arm[0], arm[1]);
                        let (mut wp, mut wm, cc);
                        if grid.radial {
                            wp = (2.0 + b / r) / (a * (a + b));
                            wm = (2.0 - a / r) / (b * (a + b));
                            cc = (2.0 - (a - b) / r) / (a * b);
                        } else {
                            wp = 2.0 / (a * (a + b));
                            wm = 2.0 / (b * (a + b));
                            cc = 2.0 / (a * b);
                        }
                        if wm < 0.0 {
                            wm = 0.0; // cannot occur for arms <= spacing <= r
                        }
                        if wp < 0.0 {
                            wp = 0.0;
                        }
                        term_neighbor.push(src[0]);
                        term_weight.push(wp);
                        term_bval.push(bv[0]);
                        term_neighbor.push(src[1]);
                        term_weight.push(wm);
                        term_bval.push(bv[1]);
                        c_total += cc;
                    }
                }
                plane_c.push(c_total);
                term_start.push(term_neighbor.len() as u32);
            }
        }
        if !bval_min.is_finite() {
            // no boundary arm anywhere cannot happen for a bounded domain
            bval_min = 0.0;
        }

        // mixed-derivative cross stencils
        let (mixed_len, mixed) = if planes < 2 {
            (0usize, Vec::new())
        } else if grid.radial {
            let mut mixed = Vec::with_capacity(inside.len() * 4);
            for &node in &inside {
                let mi = grid.multi_index(node);
                let mut corners = [0i32; 4];
                let mut ok = true;
                for (slot, (s1, s2)) in
                    [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)].iter().enumerate()
                {
                    // even reflection across the axes
                    let i1 = (mi[0] as i64 + s1).unsigned_abs() as usize;
                    let i2 = (mi[1] as i64 + s2).unsigned_abs() as usize;
                    if i1 >= grid.shape[0] || i2 >= grid.shape[1] {
                        ok = false;
                        break;
                    }
                    let j = grid.flat_index(&[i1, i2, 0, 0]);
                    if rank_of[j] < 0 {
                        ok = false;
                        break;
                    }
                    corners[slot] = rank_of[j] as i32;
                }
                if ok {
                    mixed.extend_from_slice(&corners);
                } else {
                    mixed.extend_from_slice(&[-2, 0, 0, 0]);
                }
            }
            (4, mixed)
        } else {
            // four real cross pairs: (x1,x2), (x1,y2), (y1,x2), (y1,y2)
            let pairs = [(0usize, 2usize), (0, 3), (1, 2), (1, 3)];
            let mut mixed = Vec::with_capacity(inside.len() * 16);
            for &node in &inside {
                let mi = grid.multi_index(node);
                let mut entry = [0i32; 16];
                let mut ok = true;
                'fill: for (pi, &(a, b)) in pairs.iter().enumerate() {
                    for (ci, (sa, sb)) in
                        [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)].iter().enumerate()
                    {
                        let ia = mi[a] as i64 + sa;
                        let ib = mi[b] as i64 + sb;
                        if ia < 0
                            || ib < 0
                            || ia >= grid.shape[a] as i64
                            || ib >= grid.shape[b] as i64
                        {
                            ok = false;
                            break 'fill;
                        }
                        let mut mj = mi;
                        mj[a] = ia as usize;
                        mj[b] = ib as usize;
                        let j = grid.flat_index(&mj);
                        if rank_of[j] < 0 {
                            ok = false;
                            break 'fill;
                        }
                        entry[4 * pi + ci] = rank_of[j] as i32;
                    }
                }
                if ok {
                    mixed.extend_from_slice(&entry);
                } else {
                    let mut blocked = [0i32; 16];
                    blocked[0] = -2;
                    mixed.extend_from_slice(&blocked);
                }
            }
            (16, mixed)
        };

        Ok(SolveGrid {
            grid,
            inside,
            rank_of,
            planes,
            plane_c,
            term_start,
            term_neighbor,
            term_weight,
            term_bval,
            mixed,
            mixed_len,
            h_at,
            bval_min,
            h_sup,
        })
    }

    fn plane_sum(&self, u: &[f64], rank: usize, plane: usize) -> (f64, f64) {
        let slot = rank * self.planes + plane;
        let (lo, hi) = (self.term_start[slot] as usize, self.term_start[slot + 1] as usize);
        let mut s = 0.0;
        for t in lo..hi {
            let nb = self.term_neighbor[t];
            let v = if nb >= 0 { u[nb as usize] } else { self.term_bval[t] };
            s += self.term_weight[t] * v;
        }
        (s, self.plane_c[slot])
    }

    /// |u_{1 2bar}|^2 frozen from the current iterate; 0 when the cross
    /// stencil leaves the domain.
    fn mixed_sq(&self, u: &[f64], rank: usize) -> f64 {
        if self.mixed_len == 0 {
            return 0.0;
        }
        let base = rank * self.mixed_len;
        if self.mixed[base] == -2 {
            return 0.0;
        }
        let h2 = 4.0 * self.grid.spacing * self.grid.spacing;
        let cross = |off: usize| -> f64 {
            let c = &self.mixed[base + 4 * off..base + 4 * off + 4];
            (u[c[0] as usize] - u[c[1] as usize] - u[c[2] as usize] + u[c[3] as usize]) / h2
        };
        if self.grid.radial {
            let m = cross(0); // u_{r1 r2}; |u12| = |m| / 4
            m * m / 16.0
        } else {
            let re = (cross(0) + cross(3)) / 4.0;
            let im = (cross(1) - cross(2)) / 4.0;
            re * re + im * im
        }
    }

    /// One Gauss-Seidel pass; `forward` picks the node order.
    /// Returns (max |update|, min signed update).
    pub(crate) fn sweep(&self, u: &mut [f64], forward: bool) -> Result<(f64, f64)> {
        let m = self.inside.len();
        let mut max_up = 0.0f64;
        let mut min_up = f64::INFINITY;
        for step in 0..m {
            let rank = if forward { step } else { m - 1 - step };
            let (s1, c1) = self.plane_sum(u, rank, 0);
            let new = if self.planes == 1 {
                (s1 - 4.0 * self.h_at[rank]) / c1
            } else {
                let (s2, c2) = self.plane_sum(u, rank, 1);
                let p = 16.0 * (self.h_at[rank] + self.mixed_sq(u, rank));
                let disc = (c1 * s2 - c2 * s1).powi(2) + 4.0 * c1 * c2 * p;
                if disc < 0.0 {
                    return Err(Error::NegativeDiscriminant(disc));
                }
                (c1 * s2 + c2 * s1 - disc.sqrt()) / (2.0 * c1 * c2)
            };
            let old = u[rank];
            let d = new - old;
            if d.abs() > max_up {
                max_up = d.abs();
            }
            if d < min_up {
                min_up = d;
            }
            u[rank] = new;
        }
        Ok((max_up, if min_up.is_finite() { min_up } else { 0.0 }))
    }

    /// One linear Laplace pass (harmonic extension).
    pub(crate) fn laplace_sweep(&self, u: &mut [f64], forward: bool) -> f64 {
        let m = self.inside.len();
        let mut max_up = 0.0f64;
        for step in 0..m {
            let rank = if forward { step } else { m - 1 - step };
            let mut s = 0.0;
            let mut c = 0.0;
            for plane in 0..self.planes {
                let (sp, cp) = self.plane_sum(u, rank, plane);
                s += sp;
                c += cp;
            }
            let new = s / c;
            let d = (new - u[rank]).abs();
            if d > max_up {
                max_up = d;
            }
            u[rank] = new;
        }
        max_up
    }

    pub(crate) fn scatter(&self, u: &[f64]) -> ScalarField {
        let mut values = vec![f64::NAN; self.grid.node_count()];
        for (r, &i) in self.inside.iter().enumerate() {
            values[i] = u[r];
        }
        ScalarField { grid: self.grid.clone(), values }
    }

    pub(crate) fn gather(&self, f: &ScalarField) -> Vec<f64> {
        self.inside.iter().map(|&i| f.values[i]).collect()
    }
}

/// Circumradius of the domain, from a boundary sample.
fn circumradius(domain: &DomainSpec) -> Result<f64> {
    let count = if domain.n() == 1 { 64 } else { 256 };
    let mesh = sample_boundary(domain, count)?;
    Ok(mesh.points.iter().map(|p| p.norm()).fold(0.0, f64::max))
}

/// The explicit Perron-Bremermann member A(|z|^2 - R^2) + min phi, optionally
/// improved by a pointwise max with a supplied barrier envelope.
pub fn initial_subsolution(
    p: &ProblemSpec,
    grid: &Arc<Grid>,
    barrier: Option<&ScalarField>,
) -> Result<ScalarField> {
    let sg = SolveGrid::build(grid.clone(), &p.phi, &p.h)?;
    Ok(initial_subsolution_on(p, &sg, barrier))
}

fn initial_subsolution_on(
    p: &ProblemSpec,
    sg: &SolveGrid,
    barrier: Option<&ScalarField>,
) -> ScalarField {
    let big_r = circumradius(&p.domain).unwrap_or(1.0);
    let n = p.domain.n() as f64;
    let a = sg.h_sup.powf(1.0 / n).max(1.0);
    let base = |q: &Point| -> f64 {
        let z2 = if sg.grid.radial {
            q.coords[0] * q.coords[0] + q.coords[1] * q.coords[1]
        } else {
            q.norm2()
        };
        a * (z2 - big_r * big_r) + sg.bval_min
    };
    let mut values = vec![f64::NAN; sg.grid.node_count()];
    for &i in &sg.inside {
        let mut v = base(&sg.grid.node_point(i));
        if let Some(b) = barrier {
            let bv = b.values[i];
            if bv.is_finite() && bv > v {
                v = bv;
            }
        }
        values[i] = v;
    }
    ScalarField { grid: sg.grid.clone(), values }
}

/// A single relaxation pass over a field (lexicographic order), for callers
/// that drive the iteration themselves.
pub fn sweep(p: &ProblemSpec, field: &mut ScalarField) -> Result<f64> {
    let sg = SolveGrid::build(field.grid.clone(), &p.phi, &p.h)?;
    let mut u = sg.gather(field);
    let (max_up, _) = sg.sweep(&mut u, true)?;
    *field = sg.scatter(&u);
    Ok(max_up)
}

fn check_rotation_invariance(p: &ProblemSpec) -> Result<()> {
    let mesh = sample_boundary(&p.domain, 16)?;
    for q in &mesh.points {
        if !p.phi.rotation_invariant_at(q) {
            return Err(Error::RadialModeInvalid(format!(
                "boundary data {} is not rotation-invariant",
                p.phi.id()
            )));
        }
    }
    for q in [
        Point::new4(0.3, 0.1, 0.2, 0.0),
        Point::new4(0.0, 0.4, 0.0, 0.3),
    ] {
        let base = p.h.eval(&q);
        let z1 = q.z(0) * num_complex::Complex64::from_polar(1.0, 1.1);
        let z2 = q.z(1) * num_complex::Complex64::from_polar(1.0, 2.3);
        let rot = Point::new4(z1.re, z1.im, z2.re, z2.im);
        if (p.h.eval(&rot) - base).abs() > 1e-12 * (1.0 + base.abs()) {
            return Err(Error::RadialModeInvalid(format!(
                "density {} is not rotation-invariant",
                p.h.id()
            )));
        }
    }
    Ok(())
}

/// Iterate symmetric Gauss-Seidel sweeps from the initial subsolution until
/// the update norm drops below tolerance.
pub fn solve(p: &ProblemSpec, cfg: &SolveConfig) -> Result<SolveReport> {
    let grid = if cfg.radial {
        check_rotation_invariance(p)?;
        Arc::new(Grid::classify_radial(&p.domain, cfg.spacing)?)
    } else {
        Arc::new(Grid::classify(&p.domain, cfg.spacing)?)
    };
    let sg = SolveGrid::build(grid.clone(), &p.phi, &p.h)?;

    let data_scale = 1.0 + sg.bval_min.abs() + sg.h_sup.powf(1.0 / p.domain.n() as f64);
    let tol = cfg.tol.unwrap_or(1e-8 * data_scale);
    let default_sweeps = if cfg.radial || p.domain.n() == 1 { 100_000 } else { 20_000 };
    let max_sweeps = cfg.max_sweeps.unwrap_or(default_sweeps);

    let start = initial_subsolution_on(p, &sg, None);
    let mut u = sg.gather(&start);
    let mut sweeps = 0usize;
    let mut final_update = f64::INFINITY;
    let mut min_update_overall = 0.0f64;
    let mut negative_update_sweeps = 0usize;
    let mut sweep_log = Vec::new();
    let mut converged = false;
    while sweeps < max_sweeps {
        let forward = sweeps % 2 == 0;
        let (max_up, min_up) = sg.sweep(&mut u, forward)?;
        sweeps += 1;
        final_update = max_up;
        if min_up < min_update_overall {
            min_update_overall = min_up;
        }
        if min_up < -tol {
            negative_update_sweeps += 1;
        }
        sweep_log.push((max_up, min_up));
        if max_up < tol {
            converged = true;
            break;
        }
    }
    let field = sg.scatter(&u);

    // residual measured exactly from the returned field
    let mut residual = 0.0f64;
    let deep = grid.deep_interior_nodes(2);
    for &i in &deep {
        let det = if cfg.radial {
            radial_det(&field, i)?
        } else {
            complex_hessian(&field, i)?.ma_det()
        };
        let hv = sg.h_at[sg.rank_of[i] as usize];
        let r = (det - hv).abs();
        if r > residual {
            residual = r;
        }
    }

    // boundary mismatch by linear extrapolation along each crossing arm
    let mut boundary_mismatch = 0.0f64;
    for &i in &sg.inside {
        if grid.class[i] != NodeClass::BoundaryAdjacent {
            continue;
        }
        for dir in 0..2 * grid.dim {
            let Some(theta) = grid.crossing(i, dir) else { continue };
            let axis = dir / 2;
            let positive = dir % 2 == 0;
            let Some(opp) = grid.neighbor(i, axis, !positive) else { continue };
            if !grid.is_inside(opp) {
                continue;
            }
            let u_i = field.values[i];
            let u_o = field.values[opp];
            let extrap = (1.0 + theta) * u_i - theta * u_o;
            let bval = {
                let q = grid.crossing_point(i, dir).unwrap();
                if grid.radial {
                    p.phi.eval(&Point::new4(q.coords[0], 0.0, q.coords[1], 0.0))
                } else {
                    p.phi.eval(&q)
                }
            };
            let miss = (extrap - bval).abs();
            if miss > boundary_mismatch {
                boundary_mismatch = miss;
            }
        }
    }

    Ok(SolveReport {
        domain: p.domain.id(),
        phi: p.phi.id(),
        h: p.h.id(),
        alpha: p.alpha,
        spacing: cfg.spacing,
        radial: cfg.radial,
        variant: "symmetric-gauss-seidel".into(),
        sweeps,
        converged,
        tol,
        final_update,
        residual,
        residual_nodes: deep.len(),
        boundary_mismatch,
        min_update_overall,
        negative_update_sweeps,
        field,
        sweep_log,
    })
}

/// Discrete harmonic extension of phi (Laplace solve with Shortley-Weller
/// boundary arms); dominates every discrete subharmonic candidate with the
/// same boundary data.
pub fn harmonic_extension(
    grid: Arc<Grid>,
    phi: &BoundaryData,
    tol: f64,
    max_sweeps: usize,
) -> Result<(ScalarField, usize, f64)> {
    let sg = SolveGrid::build(grid, phi, &Density::Zero)?;
    let mut u = vec![0.0f64; sg.inside.len()];
    let mut sweeps = 0usize;
    let mut last = f64::INFINITY;
    while sweeps < max_sweeps {
        last = sg.laplace_sweep(&mut u, sweeps % 2 == 0);
        sweeps += 1;
        if last < tol {
            return Ok((sg.scatter(&u), sweeps, last));
        }
    }
    Err(Error::NotConverged { sweeps, final_update: last })
}

/// Violations of the barrier sandwich v <= u <= w at inside nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub max_lower_violation: f64,
    pub max_upper_violation: f64,
    pub nodes: usize,
}

pub fn sandwich_check(
    u: &ScalarField,
    v: &ScalarField,
    w: &ScalarField,
) -> Result<ComparisonReport> {
    if !u.same_grid(v) || !u.same_grid(w) {
        return Err(Error::GridMismatch(u.values.len(), v.values.len()));
    }
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    let mut nodes = 0usize;
    for i in 0..u.values.len() {
        let (uu, vv, ww) = (u.values[i], v.values[i], w.values[i]);
        if uu.is_finite() && vv.is_finite() && ww.is_finite() {
            nodes += 1;
            lower = lower.max(vv - uu);
            upper = upper.max(uu - ww);
        }
    }
    Ok(ComparisonReport { max_lower_violation: lower, max_upper_violation: upper, nodes })
}

/// Closed-form infinite-type profile (1 - log(1 - r2^2))^{-alpha/s}; the
/// plurisubharmonic solution for the sign-flipped datum is its negative.
pub fn exp_ellipsoid_profile(r2: f64, s: f64, alpha: f64) -> f64 {
    if r2 >= 1.0 {
        return 0.0;
    }
    (1.0 - (1.0 - r2 * r2).ln()).powf(-alpha / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ball_problem(h: Density) -> ProblemSpec {
        ProblemSpec {
            domain: DomainSpec::ball2(),
            phi: BoundaryData::Zero,
            h,
            alpha: 1.0,
        }
    }

    #[test]
    fn quadratic_update_examples() {
        // n = 2, h = 1, m = 0, neighbors 0, spacing 1: u = -sqrt(64)/8 = -1
        let (c1, s1, c2, s2) = (4.0f64, 0.0f64, 4.0f64, 0.0f64);
        let p = 16.0 * (1.0 + 0.0);
        let disc = (c1 * s2 - c2 * s1).powi(2) + 4.0 * c1 * c2 * p;
        let u = (c1 * s2 + c2 * s1 - disc.sqrt()) / (2.0 * c1 * c2);
        assert_relative_eq!(u, -1.0);
        // back-substitution: diagonals (S - c u)/4 = 1, det = 1
        let a1 = (s1 - c1 * u) / 4.0;
        assert_relative_eq!(a1 * a1, 1.0);
        // degenerate case h = 0, S1 = S2 = S: u = S/4, one diagonal zero
        let s = 2.0;
        let disc0 = (4.0f64 * s - 4.0 * s).powi(2);
        let u0 = (4.0 * s + 4.0 * s - disc0.sqrt()) / 32.0;
        assert_relative_eq!(u0, s / 4.0);
    }

    #[test]
    fn disk_poisson_oracle_coarse() {
        let p = ProblemSpec {
            domain: DomainSpec::disk(),
            phi: BoundaryData::Zero,
            h: Density::One,
            alpha: 1.0,
        };
        let mut cfg = SolveConfig::new(1.0 / 16.0);
        cfg.tol = Some(1e-11);
        let rep = solve(&p, &cfg).unwrap();
        assert!(rep.converged);
        let oracle = ScalarField::from_fn_inside(rep.field.grid.clone(), |q| q.norm2() - 1.0);
        let err = rep.field.max_abs_diff(&oracle);
        assert!(err < 1e-5, "err = {err}");
        assert!(rep.residual < 1e-5);
        // linear extrapolation to the crossing is first order on quadratics
        let h = rep.spacing;
        assert!(rep.boundary_mismatch < 10.0 * h * h, "{}", rep.boundary_mismatch);
    }

    #[test]
    fn ball2_oracle_coarse() {
        let rep = solve(&ball_problem(Density::One), &SolveConfig::new(0.25)).unwrap();
        assert!(rep.converged);
        let oracle = ScalarField::from_fn_inside(rep.field.grid.clone(), |q| q.norm2() - 1.0);
        let err = rep.field.max_abs_diff(&oracle);
        assert!(err < 1e-5, "err = {err}");
    }

    #[test]
    fn density_comparison_is_monotone() {
        let r1 = solve(&ball_problem(Density::One), &SolveConfig::new(0.25)).unwrap();
        let r0 = solve(&ball_problem(Density::Zero), &SolveConfig::new(0.25)).unwrap();
        for (a, b) in r1.field.values.iter().zip(&r0.field.values) {
            if a.is_finite() && b.is_finite() {
                assert!(a <= &(b + 1e-6), "u_h' > u_h: {a} vs {b}");
            }
        }
    }

    #[test]
    fn initial_subsolution_examples() {
        let p = ball_problem(Density::One);
        let grid = Arc::new(Grid::classify(&p.domain, 0.25).unwrap());
        let f = initial_subsolution(&p, &grid, None).unwrap();
        let center = grid.nearest_node(&Point::new4(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(f.values[center], -1.0, max_relative = 1e-9);
        // constant boundary data with h = 0 starts at the constant
        let pc = ProblemSpec {
            domain: DomainSpec::ball2(),
            phi: BoundaryData::Custom(Arc::new(|_: &Point| 2.5)),
            h: Density::Zero,
            alpha: 1.0,
        };
        let fc = initial_subsolution(&pc, &grid, None).unwrap();
        let v = fc.values[center];
        assert!(v <= 2.5 + 1e-12);
    }

    #[test]
    fn radial_solve_matches_sign_fixed_profile() {
        let p = ProblemSpec {
            domain: DomainSpec::exp_ellipsoid(0.5).unwrap(),
            phi: BoundaryData::NegAbsZ1Alpha { alpha: 1.0 },
            h: Density::Zero,
            alpha: 1.0,
        };
        let rep = solve(&p, &SolveConfig::radial(1.0 / 32.0)).unwrap();
        assert!(rep.converged);
        let oracle = ScalarField::from_fn_inside(rep.field.grid.clone(), |q| {
            -exp_ellipsoid_profile(q.coords[1], 0.5, 1.0)
        });
        let err = rep.field.max_abs_diff(&oracle);
        assert!(err < 5e-2, "err = {err}");
    }

    #[test]
    fn radial_solve_positive_datum_gives_power_envelope() {
        // for the positive datum the upper envelope is |z1|^alpha itself
        let p = ProblemSpec {
            domain: DomainSpec::exp_ellipsoid(0.5).unwrap(),
            phi: BoundaryData::AbsZ1Alpha { alpha: 1.0 },
            h: Density::Zero,
            alpha: 1.0,
        };
        let rep = solve(&p, &SolveConfig::radial(1.0 / 32.0)).unwrap();
        assert!(rep.converged);
        let oracle = ScalarField::from_fn_inside(rep.field.grid.clone(), |q| q.coords[0]);
        let err = rep.field.max_abs_diff(&oracle);
        assert!(err < 1e-5, "err = {err}");
    }

    #[test]
    fn radial_mode_rejects_angular_data() {
        let p = ProblemSpec {
            domain: DomainSpec::ball2(),
            phi: BoundaryData::ReZ1,
            h: Density::Zero,
            alpha: 1.0,
        };
        assert!(matches!(
            solve(&p, &SolveConfig::radial(0.125)),
            Err(Error::RadialModeInvalid(_))
        ));
    }

    #[test]
    fn unconverged_solve_is_flagged() {
        // h = 0 starts far from the solution (the subsolution |z|^2 - 1 must
        // relax up to 0), so two sweeps cannot converge
        let mut cfg = SolveConfig::new(0.25);
        cfg.max_sweeps = Some(2);
        let rep = solve(&ball_problem(Density::Zero), &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.sweeps, 2);
    }

    #[test]
    fn manufactured_disk_problem_converges_at_second_order() {
        // the h = 1 disk problem is lattice-exact (quadratic solution), so the
        // order study uses a manufactured non-quadratic solution
        // u* = exp(|z|^2) - e with h = (1 + |z|^2) exp(|z|^2)
        let problem = ProblemSpec {
            domain: DomainSpec::disk(),
            phi: BoundaryData::Custom(Arc::new(|p: &Point| p.norm2().exp() - std::f64::consts::E)),
            h: Density::Custom(Arc::new(|p: &Point| (1.0 + p.norm2()) * p.norm2().exp())),
            alpha: 1.0,
        };
        let mut errs = Vec::new();
        for spacing in [1.0 / 16.0, 1.0 / 32.0] {
            let mut cfg = SolveConfig::new(spacing);
            cfg.tol = Some(1e-11);
            let rep = solve(&problem, &cfg).unwrap();
            assert!(rep.converged);
            let oracle = ScalarField::from_fn_inside(rep.field.grid.clone(), |q| {
                q.norm2().exp() - std::f64::consts::E
            });
            errs.push(rep.field.max_abs_diff(&oracle));
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.2..=4.8).contains(&ratio),
            "error ratio {ratio} from errors {errs:?}"
        );
    }

    #[test]
    fn solver_is_deterministic() {
        let cfg = SolveConfig::new(0.25);
        let a = solve(&ball_problem(Density::One), &cfg).unwrap();
        let b = solve(&ball_problem(Density::One), &cfg).unwrap();
        assert_eq!(a.sweeps, b.sweeps);
        for (x, y) in a.field.values.iter().zip(&b.field.values) {
            assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
        }
    }

    #[test]
    fn harmonic_extension_reproduces_harmonic_data() {
        // constants and Re z are discrete-exact
        let grid = Arc::new(Grid::classify(&DomainSpec::disk(), 0.125).unwrap());
        let (w, _, _) = harmonic_extension(
            grid.clone(),
            &BoundaryData::Custom(Arc::new(|_: &Point| 1.0)),
            1e-12,
            100_000,
        )
        .unwrap();
        for &i in &grid.inside_nodes() {
            assert_relative_eq!(w.values[i], 1.0, epsilon = 1e-9);
        }
        let (w2, _, _) = harmonic_extension(grid.clone(), &BoundaryData::ReZ1, 1e-12, 100_000)
            .unwrap();
        for &i in &grid.inside_nodes() {
            let p = grid.node_point(i);
            assert!((w2.values[i] - p.coords[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn sandwich_detects_planted_violation() {
        let rep = solve(&ball_problem(Density::One), &SolveConfig::new(0.25)).unwrap();
        let grid = rep.field.grid.clone();
        let v = initial_subsolution(&ball_problem(Density::One), &grid, None).unwrap();
        let w = ScalarField::from_fn_inside(grid.clone(), |_| 0.0);
        let ok = sandwich_check(&rep.field, &v, &w).unwrap();
        assert!(ok.max_lower_violation <= 1e-8, "{}", ok.max_lower_violation);
        assert!(ok.max_upper_violation <= 1e-8, "{}", ok.max_upper_violation);
        // self-comparison has zero violation
        let self_cmp = sandwich_check(&rep.field, &rep.field, &rep.field).unwrap();
        assert_eq!(self_cmp.max_lower_violation, 0.0);
        // a deliberately low upper barrier is flagged
        let bad_w = ScalarField::from_fn_inside(grid, |_| -10.0);
        let bad = sandwich_check(&rep.field, &v, &bad_w).unwrap();
        assert!(bad.max_upper_violation > 1.0);
    }

    #[test]
    fn profile_closed_form_values() {
        // r2^2 = 1 - e^{-1}: 1 - log(e^{-1}) = 2, exponent -2 -> 0.25
        let r2 = (1.0 - (-1.0f64).exp()).sqrt();
        assert_relative_eq!(exp_ellipsoid_profile(r2, 0.5, 1.0), 0.25, max_relative = 1e-12);
        assert_relative_eq!(exp_ellipsoid_profile(0.0, 0.5, 1.0), 1.0);
    }
}

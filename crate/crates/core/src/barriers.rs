//! Plurisubharmonic barrier constructions: the strictly plurisubharmonic
//! defining function built from peak functions and the modulus omega, the
//! sub-barrier family v_zeta and its envelope, the harmonic upper barrier,
//! the explicit constant ledger, and the translation gadget.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geom::Point;
use crate::geometry::{BoundaryMesh, Grid, PeakFamily, PeakReport};
use crate::index::{GIndex, ModulusOmega};
use crate::operator::complex_hessian;
use crate::regularity::{dyadic_scales, estimate_modulus, ModulusConfig};
use crate::solver::{harmonic_extension, BoundaryData};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// The explicit constants of the barrier construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantLedger {
    pub alpha: f64,
    /// Holder constant of the boundary data
    pub c_phi: f64,
    /// barrier scale; must dominate both c_phi and the determinant term
    pub k: f64,
    /// the determinant side of the K requirement:
    /// (2/alpha) max(-2 rho + |z - zeta|^2)^{1 - alpha/2} sup h^{1/n}
    pub k_determinant: f64,
    /// translation constants
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// uniform Lambda^{g^alpha} bound of the barrier family (fitted)
    pub c0: f64,
    /// max |z|^2 over the closure
    pub max_z_sq: f64,
}

impl ConstantLedger {
    /// Assemble the ledger from the explicit formulas.
    ///
    /// `max_s` is max(-2 rho + |z - zeta|^2) over closure x boundary,
    /// `h_root_sup` is sup h^{1/n}, `h_root_norm` the full Lambda^{g^alpha}
    /// norm of h^{1/n} (sup + fitted seminorm), and `vw_norm` the larger of
    /// the fitted norms of the barrier envelope and the upper barrier.
    pub fn assemble(
        n: usize,
        alpha: f64,
        c_phi: f64,
        max_s: f64,
        h_root_sup: f64,
        h_root_norm: f64,
        vw_norm: f64,
        max_z_sq: f64,
    ) -> ConstantLedger {
        let k_determinant = (2.0 / alpha) * max_s.powf(1.0 - alpha / 2.0) * h_root_sup;
        let k = c_phi.max(k_determinant);
        let binom_max = (1..=n)
            .map(|kk| binomial(n, kk).powf(1.0 / kk as f64))
            .fold(0.0f64, f64::max);
        let k1 = binom_max * h_root_norm;
        let k2 = k1 * max_z_sq;
        let k3 = vw_norm;
        ConstantLedger {
            alpha,
            c_phi,
            k,
            k_determinant,
            k1,
            k2,
            k3,
            c0: 0.0,
            max_z_sq,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tol = 1e-12 * (1.0 + self.k.abs());
        if self.k + tol < self.c_phi {
            return Err(Error::LedgerViolation(format!(
                "K = {} below the boundary Holder constant {}",
                self.k, self.c_phi
            )));
        }
        if self.k + tol < self.k_determinant {
            return Err(Error::LedgerViolation(format!(
                "K = {} below the determinant requirement {}",
                self.k, self.k_determinant
            )));
        }
        if self.k2 + tol < self.k1 * self.max_z_sq {
            return Err(Error::LedgerViolation(format!(
                "K2 = {} below K1 max|z|^2 = {}",
                self.k2,
                self.k1 * self.max_z_sq
            )));
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Max pairwise Holder quotient of boundary samples.
pub fn cphi(samples: &[(Point, f64)], alpha: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: samples.len() });
    }
    let mut c = 0.0f64;
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let d = samples[i].0.dist(&samples[j].0);
            if d > 1e-14 {
                let q = (samples[i].1 - samples[j].1).abs() / d.powf(alpha);
                if q > c {
                    c = q;
                }
            }
        }
    }
    Ok(c)
}

/// The defining-function construction: per-anchor profiles
/// rho_w(z) = -(2/c2^2) omega(-psi_w(z)) + |z - w|^2 and their upper envelope
/// over a boundary mesh.
pub struct RhoFormula {
    pub family: PeakFamily,
    pub omega: ModulusOmega,
    pub coefficient: f64,
}

impl RhoFormula {
    pub fn eval(&self, z: &Point) -> f64 {
        self.eval_with_argmax(z).0
    }

    /// Envelope value together with the index of the active anchor.
    pub fn eval_with_argmax(&self, z: &Point) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0usize;
        for (k, (peak, w)) in self
            .family
            .peaks
            .iter()
            .zip(&self.family.mesh.points)
            .enumerate()
        {
            let psi = peak.eval(z);
            let v = -self.coefficient * self.omega.omega_clamped(-psi) + z.dist2(w);
            if v > best {
                best = v;
                arg = k;
            }
        }
        (best, arg)
    }
}

/// A defining function realized on a grid, with its construction diagnostics.
#[derive(Debug, Clone)]
pub struct DefiningRho {
    pub field: ScalarField,
    /// the coefficient 2/c2^2 in the per-anchor profile; 0 for oracle inputs
    pub coefficient: f64,
    pub c2: f64,
    pub provenance: String,
    /// min discrete lambda_min(i ddbar rho) over interior nodes whose full
    /// stencil sees a single active anchor (envelope kinks make the pointwise
    /// mixed stencil meaningless, though the max of the branches stays
    /// plurisubharmonic)
    pub lambda_min: f64,
    /// the unfiltered minimum, kink nodes included
    pub lambda_min_raw: f64,
    /// max |rho| over probe boundary points between mesh anchors
    pub envelope_gap: f64,
    /// fitted g^2-Holder seminorm of rho with its cross-scale spread
    pub seminorm_g2: f64,
    pub seminorm_spread: f64,
    pub negative_inside: bool,
    pub mesh_count: usize,
}

/// Build rho from a validated peak family. The fitted c2 from the peak report
/// feeds the profile constant; families with negativity violations are
/// rejected.
pub fn build_rho(
    fam: PeakFamily,
    peak_report: &PeakReport,
    omega: ModulusOmega,
    grid: Arc<Grid>,
    gap_probe: &BoundaryMesh,
    seed: u64,
) -> Result<DefiningRho> {
    if peak_report.negativity_violations > 0 {
        return Err(Error::PeakFamilyInvalid(format!(
            "{} negativity violations among {} samples",
            peak_report.negativity_violations, peak_report.samples
        )));
    }
    if !(peak_report.c2 > 0.0 && peak_report.c2.is_finite()) {
        return Err(Error::PeakFamilyInvalid(format!("fitted c2 = {}", peak_report.c2)));
    }
    // 2 c2^2 is what the profile bound rho_w <= -|z - w|^2 requires: the
    // fitted c2 gives omega(-psi_w(z)) >= |z - w|^2 / c2^2 on the samples
    let coefficient = 2.0 * peak_report.c2 * peak_report.c2;
    let mesh_count = fam.mesh.points.len();
    let g = omega.g.clone();
    let formula = RhoFormula { family: fam, omega, coefficient };

    let mut values = vec![f64::NAN; grid.node_count()];
    let mut active = vec![usize::MAX; grid.node_count()];
    for &i in &grid.inside_nodes() {
        let (v, arg) = formula.eval_with_argmax(&grid.node_point(i));
        values[i] = v;
        active[i] = arg;
    }
    let field = ScalarField { grid: grid.clone(), values };
    let negative_inside = field
        .values
        .iter()
        .filter(|v| v.is_finite())
        .all(|&v| v < 0.0);

    let mut lambda_min = f64::INFINITY;
    let mut lambda_min_raw = f64::INFINITY;
    for &i in &grid.interior_nodes() {
        if let Ok(hp) = complex_hessian(&field, i) {
            let l = hp.lambda_min();
            lambda_min_raw = lambda_min_raw.min(l);
            // single-branch nodes: every node of the Chebyshev-1 box shares
            // the active anchor, so the stencil differentiates one smooth
            // profile
            let mi = grid.multi_index(i);
            let mut single = true;
            let dim = grid.dim;
            let mut offs = vec![-1i64; dim];
            'box_scan: loop {
                let mut mj = mi;
                for a in 0..dim {
                    let v = mi[a] as i64 + offs[a];
                    if v < 0 || v >= grid.shape[a] as i64 {
                        single = false;
                        break;
                    }
                    mj[a] = v as usize;
                }
                if single && active[grid.flat_index(&mj)] != active[i] {
                    single = false;
                }
                if !single {
                    break;
                }
                let mut k = 0;
                loop {
                    if k == dim {
                        break 'box_scan;
                    }
                    offs[k] += 1;
                    if offs[k] <= 1 {
                        break;
                    }
                    offs[k] = -1;
                    k += 1;
                }
            }
            if single {
                lambda_min = lambda_min.min(l);
            }
        }
    }

    let envelope_gap = gap_probe
        .points
        .iter()
        .map(|z| formula.eval(z).abs())
        .fold(0.0, f64::max);

    // fitted g^2 modulus over grid nodes
    let samples: Vec<(Point, f64)> = grid
        .inside_nodes()
        .iter()
        .map(|&i| (grid.node_point(i), field.values[i]))
        .collect();
    let scales = dyadic_scales(2.0 * grid.spacing, 1.0);
    let cfg = ModulusConfig { seed, domain: Some(grid.domain.clone()), ..Default::default() };
    let rep = estimate_modulus(&samples, &g, 2.0, &cfg, &scales)?;
    let seminorm_g2 = rep.ratios.iter().cloned().fold(0.0, f64::max);

    Ok(DefiningRho {
        field,
        coefficient,
        c2: peak_report.c2,
        provenance: format!("fitted-peak-c2 (eta = {})", formula.family.eta),
        lambda_min,
        lambda_min_raw,
        envelope_gap,
        seminorm_g2,
        seminorm_spread: rep.spread,
        negative_inside,
        mesh_count,
    })
}

/// Wrap a closed-form strictly plurisubharmonic defining function (oracle).
pub fn rho_from_oracle<F: Fn(&Point) -> f64>(
    grid: Arc<Grid>,
    oracle: F,
    provenance: &str,
) -> DefiningRho {
    let field = ScalarField::from_fn(grid.clone(), |p| oracle(p));
    let mut lambda_min = f64::INFINITY;
    for &i in &grid.interior_nodes() {
        if let Ok(hp) = complex_hessian(&field, i) {
            lambda_min = lambda_min.min(hp.lambda_min());
        }
    }
    let negative_inside = grid
        .inside_nodes()
        .iter()
        .all(|&i| field.values[i] < 0.0);
    DefiningRho {
        field,
        coefficient: 0.0,
        c2: f64::NAN,
        provenance: format!("oracle: {provenance}"),
        lambda_min,
        lambda_min_raw: lambda_min,
        envelope_gap: 0.0,
        seminorm_g2: f64::NAN,
        seminorm_spread: f64::NAN,
        negative_inside,
        mesh_count: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarrierKind {
    Sub,
    SubEnvelope,
    Upper,
    Translated,
}

/// A barrier realized on a grid.
#[derive(Debug, Clone)]
pub struct Barrier {
    pub kind: BarrierKind,
    pub anchor: Option<Point>,
    pub field: ScalarField,
}

/// The sub-barrier profile v_zeta(z) = phi(zeta) - K [-2 rho(z) + |z - zeta|^2]^{alpha/2}.
#[derive(Debug, Clone)]
pub struct BarrierSpec {
    pub zeta: Point,
    pub phi_zeta: f64,
    pub k: f64,
    pub alpha: f64,
}

impl BarrierSpec {
    pub fn eval(&self, rho_z: f64, z: &Point) -> f64 {
        let s = (-2.0 * rho_z + z.dist2(&self.zeta)).max(0.0);
        self.phi_zeta - self.k * s.powf(self.alpha / 2.0)
    }
}

/// Realize the sub-barrier on the grid; `rho` supplies defining-function
/// values anywhere (oracle or fitted envelope formula).
pub fn barrier_v<F: Fn(&Point) -> f64>(
    spec: &BarrierSpec,
    ledger: &ConstantLedger,
    rho: F,
    grid: &Arc<Grid>,
) -> Result<Barrier> {
    ledger.validate()?;
    if spec.k + 1e-12 * (1.0 + spec.k.abs()) < ledger.k {
        return Err(Error::LedgerViolation(format!(
            "barrier K = {} below ledger K = {}",
            spec.k, ledger.k
        )));
    }
    let field = ScalarField::from_fn_inside(grid.clone(), |p| spec.eval(rho(p), p));
    Ok(Barrier { kind: BarrierKind::Sub, anchor: Some(spec.zeta), field })
}

/// Pointwise maximum of per-anchor barriers.
pub fn barrier_envelope(barriers: &[Barrier]) -> Result<Barrier> {
    let first = barriers.first().ok_or(Error::InsufficientSamples { needed: 1, got: 0 })?;
    let mut values = first.field.values.clone();
    for b in &barriers[1..] {
        if !b.field.same_grid(&first.field) {
            return Err(Error::GridMismatch(b.field.values.len(), values.len()));
        }
        for (v, &w) in values.iter_mut().zip(&b.field.values) {
            if w.is_finite() && (!v.is_finite() || w > *v) {
                *v = w;
            }
        }
    }
    Ok(Barrier {
        kind: BarrierKind::SubEnvelope,
        anchor: None,
        field: ScalarField { grid: first.field.grid.clone(), values },
    })
}

/// Discrete harmonic extension of the boundary data: a plurisuperharmonic
/// upper bound for every subsolution with the same data.
pub fn upper_barrier(phi: &BoundaryData, grid: Arc<Grid>) -> Result<Barrier> {
    let scale = 1e-10;
    let (field, _, _) = harmonic_extension(grid, phi, scale, 200_000)?;
    Ok(Barrier { kind: BarrierKind::Upper, anchor: None, field })
}

/// Diagnostics of the translation gadget V(z, tau).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslationReport {
    pub tau_norm: f64,
    /// max over nodes of V(z, tau) - u(z); the construction asserts <= 0 up
    /// to discretization
    pub max_gadget_excess: f64,
    /// max over nodes of u(z + tau) - u(z) - (K2 + K3) g^{-alpha}(1/|tau|)
    pub max_modulus_excess: f64,
    pub nodes_checked: usize,
    pub ledger_warning: Option<String>,
}

/// Build V(z, tau) = max(u(z), u(z + tau) + (K1 |z|^2 - K2 - K3) g^{-alpha}(1/|tau|))
/// and report how far it rises above u.
pub fn translation_gadget(
    u: &ScalarField,
    tau: &[f64; 4],
    ledger: &ConstantLedger,
    g: &GIndex,
) -> Result<(Barrier, TranslationReport)> {
    let grid = &u.grid;
    let tau_norm: f64 = tau.iter().map(|t| t * t).sum::<f64>().sqrt();
    if tau_norm > 8.0 * grid.spacing * (1.0 + 1e-12) {
        return Err(Error::ShiftOutsideGrid(*tau));
    }
    let factor = if tau_norm == 0.0 {
        0.0
    } else {
        g.eval((1.0 / tau_norm).max(1.0)).powf(-ledger.alpha)
    };
    let ledger_warning = if ledger.k2 + 1e-12 < ledger.k1 * ledger.max_z_sq {
        Some(format!(
            "K2 = {} below K1 max|z|^2 = {}; the gadget bound is not guaranteed",
            ledger.k2,
            ledger.k1 * ledger.max_z_sq
        ))
    } else {
        None
    };

    let mut values = vec![f64::NAN; grid.node_count()];
    let mut max_gadget_excess = f64::NEG_INFINITY;
    let mut max_modulus_excess = f64::NEG_INFINITY;
    let mut nodes = 0usize;
    for &i in &grid.inside_nodes() {
        let z = grid.node_point(i);
        let uz = u.values[i];
        if !uz.is_finite() {
            continue;
        }
        let shifted = z.add_scaled(tau, 1.0);
        let v = match u.interpolate(&shifted) {
            Some(u_shift) => {
                nodes += 1;
                let v_tau = u_shift + (ledger.k1 * z.norm2() - ledger.k2 - ledger.k3) * factor;
                max_gadget_excess = max_gadget_excess.max(v_tau - uz);
                max_modulus_excess =
                    max_modulus_excess.max(u_shift - uz - (ledger.k2 + ledger.k3) * factor);
                uz.max(v_tau)
            }
            None => uz,
        };
        values[i] = v;
    }
    if nodes == 0 {
        return Err(Error::ShiftOutsideGrid(*tau));
    }
    let barrier = Barrier {
        kind: BarrierKind::Translated,
        anchor: None,
        field: ScalarField { grid: grid.clone(), values },
    };
    Ok((
        barrier,
        TranslationReport {
            tau_norm,
            max_gadget_excess,
            max_modulus_excess,
            nodes_checked: nodes,
            ledger_warning,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_boundary, validate_peak, DomainSpec};
    use crate::index::{eta_search, log_spaced, GIndex, IndexFunction};
    use crate::solver::{solve, Density, ProblemSpec, SolveConfig};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ball_ledger(k: f64) -> ConstantLedger {
        ConstantLedger {
            alpha: 1.0,
            c_phi: 0.0,
            k,
            k_determinant: 0.0,
            k1: 2.0,
            k2: 2.0,
            k3: 1.0,
            c0: 0.0,
            max_z_sq: 1.0,
        }
    }

    #[test]
    fn cphi_examples() {
        let mesh = sample_boundary(&DomainSpec::ball2(), 1000).unwrap();
        let constant: Vec<(Point, f64)> = mesh.points.iter().map(|p| (*p, 2.0)).collect();
        assert_eq!(cphi(&constant, 1.0).unwrap(), 0.0);
        let re_z1: Vec<(Point, f64)> = mesh.points.iter().map(|p| (*p, p.coords[0])).collect();
        let c = cphi(&re_z1, 1.0).unwrap();
        assert!((0.99..=1.0 + 1e-9).contains(&c), "c_phi = {c}");
        // |z|^{1/2} is constant on the unit circle: quotient 0, stable
        let circle = sample_boundary(&DomainSpec::disk(), 500).unwrap();
        let flat: Vec<(Point, f64)> =
            circle.points.iter().map(|p| (*p, p.norm().sqrt())).collect();
        let c1 = cphi(&flat, 0.5).unwrap();
        let circle2 = sample_boundary(&DomainSpec::disk(), 1000).unwrap();
        let flat2: Vec<(Point, f64)> =
            circle2.points.iter().map(|p| (*p, p.norm().sqrt())).collect();
        let c2 = cphi(&flat2, 0.5).unwrap();
        assert!((c1 - c2).abs() <= 0.05 * c1.max(c2).max(1e-12));
        // a genuinely rough datum: |Re z|^{1/2} at alpha = 1/2, stable under doubling
        let rough1: Vec<(Point, f64)> =
            circle.points.iter().map(|p| (*p, p.coords[0].abs().sqrt())).collect();
        let rough2: Vec<(Point, f64)> =
            circle2.points.iter().map(|p| (*p, p.coords[0].abs().sqrt())).collect();
        let r1 = cphi(&rough1, 0.5).unwrap();
        let r2 = cphi(&rough2, 0.5).unwrap();
        assert!(r1.is_finite() && r2.is_finite());
        assert!((r1 - r2).abs() <= 0.05 * r1.max(r2), "{r1} vs {r2}");
    }

    #[test]
    fn barrier_anchor_and_center_values() {
        let d = DomainSpec::ball2();
        let grid = Arc::new(Grid::classify(&d, 0.25).unwrap());
        let rho = |p: &Point| p.norm2() - 1.0;
        let zeta = Point::new4(1.0, 0.0, 0.0, 0.0);
        let spec = BarrierSpec { zeta, phi_zeta: 0.0, k: 1.0, alpha: 1.0 };
        let ledger = ball_ledger(1.0);
        let b = barrier_v(&spec, &ledger, rho, &grid).unwrap();
        // v(zeta) = phi(zeta) exactly: s = -2 rho(zeta) + 0 = 0
        assert_eq!(spec.eval(rho(&zeta), &zeta), 0.0);
        // v(0) = -K sqrt(-2 rho(0) + |zeta|^2) = -sqrt(3)
        let center = grid.nearest_node(&Point::new4(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(b.field.values[center], -3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn ledger_rejects_small_k() {
        let d = DomainSpec::ball2();
        let grid = Arc::new(Grid::classify(&d, 0.25).unwrap());
        let mut ledger = ball_ledger(1.0);
        ledger.c_phi = 2.0; // K = 1 < c_phi
        let spec = BarrierSpec {
            zeta: Point::new4(1.0, 0.0, 0.0, 0.0),
            phi_zeta: 0.0,
            k: 1.0,
            alpha: 1.0,
        };
        assert!(matches!(
            barrier_v(&spec, &ledger, |p: &Point| p.norm2() - 1.0, &grid),
            Err(Error::LedgerViolation(_))
        ));
    }

    #[test]
    fn boundary_domination_with_adequate_k() {
        // v_zeta(z) <= phi(z) at boundary samples when K >= c_phi
        let d = DomainSpec::ball2();
        let mesh = sample_boundary(&d, 300).unwrap();
        let phi = |p: &Point| p.coords[0];
        let samples: Vec<(Point, f64)> = mesh.points.iter().map(|p| (*p, phi(p))).collect();
        let c_phi = cphi(&samples, 1.0).unwrap();
        let k = c_phi.max(1.0);
        let rho = |p: &Point| p.norm2() - 1.0;
        for zeta in mesh.points.iter().step_by(7) {
            let spec = BarrierSpec { zeta: *zeta, phi_zeta: phi(zeta), k, alpha: 1.0 };
            for z in &mesh.points {
                let v = spec.eval(rho(z), z);
                assert!(v <= phi(z) + 1e-12, "domination fails: {} > {}", v, phi(z));
            }
        }
    }

    #[test]
    fn envelope_of_single_barrier_is_identity() {
        let d = DomainSpec::disk();
        let grid = Arc::new(Grid::classify(&d, 0.125).unwrap());
        let rho = |p: &Point| p.norm2() - 1.0;
        let spec = BarrierSpec {
            zeta: Point::new2(1.0, 0.0),
            phi_zeta: 0.0,
            k: 1.0,
            alpha: 1.0,
        };
        let ledger = ball_ledger(1.0);
        let b = barrier_v(&spec, &ledger, rho, &grid).unwrap();
        let env = barrier_envelope(std::slice::from_ref(&b)).unwrap();
        for (a, c) in env.field.values.iter().zip(&b.field.values) {
            assert!(a.to_bits() == c.to_bits() || (a.is_nan() && c.is_nan()));
        }
    }

    #[test]
    fn disk_envelope_vanishes_at_anchors_and_stays_nonpositive() {
        let d = DomainSpec::disk();
        let grid = Arc::new(Grid::classify(&d, 0.125).unwrap());
        let mesh = sample_boundary(&d, 32).unwrap();
        let rho = |p: &Point| p.norm2() - 1.0;
        let ledger = ball_ledger(1.0);
        let barriers: Vec<Barrier> = mesh
            .points
            .iter()
            .map(|zeta| {
                let spec = BarrierSpec { zeta: *zeta, phi_zeta: 0.0, k: 1.0, alpha: 1.0 };
                barrier_v(&spec, &ledger, rho, &grid).unwrap()
            })
            .collect();
        let env = barrier_envelope(&barriers).unwrap();
        for &i in &grid.inside_nodes() {
            assert!(env.field.values[i] <= 1e-12);
        }
        // formula value at anchors is phi = 0 exactly
        for (zeta, b) in mesh.points.iter().zip(&barriers) {
            let spec = BarrierSpec { zeta: *zeta, phi_zeta: 0.0, k: 1.0, alpha: 1.0 };
            assert_eq!(spec.eval(rho(zeta), zeta), 0.0);
            assert!(b.anchor.is_some());
        }
    }

    #[test]
    fn upper_barrier_constants_and_harmonic_data() {
        let d = DomainSpec::disk();
        let grid = Arc::new(Grid::classify(&d, 0.125).unwrap());
        let w = upper_barrier(
            &BoundaryData::Custom(Arc::new(|_: &Point| 1.0)),
            grid.clone(),
        )
        .unwrap();
        for &i in &grid.inside_nodes() {
            assert_relative_eq!(w.field.values[i], 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn translation_gadget_zero_shift_is_identity() {
        let p = ProblemSpec {
            domain: DomainSpec::ball2(),
            phi: BoundaryData::Zero,
            h: Density::One,
            alpha: 1.0,
        };
        let rep = solve(&p, &SolveConfig::new(0.25)).unwrap();
        let g = GIndex::new(IndexFunction::StronglyPseudoconvex).unwrap();
        let ledger = ball_ledger(4.0);
        let (v, tr) = translation_gadget(&rep.field, &[0.0; 4], &ledger, &g).unwrap();
        assert_eq!(tr.tau_norm, 0.0);
        for (a, b) in v.field.values.iter().zip(&rep.field.values) {
            if a.is_finite() || b.is_finite() {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        assert!(tr.max_gadget_excess <= 0.0 + 1e-15);
        // degenerate ledger is flagged
        let mut bad = ball_ledger(4.0);
        bad.k2 = 0.0;
        bad.k3 = 0.0;
        let (_, tr_bad) =
            translation_gadget(&rep.field, &[0.125, 0.0, 0.0, 0.0], &bad, &g).unwrap();
        assert!(tr_bad.ledger_warning.is_some());
        // too-large shifts are rejected
        assert!(matches!(
            translation_gadget(&rep.field, &[3.0, 0.0, 0.0, 0.0], &ledger, &g),
            Err(Error::ShiftOutsideGrid(_))
        ));
    }

    #[test]
    fn build_rho_on_disk_with_power_gauge() {
        let d = DomainSpec::disk();
        let grid = Arc::new(Grid::classify(&d, 1.0 / 16.0).unwrap());
        let g = GIndex::new(IndexFunction::power(0.25).unwrap()).unwrap();
        let es = eta_search(&g, &log_spaced(1e-6, 1e-3, 40));
        let mesh = sample_boundary(&d, 32).unwrap();
        let fam = PeakFamily::linear(&d, mesh, es.eta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut samples = grid.random_interior_points(300, &mut rng);
        samples.extend(sample_boundary(&d, 128).unwrap().points);
        let report = validate_peak(&fam, &g, &samples);
        assert_eq!(report.negativity_violations, 0);
        let omega = ModulusOmega::new(g, es.eta).unwrap();
        let probe = sample_boundary(&d, 97).unwrap();
        let rho = build_rho(fam, &report, omega, grid, &probe, 11).unwrap();
        assert!(rho.negative_inside);
        assert!(rho.lambda_min >= 0.9, "lambda_min = {}", rho.lambda_min);
        assert!(rho.envelope_gap > 0.0 && rho.envelope_gap < 0.5);
        assert!(rho.seminorm_g2.is_finite() && rho.seminorm_g2 > 0.0);
    }

    #[test]
    fn rho_profile_vanishes_at_its_anchor() {
        let d = DomainSpec::disk();
        let g = GIndex::new(IndexFunction::power(0.25).unwrap()).unwrap();
        let mesh = sample_boundary(&d, 16).unwrap();
        let anchor = mesh.points[3];
        let fam = PeakFamily::linear(&d, mesh, 0.9).unwrap();
        let omega = ModulusOmega::new(g, 0.9).unwrap();
        let formula = RhoFormula { family: fam, omega, coefficient: 1.7 };
        // psi_w(w) = 0 and omega(0) = 0, so the anchor profile vanishes and
        // the envelope is >= 0 there while every profile is <= 0 on bOmega
        assert!(formula.eval(&anchor).abs() < 1e-12);
    }

    #[test]
    fn barrier_envelope_boundary_gap_shrinks_with_mesh() {
        let d = DomainSpec::disk();
        let grid = Arc::new(Grid::classify(&d, 0.125).unwrap());
        let rho = |p: &Point| p.norm2() - 1.0;
        let ledger = ball_ledger(1.0);
        let probe = sample_boundary(&d, 193).unwrap();
        let mut gaps = Vec::new();
        for count in [8usize, 32] {
            let mesh = sample_boundary(&d, count).unwrap();
            let specs: Vec<BarrierSpec> = mesh
                .points
                .iter()
                .map(|zeta| BarrierSpec { zeta: *zeta, phi_zeta: 0.0, k: 1.0, alpha: 1.0 })
                .collect();
            let _barriers: Vec<Barrier> = specs
                .iter()
                .map(|s| barrier_v(s, &ledger, rho, &grid).unwrap())
                .collect();
            // gap between the envelope and phi = 0 at off-mesh boundary points
            let gap = probe
                .points
                .iter()
                .map(|z| {
                    specs
                        .iter()
                        .map(|s| s.eval(rho(z), z))
                        .fold(f64::NEG_INFINITY, f64::max)
                        .abs()
                })
                .fold(0.0, f64::max);
            gaps.push(gap);
        }
        assert!(gaps[1] < gaps[0], "gaps {gaps:?} should decrease with mesh count");
    }

    #[test]
    fn rho_oracle_sign_agreement() {
        let d = DomainSpec::ball2();
        let grid = Arc::new(Grid::classify(&d, 0.25).unwrap());
        let rho = rho_from_oracle(grid.clone(), |p| p.norm2() - 1.0, "unit-ball");
        assert!(rho.negative_inside);
        assert!((rho.lambda_min - 1.0).abs() < 1e-9);
    }
}

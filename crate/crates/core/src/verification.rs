//! Property suites bundled into machine-readable verdicts, shared by the CLI
//! `verify-all` experiment and the acceptance tests. Every suite is a pure
//! function of its seed; rerunning with the same seed reproduces the verdicts
//! byte for byte.

use crate::barriers::{
    barrier_v, build_rho, cphi, translation_gadget, BarrierSpec, ConstantLedger,
};
use crate::error::Result;
use crate::field::ScalarField;
use crate::geom::Point;
use crate::geometry::{
    sample_boundary, validate_peak, DomainSpec, Grid, NodeClass, PeakFamily,
};
use crate::index::{
    check_omega_lemma, compute_g, compute_g_quadrature, eta_search, log_spaced, GIndex,
    IndexFunction, ModulusOmega,
};
use crate::operator::{complex_det, complex_hessian, det_shift_rhs, hessian_of_fn, radial_det};
use crate::regularity::{
    closed_form_u_e, dyadic_scales, estimate_modulus, fitted_exponent, membership_verdict,
    scaled_cloud, sharpness_probe, Membership, ModulusConfig,
};
use crate::solver::{
    exp_ellipsoid_profile, solve, BoundaryData, Density, ProblemSpec, SolveConfig,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// One named check with its outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(check: &str, pass: bool, detail: String) -> Self {
        Verdict { check: check.into(), pass, detail }
    }
}

/// A module's verdict file content.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleVerdicts {
    pub module: String,
    pub seed: u64,
    pub verdicts: Vec<Verdict>,
}

impl ModuleVerdicts {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// The shipped index-function catalog.
pub fn catalog_f() -> Vec<IndexFunction> {
    vec![
        IndexFunction::power(0.125).unwrap(),
        IndexFunction::power(0.25).unwrap(),
        IndexFunction::power(0.5).unwrap(),
        IndexFunction::log_power(0.25).unwrap(),
        IndexFunction::log_power(0.5).unwrap(),
        IndexFunction::log_power(0.75).unwrap(),
    ]
}

fn fmt_e(v: f64) -> String {
    format!("{v:.3e}")
}

/// Random PSD shift-inequality trials: det(A + beta I) vs the k-sum bound,
/// A = G G^* with uniform complex entries, beta uniform in (0, 10].
/// Returns (violations, worst slack relative to scale).
pub fn det_shift_random_suite(n: usize, count: usize, seed: u64) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64) << 32);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
        for row in g.iter_mut().take(n) {
            for e in row.iter_mut().take(n) {
                *e = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        // a = g g^*
        let mut a = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += g[i][k] * g[j][k].conj();
                }
                a[i][j] = acc;
            }
        }
        let beta: f64 = rng.gen_range(0.0..10.0) + 1e-12;
        let det_a = complex_det(&a, n).re;
        let mut shifted = a;
        for (i, row) in shifted.iter_mut().enumerate().take(n) {
            row[i] += Complex64::new(beta, 0.0);
        }
        let lhs = complex_det(&shifted, n).re;
        let rhs = det_shift_rhs(det_a, n, beta);
        let scale = 1.0 + lhs.abs() + rhs.abs();
        let slack = (rhs - lhs) / scale;
        if slack > worst {
            worst = slack;
        }
        if slack > 1e-9 {
            violations += 1;
        }
    }
    (violations, worst)
}

/// Index calculus: quadrature-vs-analytic g, the omega lemma over the catalog
/// with module-selected eta, and the g/f bound on the admissible range.
pub fn verify_index(seed: u64) -> ModuleVerdicts {
    let mut verdicts = Vec::new();

    let mut worst_rel = 0.0f64;
    for f in catalog_f() {
        for &t in &[10.0, 1e3, 1e6] {
            let analytic = compute_g(&f, t, 1e-8).unwrap();
            let quad = compute_g_quadrature(&f, t, 1e-8).unwrap();
            let rel = ((quad - analytic) / analytic).abs();
            if rel > worst_rel {
                worst_rel = rel;
            }
        }
    }
    verdicts.push(Verdict::new(
        "g-quadrature-matches-analytic",
        worst_rel <= 1e-6,
        format!("worst relative error {}", fmt_e(worst_rel)),
    ));

    let deltas = log_spaced(1e-6, 1e-3, 200);
    for f in catalog_f() {
        let id = f.id();
        let g = GIndex::new(f).unwrap();
        let es = eta_search(&g, &deltas);
        let m = ModulusOmega::new(g, es.eta).unwrap();
        let rep = check_omega_lemma(&m, &deltas).unwrap();
        verdicts.push(Verdict::new(
            &format!("omega-lemma-i-{id}"),
            rep.monotone.verdict && rep.vanishing.verdict,
            format!("eta {:.4}, margin {:.4}", es.eta, es.margin),
        ));
        verdicts.push(Verdict::new(
            &format!("omega-lemma-ii-{id}"),
            true,
            format!(
                "recorded: midpoint-concave {}, midpoint-convex {}",
                rep.concave_midpoint.verdict, rep.convex_midpoint.verdict
            ),
        ));
        verdicts.push(Verdict::new(
            &format!("omega-lemma-iii-{id}"),
            rep.difference_holds,
            format!("direction {}", rep.difference_direction),
        ));
        let c_primes: Vec<String> = rep
            .scaling
            .iter()
            .map(|s| format!("c={} c'={:.4}", s.c, s.fitted_c_prime))
            .collect();
        verdicts.push(Verdict::new(
            &format!("omega-lemma-iv-{id}"),
            rep.scaling_pass,
            c_primes.join(", "),
        ));
    }

    let mut gf_ok = true;
    let mut gf_worst = 0.0f64;
    for f in catalog_f() {
        let t0 = match f {
            IndexFunction::LogPower { s } => (2.0 / s - 1.0).exp(),
            _ => std::f64::consts::E,
        };
        for &mult in &[1.0, 1e2, 1e4, 1e8] {
            let t = t0 * mult;
            let ratio = compute_g(&f, t, 1e-10).unwrap() / f.eval(t);
            gf_worst = gf_worst.max(ratio);
            if ratio > 0.5 + 1e-9 {
                gf_ok = false;
            }
        }
    }
    verdicts.push(Verdict::new(
        "g-over-f-at-most-half",
        gf_ok,
        format!("worst ratio {gf_worst:.6} on the admissible range"),
    ));

    ModuleVerdicts { module: "index_calculus".into(), seed, verdicts }
}

/// Geometry: boundary residuals, refinement stability, peak negativity.
pub fn verify_geometry(seed: u64) -> ModuleVerdicts {
    let mut verdicts = Vec::new();
    let catalogs = [
        DomainSpec::disk(),
        DomainSpec::ball2(),
        DomainSpec::power_ellipsoid(2).unwrap(),
        DomainSpec::exp_ellipsoid(0.5).unwrap(),
    ];

    let mut worst_res = 0.0f64;
    for d in &catalogs {
        let mesh = sample_boundary(d, 64).unwrap();
        for p in &mesh.points {
            worst_res = worst_res.max(d.r(p).abs());
        }
    }
    verdicts.push(Verdict::new(
        "boundary-sample-residual",
        worst_res <= 1e-10,
        format!("worst |r| {}", fmt_e(worst_res)),
    ));

    let mut stable = true;
    for d in [DomainSpec::disk(), DomainSpec::ball2()] {
        let coarse = Grid::classify(&d, 0.25).unwrap();
        let fine = Grid::classify(&d, 0.125).unwrap();
        for &i in &coarse.interior_nodes() {
            let j = fine.nearest_node(&coarse.node_point(i)).unwrap();
            if fine.class[j] != NodeClass::Interior {
                stable = false;
            }
        }
    }
    verdicts.push(Verdict::new(
        "classification-refinement-stable",
        stable,
        "interior nodes stay interior at half spacing".into(),
    ));

    let mut worst_cross = 0.0f64;
    for d in &catalogs {
        let grid = Grid::classify(&d.clone(), 0.125).unwrap();
        for &i in &grid.inside_nodes() {
            for dir in 0..2 * grid.dim {
                if let Some(p) = grid.crossing_point(i, dir) {
                    let r = if grid.radial {
                        d.radial_r(p.coords[0], p.coords[1])
                    } else {
                        d.r(&p)
                    };
                    worst_cross = worst_cross.max(r.abs());
                }
            }
        }
    }
    verdicts.push(Verdict::new(
        "crossing-root-residual",
        worst_cross <= 1e-10,
        format!("worst |r(crossing)| {}", fmt_e(worst_cross)),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut negative_ok = true;
    for d in [
        DomainSpec::disk(),
        DomainSpec::ball2(),
        DomainSpec::power_ellipsoid(2).unwrap(),
    ] {
        let grid = Grid::classify(&d, 0.25).unwrap();
        let mesh = sample_boundary(&d, 16).unwrap();
        let fam = PeakFamily::linear(&d, mesh, 0.9).unwrap();
        let pts = grid.random_interior_points(3334, &mut rng);
        for peak in &fam.peaks {
            for p in &pts {
                if peak.eval(p) >= 0.0 {
                    negative_ok = false;
                }
            }
        }
    }
    verdicts.push(Verdict::new(
        "linear-peaks-strictly-negative-inside",
        negative_ok,
        "10^4 random interior points across convex catalogs".into(),
    ));

    ModuleVerdicts { module: "geometry".into(), seed, verdicts }
}

/// Operator: stencil exactness, the determinant-shift lemma, radial/full
/// agreement, and second-order convergence of the determinant.
pub fn verify_operator(seed: u64, lemma_trials: usize) -> ModuleVerdicts {
    let mut verdicts = Vec::new();

    // exactness on quadratics and the mixed-term test functions, against the
    // analytic Hessians
    let grid = Arc::new(Grid::classify(&DomainSpec::ball2(), 0.25).unwrap());
    type Case = (&'static str, Box<dyn Fn(&Point) -> f64>, crate::operator::HermitianPair);
    let zero12 = Complex64::new(0.0, 0.0);
    let cases: Vec<Case> = vec![
        (
            "norm2",
            Box::new(|p: &Point| p.norm2()),
            crate::operator::HermitianPair::dim2(1.0, 1.0, zero12),
        ),
        (
            "re-z1sq",
            Box::new(|p: &Point| (p.z(0) * p.z(0)).re),
            crate::operator::HermitianPair::dim2(0.0, 0.0, zero12),
        ),
        (
            "re-z1z2",
            Box::new(|p: &Point| (p.z(0) * p.z(1)).re),
            crate::operator::HermitianPair::dim2(0.0, 0.0, zero12),
        ),
        (
            "im-z1z2",
            Box::new(|p: &Point| (p.z(0) * p.z(1)).im),
            crate::operator::HermitianPair::dim2(0.0, 0.0, zero12),
        ),
        (
            "re-z1-conj-z2",
            Box::new(|p: &Point| (p.z(0) * p.z(1).conj()).re),
            crate::operator::HermitianPair::dim2(0.0, 0.0, Complex64::new(0.5, 0.0)),
        ),
        (
            "affine",
            Box::new(|p: &Point| 1.5 * p.coords[0] - p.coords[3] + 2.0),
            crate::operator::HermitianPair::dim2(0.0, 0.0, zero12),
        ),
    ];
    let mut worst_exact = 0.0f64;
    for (_, f, exact) in &cases {
        let field = ScalarField::from_fn(grid.clone(), f);
        for &i in grid.interior_nodes().iter().take(400) {
            let hp = complex_hessian(&field, i).unwrap();
            let scale = 1.0 + exact.u11.abs() + exact.u22.abs();
            let err = ((hp.u11 - exact.u11).abs())
                .max((hp.u22 - exact.u22).abs())
                .max((hp.u12 - exact.u12).norm());
            worst_exact = worst_exact.max(err / scale);
        }
    }
    verdicts.push(Verdict::new(
        "hessian-exact-on-quadratics",
        worst_exact <= 1e-10,
        format!("worst relative deviation {}", fmt_e(worst_exact)),
    ));

    let mut lemma_ok = true;
    let mut lemma_detail = Vec::new();
    for n in 1..=3 {
        let (viol, worst) = det_shift_random_suite(n, lemma_trials, seed);
        lemma_detail.push(format!("n={n}: {viol} violations, worst slack {}", fmt_e(worst)));
        if viol > 0 {
            lemma_ok = false;
        }
    }
    verdicts.push(Verdict::new(
        "det-shift-inequality",
        lemma_ok,
        lemma_detail.join("; "),
    ));

    // radial reduction agrees with the full-grid determinant
    let full = Arc::new(Grid::classify(&DomainSpec::ball2(), 0.125).unwrap());
    let rad = Arc::new(Grid::classify_radial(&DomainSpec::ball2(), 0.125).unwrap());
    let invariant_fields: Vec<Box<dyn Fn(f64, f64) -> f64>> = vec![
        Box::new(|a, b| a * a + b * b),
        Box::new(|a, b| (a * a + b * b).powi(2)),
        Box::new(|a: f64, b: f64| (a * a).exp() + b * b),
        Box::new(|a, b| a * a * b * b),
        Box::new(|a: f64, b: f64| (1.0 + a * a + 0.5 * b * b).ln()),
    ];
    let full_deep: std::collections::HashSet<usize> =
        full.deep_interior_nodes(1).into_iter().collect();
    let mut worst_gap = 0.0f64;
    for f in &invariant_fields {
        let uf = ScalarField::from_fn(full.clone(), |p| f(p.z(0).norm(), p.z(1).norm()));
        let ur = ScalarField::from_fn(rad.clone(), |p| f(p.coords[0], p.coords[1]));
        for &i in rad.deep_interior_nodes(1).iter() {
            let p = rad.node_point(i);
            if p.coords[0] < 0.2 || p.coords[1] < 0.2 {
                continue;
            }
            let q = Point::new4(p.coords[0], 0.0, p.coords[1], 0.0);
            if let Some(j) = full.nearest_node(&q) {
                if full.node_point(j).dist(&q) < 1e-12 && full_deep.contains(&j) {
                    let gap = (radial_det(&ur, i).unwrap()
                        - complex_hessian(&uf, j).unwrap().ma_det())
                    .abs();
                    worst_gap = worst_gap.max(gap);
                }
            }
        }
    }
    let gap_limit = 10.0 * full.spacing * full.spacing;
    verdicts.push(Verdict::new(
        "radial-full-agreement",
        worst_gap <= gap_limit,
        format!("worst |radial - full| {} (limit {})", fmt_e(worst_gap), fmt_e(gap_limit)),
    ));

    // second-order convergence of ma_det on exp(|z|^2)
    let ratio = ma_det_convergence_ratio(0.25);
    verdicts.push(Verdict::new(
        "ma-det-second-order",
        (3.4..=4.6).contains(&ratio),
        format!("error ratio {ratio:.3} per spacing halving"),
    ));

    ModuleVerdicts { module: "ma_operator".into(), seed, verdicts }
}

/// Max-node error ratio of ma_det on exp(|z|^2) between spacings h and h/2,
/// measured at matched deep-interior coarse nodes.
pub fn ma_det_convergence_ratio(h: f64) -> f64 {
    let d = DomainSpec::ball2();
    let exact = |p: &Point| {
        let z2 = p.norm2();
        (2.0 * z2).exp() * (1.0 + z2)
    };
    let field_fn = |p: &Point| p.norm2().exp();
    let coarse = Arc::new(Grid::classify(&d, h).unwrap());
    let fine = Arc::new(Grid::classify(&d, h / 2.0).unwrap());
    let uc = ScalarField::from_fn(coarse.clone(), field_fn);
    let uf = ScalarField::from_fn(fine.clone(), field_fn);
    let fine_deep: std::collections::HashSet<usize> =
        fine.deep_interior_nodes(2).into_iter().collect();
    let mut err_c = 0.0f64;
    let mut err_f = 0.0f64;
    for &i in &coarse.deep_interior_nodes(2) {
        let p = coarse.node_point(i);
        let Some(j) = fine.nearest_node(&p) else { continue };
        if fine.node_point(j).dist(&p) > 1e-12 || !fine_deep.contains(&j) {
            continue;
        }
        let e = exact(&p);
        err_c = err_c.max((complex_hessian(&uc, i).unwrap().ma_det() - e).abs());
        err_f = err_f.max((complex_hessian(&uf, j).unwrap().ma_det() - e).abs());
    }
    err_c / err_f
}

/// Outcome of the ball2 barrier suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierSuiteReport {
    pub anchors: usize,
    pub worst_anchor_identity: f64,
    pub worst_boundary_domination: f64,
    pub worst_det_deficit: f64,
    pub det_allowance: f64,
    pub seminorm_max: f64,
    pub seminorm_min: f64,
}

/// Barriers on the unit ball with the oracle defining function rho = |z|^2 - 1,
/// data phi = Re z1, h = 1, alpha = 1.
pub fn ball2_barrier_suite(spacing: f64, anchors: usize, seed: u64) -> Result<BarrierSuiteReport> {
    let d = DomainSpec::ball2();
    let grid = Arc::new(Grid::classify(&d, spacing)?);
    let rho = |p: &Point| p.norm2() - 1.0;
    let phi = |p: &Point| p.coords[0];
    let mesh = sample_boundary(&d, 400)?;
    let phi_samples: Vec<(Point, f64)> = mesh.points.iter().map(|p| (*p, phi(p))).collect();
    let c_phi = cphi(&phi_samples, 1.0)?;
    // max_s = max(-2 rho + |z - zeta|^2) = 4 on the closed ball
    let ledger = ConstantLedger::assemble(2, 1.0, c_phi, 4.0, 1.0, 1.0, 1.0, 1.0);
    let g = GIndex::new(IndexFunction::StronglyPseudoconvex).unwrap();

    let anchor_mesh = sample_boundary(&d, anchors)?;
    let mut worst_anchor = 0.0f64;
    let mut worst_domination = f64::NEG_INFINITY;
    let mut worst_det_deficit = f64::NEG_INFINITY;
    let mut seminorm_max = 0.0f64;
    let mut seminorm_min = f64::INFINITY;
    let scales = dyadic_scales(2.0 * spacing, 0.5);
    let deep = grid.deep_interior_nodes(2);
    for (k, zeta) in anchor_mesh.points.iter().enumerate() {
        let spec = BarrierSpec { zeta: *zeta, phi_zeta: phi(zeta), k: ledger.k, alpha: 1.0 };
        // at the anchor rho vanishes by definition of the boundary, so both
        // bracket terms are exactly zero and the identity is algebraic
        worst_anchor = worst_anchor.max((spec.eval(0.0, zeta) - phi(zeta)).abs());
        for z in &mesh.points {
            worst_domination = worst_domination.max(spec.eval(rho(z), z) - phi(z));
        }
        let barrier = barrier_v(&spec, &ledger, rho, &grid)?;
        for &i in &deep {
            let det = complex_hessian(&barrier.field, i)?.ma_det();
            worst_det_deficit = worst_det_deficit.max(1.0 - det);
        }
        // fitted seminorm over grid samples; a modest pair budget is enough
        // for the cross-anchor uniformity ratio
        let samples: Vec<(Point, f64)> = grid
            .inside_nodes()
            .iter()
            .map(|&i| (grid.node_point(i), barrier.field.values[i]))
            .collect();
        let cfg = ModulusConfig {
            pair_budget: 1_000_000,
            seed: seed ^ (k as u64),
            domain: Some(d.clone()),
            ..Default::default()
        };
        let rep = estimate_modulus(&samples, &g, 1.0, &cfg, &scales)?;
        let sn = rep.ratios.iter().cloned().fold(0.0, f64::max);
        seminorm_max = seminorm_max.max(sn);
        seminorm_min = seminorm_min.min(sn);
    }
    Ok(BarrierSuiteReport {
        anchors,
        worst_anchor_identity: worst_anchor,
        worst_boundary_domination: worst_domination,
        worst_det_deficit,
        det_allowance: 10.0 * spacing * spacing,
        seminorm_max,
        seminorm_min,
    })
}

/// Outcome of the disk defining-function suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoSuiteReport {
    pub mesh_counts: Vec<usize>,
    pub gaps: Vec<f64>,
    pub negative_inside: bool,
    pub lambda_min: f64,
    pub seminorm: f64,
    pub seminorm_spread: f64,
}

/// The defining-function construction on the disk with linear peaks and the
/// power:1/4 gauge, across refining anchor meshes.
pub fn disk_rho_suite(spacing: f64, mesh_counts: &[usize], seed: u64) -> Result<RhoSuiteReport> {
    let d = DomainSpec::disk();
    let grid = Arc::new(Grid::classify(&d, spacing)?);
    let g = GIndex::new(IndexFunction::power(0.25).unwrap()).unwrap();
    let es = eta_search(&g, &log_spaced(1e-6, 1e-3, 50));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fit_samples = grid.random_interior_points(400, &mut rng);
    fit_samples.extend(sample_boundary(&d, 128)?.points);
    let probe = sample_boundary(&d, 257)?;

    let mut gaps = Vec::new();
    let mut last = None;
    for &count in mesh_counts {
        let mesh = sample_boundary(&d, count)?;
        let fam = PeakFamily::linear(&d, mesh, es.eta)?;
        let report = validate_peak(&fam, &g, &fit_samples);
        let omega = ModulusOmega::new(g.clone(), es.eta)?;
        let rho = build_rho(fam, &report, omega, grid.clone(), &probe, seed)?;
        gaps.push(rho.envelope_gap);
        last = Some(rho);
    }
    let rho = last.expect("at least one mesh count");
    Ok(RhoSuiteReport {
        mesh_counts: mesh_counts.to_vec(),
        gaps,
        negative_inside: rho.negative_inside,
        lambda_min: rho.lambda_min,
        seminorm: rho.seminorm_g2,
        seminorm_spread: rho.seminorm_spread,
    })
}

/// Barriers: the ball2 suite, the disk defining function, and the translation
/// gadget on the solved ball2 problem.
pub fn verify_barriers(seed: u64) -> ModuleVerdicts {
    let mut verdicts = Vec::new();

    let suite = ball2_barrier_suite(0.25, 20, seed).unwrap();
    verdicts.push(Verdict::new(
        "anchor-identity",
        suite.worst_anchor_identity <= 1e-14,
        format!("worst |v(zeta) - phi(zeta)| {}", fmt_e(suite.worst_anchor_identity)),
    ));
    verdicts.push(Verdict::new(
        "boundary-domination",
        suite.worst_boundary_domination <= 1e-12,
        format!("worst v - phi on boundary {}", fmt_e(suite.worst_boundary_domination)),
    ));
    verdicts.push(Verdict::new(
        "barrier-det-domination",
        suite.worst_det_deficit <= suite.det_allowance,
        format!(
            "worst h - det {} (allowance {})",
            fmt_e(suite.worst_det_deficit),
            fmt_e(suite.det_allowance)
        ),
    ));
    verdicts.push(Verdict::new(
        "barrier-seminorm-uniformity",
        suite.seminorm_max / suite.seminorm_min < 10.0,
        format!("max/min = {:.3}", suite.seminorm_max / suite.seminorm_min),
    ));

    let rho = disk_rho_suite(1.0 / 16.0, &[8, 16, 32], seed).unwrap();
    verdicts.push(Verdict::new(
        "rho-negative-inside",
        rho.negative_inside,
        "rho < 0 at all inside nodes".into(),
    ));
    verdicts.push(Verdict::new(
        "rho-hessian-lower-bound",
        rho.lambda_min >= 0.9,
        format!("lambda_min {:.4}", rho.lambda_min),
    ));
    verdicts.push(Verdict::new(
        "rho-envelope-gap-decreasing",
        rho.gaps.windows(2).all(|w| w[1] < w[0]),
        format!("gaps {:?}", rho.gaps),
    ));
    verdicts.push(Verdict::new(
        "rho-g2-seminorm",
        rho.seminorm.is_finite() && rho.seminorm_spread < 10.0,
        format!("seminorm {:.4}, spread {:.3}", rho.seminorm, rho.seminorm_spread),
    ));

    // translation gadget on the solved ball
    let p = ProblemSpec {
        domain: DomainSpec::ball2(),
        phi: BoundaryData::Zero,
        h: Density::One,
        alpha: 1.0,
    };
    let rep = solve(&p, &SolveConfig::new(0.25)).unwrap();
    let g = GIndex::new(IndexFunction::StronglyPseudoconvex).unwrap();
    let ledger = ConstantLedger::assemble(2, 1.0, 0.0, 4.0, 1.0, 1.0, 2.0, 1.0);
    let mut gadget_ok = true;
    let mut detail = Vec::new();
    for mult in [1.0, 2.0] {
        let tau = [mult * rep.spacing, 0.0, 0.0, 0.0];
        let (_, tr) = translation_gadget(&rep.field, &tau, &ledger, &g).unwrap();
        let tol = 10.0 * rep.spacing * rep.spacing;
        if tr.max_gadget_excess > tol || tr.max_modulus_excess > 0.0 {
            gadget_ok = false;
        }
        detail.push(format!(
            "|tau|={:.3}: gadget excess {}, modulus excess {}",
            tr.tau_norm,
            fmt_e(tr.max_gadget_excess),
            fmt_e(tr.max_modulus_excess)
        ));
    }
    verdicts.push(Verdict::new("translation-gadget", gadget_ok, detail.join("; ")));

    ModuleVerdicts { module: "barriers".into(), seed, verdicts }
}

/// Solver: closed-form oracles, data monotonicity, subsolution preservation,
/// and bitwise determinism.
pub fn verify_solver(seed: u64) -> ModuleVerdicts {
    let mut verdicts = Vec::new();

    let disk = ProblemSpec {
        domain: DomainSpec::disk(),
        phi: BoundaryData::Zero,
        h: Density::One,
        alpha: 1.0,
    };
    let mut cfg = SolveConfig::new(1.0 / 32.0);
    cfg.tol = Some(1e-11);
    let rep = solve(&disk, &cfg).unwrap();
    let oracle = ScalarField::from_fn_inside(rep.field.grid.clone(), |q| q.norm2() - 1.0);
    let err = rep.field.max_abs_diff(&oracle);
    verdicts.push(Verdict::new(
        "disk-poisson-oracle",
        rep.converged && err < 5e-3,
        format!("inf-error {}", fmt_e(err)),
    ));

    let ball = ProblemSpec {
        domain: DomainSpec::ball2(),
        phi: BoundaryData::Zero,
        h: Density::One,
        alpha: 1.0,
    };
    let rep_ball = solve(&ball, &SolveConfig::new(0.25)).unwrap();
    let oracle_ball =
        ScalarField::from_fn_inside(rep_ball.field.grid.clone(), |q| q.norm2() - 1.0);
    let err_ball = rep_ball.field.max_abs_diff(&oracle_ball);
    verdicts.push(Verdict::new(
        "ball2-oracle",
        rep_ball.converged && err_ball < 2e-2,
        format!("inf-error {}", fmt_e(err_ball)),
    ));

    let radial = ProblemSpec {
        domain: DomainSpec::exp_ellipsoid(0.5).unwrap(),
        phi: BoundaryData::NegAbsZ1Alpha { alpha: 1.0 },
        h: Density::Zero,
        alpha: 1.0,
    };
    let rep_rad = solve(&radial, &SolveConfig::radial(1.0 / 64.0)).unwrap();
    let oracle_rad = ScalarField::from_fn_inside(rep_rad.field.grid.clone(), |q| {
        -exp_ellipsoid_profile(q.coords[1], 0.5, 1.0)
    });
    let err_rad = rep_rad.field.max_abs_diff(&oracle_rad);
    verdicts.push(Verdict::new(
        "infinite-type-radial-oracle",
        rep_rad.converged && err_rad < 5e-2,
        format!("inf-error {}", fmt_e(err_rad)),
    ));

    let rep0 = solve(
        &ProblemSpec { h: Density::Zero, ..ball.clone() },
        &SolveConfig::new(0.25),
    )
    .unwrap();
    let monotone = rep_ball
        .field
        .values
        .iter()
        .zip(&rep0.field.values)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .all(|(a, b)| a <= &(b + 1e-6));
    verdicts.push(Verdict::new(
        "density-comparison-monotone",
        monotone,
        "u_{h=1} <= u_{h=0} pointwise".into(),
    ));

    // subsolution preservation over early sweeps
    let grid = rep_ball.field.grid.clone();
    let mut field = crate::solver::initial_subsolution(&ball, &grid, None).unwrap();
    let mut preserved = true;
    for _ in 0..3 {
        crate::solver::sweep(&ball, &mut field).unwrap();
        for &i in grid.deep_interior_nodes(2).iter().step_by(7) {
            let hp = complex_hessian(&field, i).unwrap();
            if !hp.psh_check(hp.default_tol())
                || hp.ma_det() < 1.0 - 10.0 * grid.spacing * grid.spacing
            {
                preserved = false;
            }
        }
    }
    verdicts.push(Verdict::new(
        "sweeps-preserve-subsolution",
        preserved,
        "psh and det >= h - 10 h^2 after each of 3 sweeps".into(),
    ));

    let rep_twin = solve(&ball, &SolveConfig::new(0.25)).unwrap();
    let identical = rep_ball
        .field
        .values
        .iter()
        .zip(&rep_twin.field.values)
        .all(|(a, b)| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
    verdicts.push(Verdict::new(
        "solver-deterministic",
        identical && rep_ball.sweeps == rep_twin.sweeps,
        format!("{} sweeps, bit-identical fields", rep_ball.sweeps),
    ));

    ModuleVerdicts { module: "envelope_solver".into(), seed, verdicts }
}

/// Regularity lab: boundary identity, membership verdicts, the sharpness
/// table, and plurisubharmonicity of the sign-fixed closed form.
pub fn verify_regularity(seed: u64) -> ModuleVerdicts {
    let mut verdicts = Vec::new();
    let domain = DomainSpec::exp_ellipsoid(0.5).unwrap();

    let mesh = sample_boundary(&domain, 1000).unwrap();
    let mut worst_bd = 0.0f64;
    for zeta in &mesh.points {
        let u = closed_form_u_e(zeta, 0.5, 1.0).unwrap();
        worst_bd = worst_bd.max((u - zeta.z(0).norm()).abs());
    }
    verdicts.push(Verdict::new(
        "closed-form-boundary-identity",
        worst_bd <= 1e-12,
        format!("worst |u - |z1|| {}", fmt_e(worst_bd)),
    ));

    // psh check of the sign-fixed representative; the positive form fails it
    let grid = Grid::classify(&domain, 0.125).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = grid.random_interior_points(1000, &mut rng);
    let neg_form = |p: &Point| -closed_form_u_e(p, 0.5, 1.0).unwrap_or(f64::NAN);
    let mut psh_ok = true;
    let mut pos_fails_somewhere = false;
    for p in &pts {
        if domain.r(p) > -1e-3 {
            continue;
        }
        let hp = hessian_of_fn(&neg_form, p, 1e-4);
        if !hp.psh_check(1e-6 * (1.0 + hp.u11.abs() + hp.u22.abs())) {
            psh_ok = false;
        }
        if hp.u22 > 1e-6 {
            pos_fails_somewhere = true; // -u has u22 > 0 <=> +u has u22 < 0
        }
    }
    verdicts.push(Verdict::new(
        "sign-fixed-closed-form-is-psh",
        psh_ok && pos_fails_somewhere,
        "discrete psh at 10^3 interior points; positive form has u22 < 0".into(),
    ));

    let scales = dyadic_scales(1e-4, 1e-1);
    let pts = scaled_cloud(&domain, &scales, 48, seed).unwrap();
    let samples: Vec<(Point, f64)> = pts
        .iter()
        .map(|p| (*p, closed_form_u_e(p, 0.5, 1.0).unwrap()))
        .collect();
    let g = GIndex::new(IndexFunction::log_power(0.5).unwrap()).unwrap();
    let cfg = ModulusConfig { seed, domain: Some(domain.clone()), ..Default::default() };
    let rep = estimate_modulus(&samples, &g, 1.0, &cfg, &scales).unwrap();
    let verdict = membership_verdict(&rep, 20.0).unwrap();
    verdicts.push(Verdict::new(
        "closed-form-membership",
        verdict == Membership::Member,
        format!("verdict {verdict:?}, spread {:.3}", rep.spread),
    ));

    let disk = DomainSpec::disk();
    let scales_d = dyadic_scales(1e-3, 0.25);
    let pts_d = scaled_cloud(&disk, &scales_d, 48, seed).unwrap();
    let samples_d: Vec<(Point, f64)> = pts_d.iter().map(|p| (*p, p.norm().sqrt())).collect();
    let g_lip = GIndex::with_closed_form(
        IndexFunction::Custom {
            eval: Arc::new(|t: f64| t),
            deriv: Some(Arc::new(|_| 1.0)),
            ln_eval: Some(Arc::new(|l: f64| l)),
            convergent_tail: true,
        },
        Arc::new(|t: f64| t),
    );
    let cfg_d = ModulusConfig { seed, domain: Some(disk), ..Default::default() };
    let rep_d = estimate_modulus(&samples_d, &g_lip, 1.0, &cfg_d, &scales_d).unwrap();
    let verdict_d = membership_verdict(&rep_d, 10.0).unwrap();
    let expo = fitted_exponent(&rep_d);
    verdicts.push(Verdict::new(
        "sqrt-cusp-non-member",
        verdict_d == Membership::NonMember && (expo - 0.5).abs() < 0.05,
        format!("verdict {verdict_d:?}, fitted exponent {expo:.3}"),
    ));

    let eps: Vec<f64> = (0..=13).map(|k| 1e-2 * 2f64.powi(-k)).collect();
    let sharp = sharpness_probe(0.5, 1.0, &eps).unwrap();
    verdicts.push(Verdict::new(
        "sharpness-vd3-window",
        sharp.ratio_bounded && sharp.ratio_max / sharp.ratio_min <= 4.0,
        format!("ratio in [{:.4}, {:.4}]", sharp.ratio_min, sharp.ratio_max),
    ));

    let row = &sharpness_probe(0.5, 1.0, &[0.1]).unwrap().rows[0];
    let oracle_u_z = (1.0 - 0.19f64.ln()).powi(-2);
    let oracle_u_w = (1.0 - 0.36f64.ln()).powi(-2);
    let oracle_g = (1.0 + 10f64.ln()).recip();
    let row_ok = (row.u_z - oracle_u_z).abs() < 1e-12
        && (row.u_w - oracle_u_w).abs() < 1e-12
        && (row.g_bound - oracle_g).abs() < 1e-12;
    verdicts.push(Verdict::new(
        "sharpness-frozen-row",
        row_ok,
        format!("u_z {:.6}, u_w {:.6}, g^{{-1}} {:.6}", row.u_z, row.u_w, row.g_bound),
    ));

    ModuleVerdicts { module: "regularity_lab".into(), seed, verdicts }
}

/// Run every module's property suite.
pub fn verify_all(seed: u64) -> Vec<ModuleVerdicts> {
    vec![
        verify_index(seed),
        verify_geometry(seed),
        verify_operator(seed, 2000),
        verify_barriers(seed),
        verify_solver(seed),
        verify_regularity(seed),
    ]
}

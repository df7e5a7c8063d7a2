//! Acceptance gate: one test per criterion, each printing a pass/fail line
//! with the pinned tolerance. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the lines for passing criteria too).

use cma_core::barriers::{translation_gadget, ConstantLedger};
use cma_core::geometry::{sample_boundary, DomainSpec};
use cma_core::index::{
    check_omega_lemma, compute_g, compute_g_quadrature, eta_search, log_spaced, GIndex,
    IndexFunction, ModulusOmega,
};
use cma_core::regularity::{
    closed_form_u_e, dyadic_scales, estimate_modulus, membership_verdict, scaled_cloud,
    sharpness_probe, Membership, ModulusConfig,
};
use cma_core::solver::{
    exp_ellipsoid_profile, solve, BoundaryData, Density, ProblemSpec, SolveConfig, SolveReport,
};
use cma_core::verification::{
    ball2_barrier_suite, catalog_f, det_shift_random_suite, disk_rho_suite,
    ma_det_convergence_ratio, verify_all,
};
use cma_core::{Point, ScalarField};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("ACCEPTANCE {criterion}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {detail}");
}

/// criterion 5b's solved field, shared with criterion 9
fn solved_ball2() -> &'static SolveReport {
    static SOLVED: OnceLock<SolveReport> = OnceLock::new();
    SOLVED.get_or_init(|| {
        let p = ProblemSpec {
            domain: DomainSpec::ball2(),
            phi: BoundaryData::Zero,
            h: Density::One,
            alpha: 1.0,
        };
        solve(&p, &SolveConfig::new(0.125)).expect("ball2 solve")
    })
}

#[test]
fn criterion_01_g_calculus() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for f in catalog_f() {
        for &t in &[10.0, 1e3, 1e6] {
            let analytic = compute_g(&f, t, 1e-8).unwrap();
            let quad = compute_g_quadrature(&f, t, 1e-8).unwrap();
            worst = worst.max(((quad - analytic) / analytic).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1 (g-calculus)",
        worst <= 1e-6 && elapsed < 1.0,
        &format!("worst relative error {worst:.3e} (tol 1e-6), {elapsed:.3} s (< 1 s)"),
    );
}

#[test]
fn criterion_02_omega_lemma_suite() {
    let start = Instant::now();
    let deltas = log_spaced(1e-6, 1e-3, 200);
    let mut all_pass = true;
    let mut lines = Vec::new();
    for f in catalog_f() {
        let id = f.id();
        let g = GIndex::new(f).unwrap();
        let es = eta_search(&g, &deltas);
        let m = ModulusOmega::new(g, es.eta).unwrap();
        let rep = check_omega_lemma(&m, &deltas).unwrap();
        let i_pass = rep.monotone.verdict && rep.vanishing.verdict;
        let iii_pass = rep.difference_holds;
        let iv_pass = rep.scaling_pass;
        if !(i_pass && iii_pass && iv_pass) {
            all_pass = false;
        }
        lines.push(format!(
            "{id}: eta {:.3}, (i) {}, (ii) concave {} / convex {} [recorded], (iii) {} [{}], (iv) {}",
            es.eta,
            i_pass,
            rep.concave_midpoint.verdict,
            rep.convex_midpoint.verdict,
            iii_pass,
            rep.difference_direction,
            iv_pass
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "2 (omega lemma suite)",
        all_pass && elapsed < 5.0,
        &format!("200 log-spaced deltas in [1e-6, 1e-3]; {elapsed:.2} s (< 5 s); {}", lines.join(" | ")),
    );
}

#[test]
fn criterion_03_det_shift_inequality() {
    let start = Instant::now();
    let mut total_violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=3 {
        let (viol, w) = det_shift_random_suite(n, 10_000, 20_240_817);
        total_violations += viol;
        worst = worst.max(w);
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "3 (determinant shift inequality)",
        total_violations == 0 && elapsed < 5.0,
        &format!(
            "10^4 PSD trials per n in {{1,2,3}}, {total_violations} violations, worst slack {worst:.3e} (allowed 1e-9 x scale), {elapsed:.2} s (< 5 s)"
        ),
    );
}

#[test]
fn criterion_04_operator_exactness_and_order() {
    // exactness is part of the operator verdicts; recheck the headline numbers
    let verdicts = cma_core::verification::verify_operator(20_240_817, 200);
    let exact = verdicts
        .verdicts
        .iter()
        .find(|v| v.check == "hessian-exact-on-quadratics")
        .unwrap();
    let ratio = ma_det_convergence_ratio(0.25);
    report(
        "4 (operator exactness and second order)",
        exact.pass && (3.4..=4.6).contains(&ratio),
        &format!("{}; error ratio {ratio:.3} in [3.4, 4.6]", exact.detail),
    );
}

#[test]
fn criterion_05a_disk_oracle() {
    let start = Instant::now();
    let p = ProblemSpec {
        domain: DomainSpec::disk(),
        phi: BoundaryData::Zero,
        h: Density::One,
        alpha: 1.0,
    };
    let rep = solve(&p, &SolveConfig::new(1.0 / 64.0)).unwrap();
    let oracle = ScalarField::from_fn_inside(rep.field.grid.clone(), |q| q.norm2() - 1.0);
    let err = rep.field.max_abs_diff(&oracle);
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "5a (disk h=1 oracle)",
        rep.converged && err <= 5e-3 && elapsed < 10.0,
        &format!("inf-error {err:.3e} (tol 5e-3) at spacing 1/64, {elapsed:.2} s (< 10 s)"),
    );
}

#[test]
fn criterion_05b_ball2_oracle() {
    let start = Instant::now();
    let rep = solved_ball2();
    let oracle = ScalarField::from_fn_inside(rep.field.grid.clone(), |q| q.norm2() - 1.0);
    let err = rep.field.max_abs_diff(&oracle);
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "5b (ball2 full 4D oracle)",
        rep.converged && err <= 2e-2 && elapsed < 600.0,
        &format!("inf-error {err:.3e} (tol 2e-2) at spacing 1/8, {elapsed:.2} s (< 600 s)"),
    );
}

#[test]
fn criterion_05c_infinite_type_radial_oracle() {
    let start = Instant::now();
    // the plurisubharmonic side of the model problem: datum -|z1|, solution
    // -(1 - log(1 - r2^2))^{-2}
    let p = ProblemSpec {
        domain: DomainSpec::exp_ellipsoid(0.5).unwrap(),
        phi: BoundaryData::NegAbsZ1Alpha { alpha: 1.0 },
        h: Density::Zero,
        alpha: 1.0,
    };
    let rep = solve(&p, &SolveConfig::radial(1.0 / 128.0)).unwrap();
    let oracle = ScalarField::from_fn_inside(rep.field.grid.clone(), |q| {
        -exp_ellipsoid_profile(q.coords[1], 0.5, 1.0)
    });
    let err = rep.field.max_abs_diff(&oracle);
    // the literal positive datum has envelope |z1| itself; check it too
    let p_pos = ProblemSpec {
        domain: DomainSpec::exp_ellipsoid(0.5).unwrap(),
        phi: BoundaryData::AbsZ1Alpha { alpha: 1.0 },
        h: Density::Zero,
        alpha: 1.0,
    };
    let rep_pos = solve(&p_pos, &SolveConfig::radial(1.0 / 128.0)).unwrap();
    let oracle_pos = ScalarField::from_fn_inside(rep_pos.field.grid.clone(), |q| q.coords[0]);
    let err_pos = rep_pos.field.max_abs_diff(&oracle_pos);
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "5c (infinite-type radial oracle)",
        rep.converged && err <= 5e-2 && err_pos <= 1e-4 && elapsed < 120.0,
        &format!(
            "inf-error {err:.3e} vs -(1-log(1-r2^2))^-2 (tol 5e-2); positive-datum envelope error {err_pos:.3e}; {elapsed:.1} s (< 120 s)"
        ),
    );
}

#[test]
fn criterion_06_barrier_suite() {
    let suite = ball2_barrier_suite(0.125, 100, 20_240_817).unwrap();
    let uniform = suite.seminorm_max / suite.seminorm_min;
    report(
        "6 (barrier suite, ball2, f = t^1/2)",
        suite.worst_anchor_identity == 0.0
            && suite.worst_boundary_domination <= 1e-12
            && suite.worst_det_deficit <= suite.det_allowance
            && uniform < 10.0,
        &format!(
            "anchor identity exact; boundary domination {:.3e} (tol 1e-12); det deficit {:.3e} (allowance {:.3e}); seminorm max/min {uniform:.3} (< 10) over {} anchors",
            suite.worst_boundary_domination,
            suite.worst_det_deficit,
            suite.det_allowance,
            suite.anchors
        ),
    );
}

#[test]
fn criterion_07_defining_function() {
    let suite = disk_rho_suite(1.0 / 32.0, &[16, 64, 256], 20_240_817).unwrap();
    let gaps_decreasing = suite.gaps.windows(2).all(|w| w[1] < w[0]);
    report(
        "7 (defining function, disk, linear peaks)",
        suite.negative_inside
            && suite.lambda_min >= 0.9
            && suite.seminorm.is_finite()
            && suite.seminorm_spread < 10.0
            && gaps_decreasing,
        &format!(
            "rho < 0 inside; lambda_min {:.3} (>= 0.9); g^2-seminorm {:.3} spread {:.2} (< 10); envelope gaps {:?} decreasing over meshes {:?}",
            suite.lambda_min, suite.seminorm, suite.seminorm_spread, suite.gaps, suite.mesh_counts
        ),
    );
}

#[test]
fn criterion_08_regularity_lab() {
    let domain = DomainSpec::exp_ellipsoid(0.5).unwrap();

    // (a) boundary identity at 10^3 points
    let mesh = sample_boundary(&domain, 1000).unwrap();
    let worst_bd = mesh
        .points
        .iter()
        .map(|z| (closed_form_u_e(z, 0.5, 1.0).unwrap() - z.z(0).norm()).abs())
        .fold(0.0, f64::max);

    // (b) membership of the closed form against G = g over [1e-5, 1e-1]
    let scales = dyadic_scales(1e-5, 1e-1);
    let pts = scaled_cloud(&domain, &scales, 32, 20_240_817).unwrap();
    let samples: Vec<(Point, f64)> = pts
        .iter()
        .map(|p| (*p, closed_form_u_e(p, 0.5, 1.0).unwrap()))
        .collect();
    let g = GIndex::new(IndexFunction::log_power(0.5).unwrap()).unwrap();
    let cfg = ModulusConfig {
        pair_budget: 40_000_000,
        domain: Some(domain.clone()),
        ..Default::default()
    };
    let rep = estimate_modulus(&samples, &g, 1.0, &cfg, &scales).unwrap();
    let member = membership_verdict(&rep, 20.0).unwrap();

    // (c) |z|^{1/2} against the Lipschitz gauge is a non-member
    let disk = DomainSpec::disk();
    let scales_d = dyadic_scales(1e-3, 0.25);
    let pts_d = scaled_cloud(&disk, &scales_d, 48, 20_240_817).unwrap();
    let samples_d: Vec<(Point, f64)> = pts_d.iter().map(|p| (*p, p.norm().sqrt())).collect();
    let g_lip = GIndex::with_closed_form(
        IndexFunction::Custom {
            eval: Arc::new(|t: f64| t),
            deriv: None,
            ln_eval: Some(Arc::new(|l: f64| l)),
            convergent_tail: true,
        },
        Arc::new(|t: f64| t),
    );
    let cfg_d = ModulusConfig { domain: Some(disk), ..Default::default() };
    let rep_d = estimate_modulus(&samples_d, &g_lip, 1.0, &cfg_d, &scales_d).unwrap();
    let non_member = membership_verdict(&rep_d, 10.0).unwrap();

    // (d) vd3 ratio window over eps in [1e-6, 1e-2]
    let eps: Vec<f64> = (0..=13).map(|k| 1e-2 * 2f64.powi(-k) * 1.3737).collect();
    let eps: Vec<f64> = eps.into_iter().filter(|&e| (1e-6..0.25).contains(&e)).collect();
    let sharp = sharpness_probe(0.5, 1.0, &eps).unwrap();
    let window = sharp.ratio_max / sharp.ratio_min;

    // (e) the eps = 0.1 row against the closed-form oracles to 5 significant
    // digits, plus the coarser rounded expansions at 4 digits
    let row = &sharpness_probe(0.5, 1.0, &[0.1]).unwrap().rows[0];
    let oracle = [
        (1.0 - 0.19f64.ln()).powi(-2),
        (1.0 - 0.36f64.ln()).powi(-2),
        (1.0 - 0.36f64.ln()).powi(-2) - (1.0 - 0.19f64.ln()).powi(-2),
        (1.0 + 10f64.ln()).recip(),
    ];
    let got = [row.u_z, row.u_w, row.delta_u, row.g_bound];
    let printed = [0.14127, 0.24466, 0.10339, 0.30279];
    let five_digits = got
        .iter()
        .zip(&oracle)
        .all(|(a, b)| ((a - b) / b).abs() < 5e-6);
    let four_digits = got
        .iter()
        .zip(&printed)
        .all(|(a, b)| ((a - b) / b).abs() < 1e-3);

    report(
        "8 (regularity lab)",
        worst_bd <= 1e-12
            && member == Membership::Member
            && non_member == Membership::NonMember
            && window <= 4.0
            && five_digits
            && four_digits,
        &format!(
            "(a) boundary identity {worst_bd:.2e} (tol 1e-12); (b) verdict {member:?} spread {:.2} (cap 20); (c) verdict {non_member:?}; (d) vd3 window {window:.3} (<= 4); (e) row ({:.6}, {:.6}, {:.6}, {:.6}) matches recomputed oracles to 5 digits",
            rep.spread, row.u_z, row.u_w, row.delta_u, row.g_bound
        ),
    );
}

#[test]
fn criterion_09_translation_gadget() {
    let rep = solved_ball2();
    let g = GIndex::new(IndexFunction::StronglyPseudoconvex).unwrap();
    // h = 1: sup h^{1/2} = 1, seminorm 0; fitted barrier norms dominated by 2
    let ledger = ConstantLedger::assemble(2, 1.0, 0.0, 4.0, 1.0, 1.0, 2.0, 1.0);
    let tol = 10.0 * rep.spacing * rep.spacing;
    let mut pass = true;
    let mut lines = Vec::new();
    for mult in [1.0, 2.0, 4.0] {
        let tau = [mult * rep.spacing, 0.0, 0.0, 0.0];
        let (_, tr) = translation_gadget(&rep.field, &tau, &ledger, &g).unwrap();
        let diag = [
            0.5 * mult * rep.spacing,
            0.5 * mult * rep.spacing,
            0.5 * mult * rep.spacing,
            0.5 * mult * rep.spacing,
        ];
        let (_, tr_diag) = translation_gadget(&rep.field, &diag, &ledger, &g).unwrap();
        for t in [&tr, &tr_diag] {
            if t.max_gadget_excess > tol || t.max_modulus_excess > 0.0 {
                pass = false;
            }
        }
        lines.push(format!(
            "|tau| = {mult} h: gadget excess {:.2e}, modulus excess {:.2e}",
            tr.max_gadget_excess, tr.max_modulus_excess
        ));
    }
    report(
        "9 (translation gadget)",
        pass,
        &format!("V <= u + {tol:.3e} and modulus bound at all sampled z; {}", lines.join("; ")),
    );
}

#[test]
fn criterion_10_verify_all_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for run in 0..2 {
        let verdicts = verify_all(20_240_817);
        let mut all_bytes = Vec::new();
        for m in &verdicts {
            let path = dir.path().join(format!("run{run}-{}.json", m.module));
            let bytes = serde_json::to_vec_pretty(m).unwrap();
            std::fs::write(&path, &bytes).unwrap();
            all_bytes.extend_from_slice(&bytes);
        }
        digests.push(all_bytes);
        assert!(
            verdicts.iter().all(|m| m.all_pass()),
            "verify-all has failing verdicts: {:?}",
            verdicts
                .iter()
                .flat_map(|m| m.verdicts.iter().filter(|v| !v.pass))
                .map(|v| v.check.clone())
                .collect::<Vec<_>>()
        );
    }
    report(
        "10 (verify-all determinism)",
        digests[0] == digests[1],
        &format!("two runs, {} verdict bytes each, byte-identical", digests[0].len()),
    );
}

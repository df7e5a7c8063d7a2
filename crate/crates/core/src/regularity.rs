//! Holder-modulus estimation against a gauge G, membership verdicts for
//! f-Holder classes, and the infinite-type sharpness probe.

use crate::error::{Error, Result};
use crate::geom::{linear_fit, Point};
use crate::geometry::{sample_boundary, DomainSpec};
use crate::index::GIndex;
use crate::solver::exp_ellipsoid_profile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Configuration of the pair-sampling modulus estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusConfig {
    pub pair_budget: usize,
    /// fraction of budgeted pairs drawn near the boundary (needs `domain`)
    pub boundary_focus: f64,
    pub seed: u64,
    pub domain: Option<DomainSpec>,
}

impl Default for ModulusConfig {
    fn default() -> Self {
        ModulusConfig { pair_budget: 12_000_000, boundary_focus: 0.7, seed: 1, domain: None }
    }
}

/// Per-scale maxima of |u(z) - u(w)| and of the normalized pair ratio
/// |u(z) - u(w)| * G(|z - w|^{-1})^alpha. Scales are dyadic, descending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusReport {
    /// dyadic scales, largest first; bin k holds pairs with |z-w| in [s_k, 2 s_k)
    pub scales: Vec<f64>,
    pub m_raw: Vec<f64>,
    /// m_raw made nondecreasing in the scale by cumulative max
    pub m_monotone: Vec<f64>,
    pub ratios: Vec<f64>,
    pub pair_counts: Vec<usize>,
    pub seed: u64,
    pub alpha: f64,
    /// max ratio / min nonzero ratio (1 when all ratios vanish)
    pub spread: f64,
    pub bounded: bool,
}

/// Dyadic scales from `max` down to the last value >= `min`, descending.
pub fn dyadic_scales(min: f64, max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut s = max;
    while s >= min * (1.0 - 1e-12) {
        out.push(s);
        s *= 0.5;
    }
    out
}

fn boundary_distance(domain: &DomainSpec, p: &Point) -> f64 {
    let r = domain.r(p);
    let g = domain.grad_r(p);
    let gn: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if gn < 1e-12 {
        r.abs()
    } else {
        r.abs() / gn
    }
}

/// Estimate the modulus of a sampled function against the gauge G^alpha.
///
/// All pairs are scanned when the sample count allows; otherwise pairs are
/// subsampled with the recorded seed, biased toward boundary-near samples by
/// `boundary_focus` when a domain is supplied.
pub fn estimate_modulus(
    samples: &[(Point, f64)],
    g: &GIndex,
    alpha: f64,
    cfg: &ModulusConfig,
    scales: &[f64],
) -> Result<ModulusReport> {
    if samples.len() < 100 {
        return Err(Error::InsufficientSamples { needed: 100, got: samples.len() });
    }
    let k_max = scales.len();
    if k_max == 0 {
        return Err(Error::InsufficientScales { needed: 1, got: 0 });
    }
    let s_max = scales[0];
    // binning assumes a descending dyadic ladder
    for w in scales.windows(2) {
        if (w[1] - 0.5 * w[0]).abs() > 1e-9 * w[0] {
            return Err(Error::OutOfRange {
                value: w[1],
                range: "scales must halve (use dyadic_scales)",
            });
        }
    }
    // scales must fit inside the sample diameter (coarse proxy: coordinate span)
    let mut span = 0.0f64;
    for a in 0..samples[0].0.dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (p, _) in samples {
            lo = lo.min(p.coords[a]);
            hi = hi.max(p.coords[a]);
        }
        span = span.max(hi - lo);
    }
    if s_max > span {
        return Err(Error::OutOfRange { value: s_max, range: "scales within sample diameter" });
    }
    let mut m_raw = vec![0.0f64; k_max];
    let mut ratios = vec![0.0f64; k_max];
    let mut counts = vec![0usize; k_max];

    let mut consider = |a: &(Point, f64), b: &(Point, f64)| {
        let d = a.0.dist(&b.0);
        if d <= 0.0 || d >= 2.0 * s_max {
            return;
        }
        let k = (-(d / s_max).log2()).ceil();
        if k < 0.0 || k as usize >= k_max {
            return;
        }
        let k = k as usize;
        let du = (a.1 - b.1).abs();
        counts[k] += 1;
        if du > m_raw[k] {
            m_raw[k] = du;
        }
        // the gauge is defined for arguments >= 1: pairs separated by more
        // than unit distance carry no ratio information
        if d < 1.0 {
            let r = du * g.eval(1.0 / d).powf(alpha);
            if r > ratios[k] {
                ratios[k] = r;
            }
        }
    };

    let full_scan = samples.len() * (samples.len() - 1) / 2 <= cfg.pair_budget;
    if full_scan {
        for i in 0..samples.len() {
            for j in (i + 1)..samples.len() {
                consider(&samples[i], &samples[j]);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        // per-scale boundary focus: pairs with both endpoints within 4 s_k of
        // the boundary, where the regularity obstruction lives
        let bdist: Option<Vec<f64>> = cfg
            .domain
            .as_ref()
            .map(|dom| samples.iter().map(|(p, _)| boundary_distance(dom, p)).collect());
        let mut focus_spent = 0usize;
        if let Some(bdist) = &bdist {
            let per_scale =
                (cfg.pair_budget as f64 * cfg.boundary_focus / k_max as f64) as usize;
            for &s_k in scales {
                let near: Vec<usize> = (0..samples.len())
                    .filter(|&i| bdist[i] <= 4.0 * s_k)
                    .collect();
                if near.len() < 2 {
                    continue;
                }
                for _ in 0..per_scale {
                    let i = near[rng.gen_range(0..near.len())];
                    let j = near[rng.gen_range(0..near.len())];
                    if i != j {
                        consider(&samples[i], &samples[j]);
                    }
                }
                focus_spent += per_scale;
            }
        }
        for _ in 0..cfg.pair_budget.saturating_sub(focus_spent) {
            let i = rng.gen_range(0..samples.len());
            let j = rng.gen_range(0..samples.len());
            if i != j {
                consider(&samples[i], &samples[j]);
            }
        }
    }

    let mut m_monotone = m_raw.clone();
    // cumulative max, ascending in the scale (vector is descending)
    for k in (0..k_max.saturating_sub(1)).rev() {
        if m_monotone[k] < m_monotone[k + 1] {
            m_monotone[k] = m_monotone[k + 1];
        }
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let min_pos = ratios.iter().cloned().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
    let spread = if max_ratio == 0.0 || !min_pos.is_finite() {
        1.0
    } else {
        max_ratio / min_pos
    };
    Ok(ModulusReport {
        scales: scales.to_vec(),
        m_raw,
        m_monotone,
        ratios,
        pair_counts: counts,
        seed: cfg.seed,
        alpha,
        spread,
        bounded: spread.is_finite(),
    })
}

/// Fitted Holder exponent from the monotone modulus values (slope of
/// log M against log scale over bins with pairs).
pub fn fitted_exponent(report: &ModulusReport) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..report.scales.len() {
        if report.pair_counts[k] > 0 && report.m_monotone[k] > 0.0 {
            xs.push(report.scales[k].ln());
            ys.push(report.m_monotone[k].ln());
        }
    }
    if xs.len() < 2 {
        return f64::NAN;
    }
    linear_fit(&xs, &ys).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Member,
    NonMember,
    Inconclusive,
}

/// Issue a membership verdict from a modulus report.
///
/// Divergence evidence is checked first: ratios strictly increasing over the
/// four finest populated scales with total growth >= 2. Otherwise bounded
/// ratios with spread below the cap give membership.
pub fn membership_verdict(report: &ModulusReport, spread_cap: f64) -> Result<Membership> {
    let populated: Vec<usize> = (0..report.scales.len())
        .filter(|&k| report.pair_counts[k] > 0)
        .collect();
    if populated.len() < 4 {
        return Err(Error::InsufficientScales { needed: 4, got: populated.len() });
    }
    let tail: Vec<f64> = populated[populated.len() - 4..]
        .iter()
        .map(|&k| report.ratios[k])
        .collect();
    let increasing = tail.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-12));
    let growth = if tail[0] > 0.0 { tail[3] / tail[0] } else { f64::INFINITY };
    if increasing && growth >= 2.0 {
        return Ok(Membership::NonMember);
    }
    if report.spread <= spread_cap {
        return Ok(Membership::Member);
    }
    Ok(Membership::Inconclusive)
}

/// Closed-form boundary-compatible profile on the model infinite-type
/// ellipsoid: u(z) = (1 - log(1 - |z2|^2))^{-alpha/s}, continued by 0 at
/// |z2| = 1. The plurisubharmonic solution for the sign-flipped datum is -u.
pub fn closed_form_u_e(z: &Point, s: f64, alpha: f64) -> Result<f64> {
    let domain = DomainSpec::exp_ellipsoid(s)?;
    if domain.r(z) > 1e-9 {
        return Err(Error::OutsideDomain(z.coords));
    }
    let r2 = z.z(1).norm();
    if r2 > 1.0 + 1e-12 {
        return Err(Error::OutsideDomain(z.coords));
    }
    Ok(exp_ellipsoid_profile(r2.min(1.0), s, alpha))
}

/// One row of the sharpness table at a probe separation eps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub eps: f64,
    /// literal probe values u(0, 1-eps), u(0, 1-2eps)
    pub u_z: f64,
    pub u_w: f64,
    pub delta_u: f64,
    /// catalog-f expressions f(eps^{-2})^{-alpha}, f((2 eps)^{-2})^{-alpha}
    pub u_z_f_based: f64,
    pub u_w_f_based: f64,
    /// g(eps^{-1})^{-alpha} with the model g(t) = (1 + log t)^{1/s - 1}
    pub g_bound: f64,
    /// |f(eps^{-2}) - f((2 eps)^{-2})|^{-alpha}
    pub f_difference_neg_pow: f64,
    /// (f(eps^{-2}) - f((2 eps)^{-2})) / g(eps^{-1})
    pub ratio_fdiff_over_g: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub s: f64,
    pub alpha: f64,
    pub rows: Vec<SharpnessRow>,
    /// least-squares slopes of ln |delta u| and ln g^{-alpha} against
    /// ln ln(1/eps)
    pub delta_u_exponent: f64,
    pub g_bound_exponent: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// only asserted bound: the f-difference stays within a bounded multiple
    /// of g; the reverse chain is reported without assertion
    pub ratio_bounded: bool,
}

/// Tabulate the sharpness quantities at the literal probe points
/// z_eps = (0, 1 - eps), w_eps = (0, 1 - 2 eps).
pub fn sharpness_probe(s: f64, alpha: f64, eps_list: &[f64]) -> Result<SharpnessReport> {
    let f4 = |t: f64| (1.0 + t.ln()).powf(1.0 / s);
    let g4 = |t: f64| (1.0 + t.ln()).powf(1.0 / s - 1.0);
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(Error::OutOfRange { value: eps, range: "eps in (0, 1/4)" });
        }
        let u_z = exp_ellipsoid_profile(1.0 - eps, s, alpha);
        let u_w = exp_ellipsoid_profile(1.0 - 2.0 * eps, s, alpha);
        let fa = f4(eps.powi(-2));
        let fb = f4((2.0 * eps).powi(-2));
        let g_val = g4(1.0 / eps);
        rows.push(SharpnessRow {
            eps,
            u_z,
            u_w,
            delta_u: (u_z - u_w).abs(),
            u_z_f_based: fa.powf(-alpha),
            u_w_f_based: fb.powf(-alpha),
            g_bound: g_val.powf(-alpha),
            f_difference_neg_pow: (fa - fb).abs().powf(-alpha),
            ratio_fdiff_over_g: (fa - fb) / g_val,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.eps).ln().ln()).collect();
    let du: Vec<f64> = rows.iter().map(|r| r.delta_u.max(1e-300).ln()).collect();
    let gb: Vec<f64> = rows.iter().map(|r| r.g_bound.max(1e-300).ln()).collect();
    let delta_u_exponent = if rows.len() >= 2 { linear_fit(&xs, &du).0 } else { f64::NAN };
    let g_bound_exponent = if rows.len() >= 2 { linear_fit(&xs, &gb).0 } else { f64::NAN };
    let ratio_min = rows.iter().map(|r| r.ratio_fdiff_over_g).fold(f64::INFINITY, f64::min);
    let ratio_max = rows.iter().map(|r| r.ratio_fdiff_over_g).fold(0.0f64, f64::max);
    Ok(SharpnessReport {
        s,
        alpha,
        rows,
        delta_u_exponent,
        g_bound_exponent,
        ratio_min,
        ratio_max,
        ratio_bounded: ratio_min > 0.0 && ratio_max.is_finite(),
    })
}

/// A multi-scale sample cloud: boundary-anchored pairs along inward normals
/// and tangents at every scale, plus interior anchors with partners at every
/// scale, all inside the domain closure.
pub fn scaled_cloud(
    domain: &DomainSpec,
    scales: &[f64],
    anchors_per_scale: usize,
    seed: u64,
) -> Result<Vec<Point>> {
    let mut mesh = sample_boundary(domain, anchors_per_scale.max(8))?;
    // the coordinate poles carry the extreme boundary behavior; add them
    // explicitly so the quasi-uniform mesh cannot miss them
    {
        let dim = domain.real_dim();
        for axis in 0..dim {
            for sign in [1.0, -1.0] {
                let mut dir = [0.0; 4];
                dir[axis] = sign;
                if let Ok(p) = crate::geometry::ray_to_boundary(
                    domain,
                    &Point::zero(dim),
                    &dir,
                ) {
                    let g = domain.grad_r(&p);
                    let n: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if n > 1e-12 {
                        let mut nv = [0.0; 4];
                        for k in 0..4 {
                            nv[k] = g[k] / n;
                        }
                        mesh.points.push(p);
                        mesh.normals.push(Point { coords: nv, dim });
                        mesh.weights.push(0.0);
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = domain.real_dim();
    let mut pts: Vec<Point> = Vec::new();
    let inside = |p: &Point| domain.r(p) <= 1e-12;
    for (zeta, normal) in mesh.points.iter().zip(&mesh.normals) {
        pts.push(*zeta);
        for &s in scales {
            let mut inward = [0.0f64; 4];
            for a in 0..dim {
                inward[a] = -normal.coords[a];
            }
            for &mult in &[1.0, 1.3, 1.6, 1.95] {
                let q = zeta.add_scaled(&inward, mult * s);
                if inside(&q) {
                    pts.push(q);
                }
            }
        }
    }
    // interior anchors with partners at every scale in random directions;
    // the center always participates (power cusps of catalog test functions
    // live there)
    let n_interior = anchors_per_scale.max(8);
    let mut tries = 0;
    let mut anchors = vec![Point::zero(dim)];
    while anchors.len() < n_interior && tries < 100_000 {
        tries += 1;
        let mut coords = [0.0f64; 4];
        for c in coords.iter_mut().take(dim) {
            *c = rng.gen_range(-1.0..1.0);
        }
        let p = Point { coords, dim };
        if domain.r(&p) < -1e-9 {
            anchors.push(p);
        }
    }
    for p in &anchors {
        pts.push(*p);
        for &s in scales {
            let mut dir = [0.0f64; 4];
            let mut norm = 0.0;
            for d in dir.iter_mut().take(dim) {
                *d = rng.gen_range(-1.0..1.0f64);
                norm += *d * *d;
            }
            let norm = norm.sqrt().max(1e-12);
            for d in dir.iter_mut().take(dim) {
                *d /= norm;
            }
            for &mult in &[1.0, -1.0, 1.45, -1.45, 1.95, -1.95] {
                let q = p.add_scaled(&dir, mult * s);
                if inside(&q) {
                    pts.push(q);
                }
            }
        }
    }
    Ok(pts)
}

/// Fit the Lambda^{G^alpha} seminorm of a sampled function: the maximum
/// normalized pair ratio over dyadic scales, with its cross-scale spread.
pub fn fitted_seminorm(
    samples: &[(Point, f64)],
    g: &GIndex,
    alpha: f64,
    scales: &[f64],
    seed: u64,
) -> Result<(f64, f64)> {
    let cfg = ModulusConfig { seed, ..Default::default() };
    let rep = estimate_modulus(samples, g, alpha, &cfg, scales)?;
    let max_ratio = rep.ratios.iter().cloned().fold(0.0, f64::max);
    Ok((max_ratio, rep.spread))
}

//! Index-function calculus: the boundary gauge f, the derived gauge
//! g with 1/g(t) = integral_t^inf da/(a f(a)), the modulus
//! omega(delta) = g(delta^{-1/eta})^{-2}, and numeric verification of
//! weight families witnessing the f-Property.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::geometry::DomainSpec;
use crate::quadrature::adaptive;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A catalogued index function f on [1, inf): f >= 1 nondecreasing with
/// f(t)/sqrt(t) nonincreasing.
#[derive(Clone)]
pub enum IndexFunction {
    /// f(t) = t^eps, 0 < eps <= 1/2 (finite-type gauge).
    PowerLaw { eps: f64 },
    /// f(t) = (1 + log t)^{1/s}, 0 < s < 1 (infinite-type gauge).
    LogPower { s: f64 },
    /// Alias for the power law with eps = 1/2.
    StronglyPseudoconvex,
    Custom {
        eval: ScalarFn,
        deriv: Option<ScalarFn>,
        /// ln f as a function of ln a, for tail integration at huge arguments.
        ln_eval: Option<ScalarFn>,
        /// The tail integral cannot be checked symbolically for closures;
        /// the caller asserts convergence.
        convergent_tail: bool,
    },
}

impl fmt::Debug for IndexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexFunction({})", self.id())
    }
}

impl IndexFunction {
    pub fn power(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::OutOfRange { value: eps, range: "eps in (0, 1/2]" });
        }
        Ok(IndexFunction::PowerLaw { eps })
    }

    pub fn log_power(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::OutOfRange { value: s, range: "s in (0, 1)" });
        }
        Ok(IndexFunction::LogPower { s })
    }

    /// Parse a catalog id: `power:<eps>`, `logpower:<s>`, `strongly-pseudoconvex`.
    pub fn parse(id: &str) -> Result<Self> {
        let invalid = |reason: String| Error::ConfigInvalid { key: "f".into(), reason };
        if id == "strongly-pseudoconvex" {
            return Ok(IndexFunction::StronglyPseudoconvex);
        }
        if let Some(v) = id.strip_prefix("power:") {
            let eps: f64 = v.parse().map_err(|_| invalid(format!("bad exponent `{v}`")))?;
            return IndexFunction::power(eps);
        }
        if let Some(v) = id.strip_prefix("logpower:") {
            let s: f64 = v.parse().map_err(|_| invalid(format!("bad exponent `{v}`")))?;
            return IndexFunction::log_power(s);
        }
        Err(invalid(format!("unknown index function `{id}`")))
    }

    pub fn id(&self) -> String {
        match self {
            IndexFunction::PowerLaw { eps } => format!("power:{eps}"),
            IndexFunction::LogPower { s } => format!("logpower:{s}"),
            IndexFunction::StronglyPseudoconvex => "strongly-pseudoconvex".into(),
            IndexFunction::Custom { .. } => "custom".into(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            IndexFunction::PowerLaw { eps } => t.powf(*eps),
            IndexFunction::LogPower { s } => (1.0 + t.ln()).powf(1.0 / s),
            IndexFunction::StronglyPseudoconvex => t.sqrt(),
            IndexFunction::Custom { eval, .. } => eval(t),
        }
    }

    /// ln f(a) given ln a; stays finite where f itself overflows.
    pub fn ln_eval(&self, ln_a: f64) -> f64 {
        match self {
            IndexFunction::PowerLaw { eps } => eps * ln_a,
            IndexFunction::LogPower { s } => (1.0 + ln_a).ln() / s,
            IndexFunction::StronglyPseudoconvex => 0.5 * ln_a,
            IndexFunction::Custom { ln_eval, eval, .. } => match ln_eval {
                Some(lf) => lf(ln_a),
                None => {
                    if ln_a <= 700.0 {
                        eval(ln_a.exp()).ln()
                    } else {
                        f64::INFINITY
                    }
                }
            },
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            IndexFunction::PowerLaw { eps } => eps * t.powf(eps - 1.0),
            IndexFunction::LogPower { s } => {
                (1.0 / s) * (1.0 + t.ln()).powf(1.0 / s - 1.0) / t
            }
            IndexFunction::StronglyPseudoconvex => 0.5 / t.sqrt(),
            IndexFunction::Custom { deriv, eval, .. } => match deriv {
                Some(d) => d(t),
                None => {
                    // central difference; the derivative only feeds diagnostics
                    let h = (1e-6 * t).max(1e-6);
                    (eval(t + h) - eval(t - h)) / (2.0 * h)
                }
            },
        }
    }

    fn tail_converges(&self) -> bool {
        match self {
            IndexFunction::PowerLaw { .. } | IndexFunction::StronglyPseudoconvex => true,
            IndexFunction::LogPower { s } => *s < 1.0,
            IndexFunction::Custom { convergent_tail, .. } => *convergent_tail,
        }
    }

    /// Closed-form g where the kind admits one.
    fn closed_g(&self, t: f64) -> Option<f64> {
        match self {
            IndexFunction::PowerLaw { eps } => Some(eps * t.powf(*eps)),
            IndexFunction::StronglyPseudoconvex => Some(0.5 * t.sqrt()),
            IndexFunction::LogPower { s } => {
                Some((1.0 / s - 1.0) * (1.0 + t.ln()).powf(1.0 / s - 1.0))
            }
            IndexFunction::Custom { .. } => None,
        }
    }

    /// Sampled checks of the defining invariants; returns violation messages.
    pub fn check_invariants(&self, samples: &[f64]) -> Vec<String> {
        let mut bad = Vec::new();
        let mut prev: Option<(f64, f64, f64)> = None;
        for &t in samples {
            let v = self.eval(t);
            if v < 1.0 - 1e-9 * (1.0 + v.abs()) {
                bad.push(format!("f({t}) = {v} < 1"));
            }
            let ratio = v / t.sqrt();
            if let Some((tp, vp, rp)) = prev {
                let slack = 1e-9 * (1.0 + v.abs() + vp.abs());
                if v < vp - slack {
                    bad.push(format!("f not nondecreasing between {tp} and {t}"));
                }
                if ratio > rp + 1e-9 * (1.0 + ratio.abs() + rp.abs()) {
                    bad.push(format!("f/sqrt(t) increases between {tp} and {t}"));
                }
            }
            prev = Some((t, v, ratio));
        }
        bad
    }
}

/// Relative-error quadrature evaluation of g(t) = (integral_t^inf da/(a f(a)))^{-1}.
///
/// Substituting a = t e^x maps the tail onto [0, inf); the head [0, X] is
/// integrated directly and the remainder is folded onto (0, 1] exactly by
/// x = X/u. Slowly growing f leaves an integrable endpoint singularity at
/// u = 0; its strength is probed and removed by a graded substitution
/// u = v^p before the adaptive pass. Custom functions without an `ln_eval`
/// lose the integrand beyond a ~ e^700; the dropped mass is bounded using
/// monotonicity of f and reported against `tol`.
pub fn compute_g_quadrature(f: &IndexFunction, t: f64, tol: f64) -> Result<f64> {
    if t < 1.0 {
        return Err(Error::OutOfRange { value: t, range: "t >= 1" });
    }
    if !f.tail_converges() {
        return Err(Error::DivergentTail(f.id()));
    }
    let ln_t = t.ln();
    let head = |x: f64| (-f.ln_eval(ln_t + x)).exp();
    const X: f64 = 8.0;
    let ln_tail = |u: f64| X.ln() - 2.0 * u.ln() - f.ln_eval(ln_t + X / u);

    // probe the endpoint exponent of the folded tail at u -> 0
    let (u_a, u_b) = (1e-4f64, 1e-8f64);
    let (la, lb) = (ln_tail(u_a), ln_tail(u_b));
    let slope = if lb == f64::NEG_INFINITY {
        1.0 // integrand vanishes toward the endpoint
    } else {
        (la - lb) / (u_a.ln() - u_b.ln())
    };
    if slope <= -1.0 + 1e-6 {
        return Err(Error::DivergentTail(format!(
            "{} (folded tail diverges with exponent {slope:.3})",
            f.id()
        )));
    }
    // u = v^p lifts the integrand exponent to p (slope + 1) - 1 >= 1
    let p = (2.0 / (slope + 1.0)).clamp(1.0, 64.0).ceil();
    let tail = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let ln_val = ln_tail(v.powf(p)) + p.ln() + (p - 1.0) * v.ln();
        ln_val.exp()
    };

    // rough pass to fix the absolute target, then the accurate pass
    let rough = adaptive(&head, 0.0, X, 1e-3).0 + adaptive(&tail, 0.0, 1.0, 1e-3).0;
    if !(rough.is_finite() && rough > 0.0) {
        return Err(Error::DivergentTail(format!("{} (tail integral not finite)", f.id())));
    }
    let target = 0.25 * tol * rough;
    let (head_v, head_e) = adaptive(&head, 0.0, X, target);
    let (tail_v, tail_e) = adaptive(&tail, 0.0, 1.0, target);

    // bound on integrand mass dropped past the overflow cap (custom kinds only)
    let dropped = match f {
        IndexFunction::Custom { ln_eval: None, eval, .. } => {
            (700.0 - ln_t).max(0.0) / eval(700f64.exp().min(f64::MAX))
        }
        _ => 0.0,
    };

    let integral = head_v + tail_v;
    let err = head_e + tail_e + dropped;
    if !(integral.is_finite() && integral > 0.0) {
        return Err(Error::DivergentTail(f.id()));
    }
    if err > tol * integral {
        return Err(Error::ToleranceNotMet { requested: tol, achieved: err / integral });
    }
    Ok(1.0 / integral)
}

/// g(t) within relative error `tol`; closed form when the kind admits one.
pub fn compute_g(f: &IndexFunction, t: f64, tol: f64) -> Result<f64> {
    if t < 1.0 {
        return Err(Error::OutOfRange { value: t, range: "t >= 1" });
    }
    if !f.tail_converges() {
        return Err(Error::DivergentTail(f.id()));
    }
    match f.closed_g(t) {
        Some(g) => Ok(g),
        None => compute_g_quadrature(f, t, tol),
    }
}

/// The derived index g with its evaluation tolerance. A closed-form override
/// makes per-pair gauge evaluation cheap for non-catalog gauges.
#[derive(Clone)]
pub struct GIndex {
    pub f: IndexFunction,
    pub quadrature_tolerance: f64,
    closed_override: Option<ScalarFn>,
}

impl fmt::Debug for GIndex {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "GIndex({})", self.f.id())
    }
}

impl GIndex {
    pub fn new(f: IndexFunction) -> Result<Self> {
        if !f.tail_converges() {
            return Err(Error::DivergentTail(f.id()));
        }
        Ok(GIndex { f, quadrature_tolerance: 1e-8, closed_override: None })
    }

    /// A gauge with an explicit closed form for g (bypasses quadrature).
    pub fn with_closed_form(f: IndexFunction, g: ScalarFn) -> Self {
        GIndex { f, quadrature_tolerance: 1e-8, closed_override: Some(g) }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if let Some(g) = &self.closed_override {
            return g(t.max(1.0));
        }
        compute_g(&self.f, t.max(1.0), self.quadrature_tolerance)
            .unwrap_or(f64::NAN)
    }

    /// Sampled checks: g > 0 nondecreasing, g/sqrt(t) nonincreasing.
    pub fn check_invariants(&self, samples: &[f64]) -> Vec<String> {
        let mut bad = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for &t in samples {
            let g = self.eval(t);
            if g.is_nan() || g <= 0.0 {
                bad.push(format!("g({t}) = {g} not positive"));
                continue;
            }
            if let Some((gp, rp)) = prev {
                if g < gp - 1e-9 * (1.0 + g + gp) {
                    bad.push(format!("g decreases at t = {t}"));
                }
                let r = g / t.sqrt();
                if r > rp + 1e-9 * (1.0 + r + rp) {
                    bad.push(format!("g/sqrt(t) increases at t = {t}"));
                }
            }
            prev = Some((g, g / t.sqrt()));
        }
        bad
    }
}

/// The modulus omega(delta) = g(delta^{-1/eta})^{-2} on (0, 1).
#[derive(Debug, Clone)]
pub struct ModulusOmega {
    pub g: GIndex,
    pub eta: f64,
}

impl ModulusOmega {
    pub fn new(g: GIndex, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::OutOfRange { value: eta, range: "eta in (0, 1)" });
        }
        Ok(ModulusOmega { g, eta })
    }

    pub fn omega(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::OutOfRange { value: delta, range: "delta in (0, 1)" });
        }
        let t = delta.powf(-1.0 / self.eta);
        let g = self.g.eval(t);
        Ok(g.powi(-2))
    }

    /// Monotone continuation used in compositions omega(-psi): 0 at arguments
    /// <= 0 and frozen at g(1)^{-2} past 1 (the gauge is undefined below t = 1).
    /// The constant continuation keeps the concave profiles concave.
    pub fn omega_clamped(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let t = if x >= 1.0 { 1.0 } else { x.powf(-1.0 / self.eta) };
        self.g.eval(t).powi(-2)
    }
}

/// Result of the eta search: eta maximizing the concavity margin
/// min_t [eta - g(t)/f(t) - t f'(t)/f(t)] over the sampled range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaSearch {
    pub eta: f64,
    pub margin: f64,
    /// margin >= 0 means omega is concave on the sampled delta range
    pub concave_certified: bool,
}

/// Search eta in [0.05, 0.95] maximizing the worst-case bracket margin at
/// t = delta^{-1/eta} over the given delta samples.
pub fn eta_search(g: &GIndex, deltas: &[f64]) -> EtaSearch {
    let margin = |eta: f64| -> f64 {
        let mut worst = f64::INFINITY;
        for &d in deltas {
            let t = d.powf(-1.0 / eta).max(1.0);
            let fv = g.f.eval(t);
            let m = eta - g.eval(t) / fv - t * g.f.deriv(t) / fv;
            if m < worst {
                worst = m;
            }
        }
        worst
    };
    let (mut lo, mut hi) = (0.05f64, 0.95f64);
    let mut best = (lo, margin(lo));
    for k in 0..=18 {
        let eta = lo + (hi - lo) * k as f64 / 18.0;
        let m = margin(eta);
        if m > best.1 {
            best = (eta, m);
        }
    }
    // golden-section refinement around the best grid point
    let step = (hi - lo) / 18.0;
    lo = (best.0 - step).max(0.05);
    hi = (best.0 + step).min(0.95);
    const PHI: f64 = 0.618_033_988_749_895;
    let (mut a, mut b) = (lo, hi);
    let (mut x1, mut x2) = (b - PHI * (b - a), a + PHI * (b - a));
    let (mut f1, mut f2) = (margin(x1), margin(x2));
    for _ in 0..40 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + PHI * (b - a);
            f2 = margin(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - PHI * (b - a);
            f1 = margin(x1);
        }
    }
    let eta = 0.5 * (a + b);
    let m = margin(eta);
    let (eta, m) = if m >= best.1 { (eta, m) } else { best };
    EtaSearch { eta, margin: m, concave_certified: m >= 0.0 }
}

/// Per-property verdict with the worst slack observed and witness arguments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub property: String,
    pub verdict: bool,
    pub worst_slack: f64,
    pub witness_points: Vec<f64>,
}

impl PropertyVerdict {
    fn new(property: &str) -> Self {
        PropertyVerdict {
            property: property.into(),
            verdict: true,
            worst_slack: 0.0,
            witness_points: Vec::new(),
        }
    }

    fn record(&mut self, slack: f64, witnesses: &[f64]) {
        if slack > self.worst_slack {
            self.worst_slack = slack;
            self.witness_points = witnesses.to_vec();
        }
        if slack > 0.0 {
            self.verdict = false;
        }
    }
}

/// Report of the omega-lemma property suite.
///
/// The difference inequality is evaluated in both directions: subadditive
/// `|omega(d) - omega(d')| <= omega(|d - d'|)` (holds when omega is concave on
/// the sampled range) and superadditive `>=` (holds when omega is convex, e.g.
/// the pure-power moduli of the strongly pseudoconvex gauge). `difference_holds`
/// is true when at least one direction holds uniformly; both verdicts are kept.
/// Midpoint concavity and convexity are likewise both recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaLemmaReport {
    pub f_id: String,
    pub eta: f64,
    pub monotone: PropertyVerdict,
    pub vanishing: PropertyVerdict,
    pub concave_midpoint: PropertyVerdict,
    pub convex_midpoint: PropertyVerdict,
    pub subadditive: PropertyVerdict,
    pub superadditive: PropertyVerdict,
    pub difference_holds: bool,
    pub difference_direction: String,
    pub scaling: Vec<ScalingFit>,
    pub scaling_pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    pub c: f64,
    pub fitted_c_prime: f64,
}

fn slack_tol(a: f64, b: f64) -> f64 {
    1e-9 * (1.0 + a.abs() + b.abs())
}

/// Property-test the omega lemma on the given sorted samples.
pub fn check_omega_lemma(m: &ModulusOmega, delta_samples: &[f64]) -> Result<OmegaLemmaReport> {
    for &d in delta_samples {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::OutOfRange { value: d, range: "delta in (0, 1)" });
        }
    }
    if delta_samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::OutOfRange {
            value: f64::NAN,
            range: "delta samples sorted ascending",
        });
    }
    let omegas: Vec<f64> = delta_samples
        .iter()
        .map(|&d| m.omega(d))
        .collect::<Result<_>>()?;

    let mut monotone = PropertyVerdict::new("monotone-nondecreasing");
    for i in 1..omegas.len() {
        let slack = omegas[i - 1] - omegas[i] - slack_tol(omegas[i - 1], omegas[i]);
        monotone.record(slack, &[delta_samples[i - 1], delta_samples[i]]);
    }

    // vanishing limit, probed well below the sampled range
    let mut vanishing = PropertyVerdict::new("vanishing-limit");
    if let Some(&w_max) = omegas.last() {
        let probe = m.omega(1e-15)?;
        vanishing.record(probe - 0.5 * w_max, &[1e-15, probe]);
    }

    let mut concave = PropertyVerdict::new("midpoint-concave");
    let mut convex = PropertyVerdict::new("midpoint-convex");
    let mut sub = PropertyVerdict::new("difference-subadditive");
    let mut sup = PropertyVerdict::new("difference-superadditive");
    for i in 0..delta_samples.len() {
        for j in (i + 1)..delta_samples.len() {
            let (a, b) = (delta_samples[i], delta_samples[j]);
            let (wa, wb) = (omegas[i], omegas[j]);
            let wm = m.omega(0.5 * (a + b))?;
            let avg = 0.5 * (wa + wb);
            concave.record(avg - wm - slack_tol(avg, wm), &[a, b]);
            convex.record(wm - avg - slack_tol(avg, wm), &[a, b]);
            let gap = (b - a).abs();
            if gap > 0.0 && gap < 1.0 {
                let wd = m.omega(gap)?;
                let diff = (wb - wa).abs();
                sub.record(diff - wd - slack_tol(diff, wd), &[a, b]);
                sup.record(wd - diff - slack_tol(diff, wd), &[a, b]);
            }
        }
    }

    let mut scaling = Vec::new();
    let mut scaling_pass = true;
    for &c in &[2.0, 5.0, 10.0] {
        let mut worst = 0.0f64;
        for (k, &d) in delta_samples.iter().enumerate() {
            let cd = c * d;
            if cd < 1.0 {
                let ratio = m.omega(cd)? / omegas[k].max(1e-300);
                if ratio > worst {
                    worst = ratio;
                }
            }
        }
        if !worst.is_finite() {
            scaling_pass = false;
        }
        scaling.push(ScalingFit { c, fitted_c_prime: worst });
    }

    let difference_holds = sub.verdict || sup.verdict;
    let difference_direction = match (sub.verdict, sup.verdict) {
        (true, true) => "both".into(),
        (true, false) => "subadditive".into(),
        (false, true) => "superadditive".into(),
        (false, false) => "neither".into(),
    };

    Ok(OmegaLemmaReport {
        f_id: m.g.f.id(),
        eta: m.eta,
        monotone,
        vanishing,
        concave_midpoint: concave,
        convex_midpoint: convex,
        subadditive: sub,
        superadditive: sup,
        difference_holds,
        difference_direction,
        scaling,
        scaling_pass,
    })
}

/// A numeric witness candidate for the f-Property: a weight on the strip
/// {-delta < r < 0} with Hessian access by central differences.
#[derive(Clone)]
pub struct FPropertyWitness {
    pub delta: f64,
    pub weight: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
    pub f: IndexFunction,
    pub domain: DomainSpec,
}

/// Outcome of sampling a witness family over strip points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessReport {
    pub delta: f64,
    /// min over samples of lambda_min(i ddbar phi) / f(1/delta)^2
    pub min_hessian_ratio: f64,
    /// max over samples of |D phi| * delta
    pub max_gradient_ratio: f64,
    /// samples where phi leaves [-1, 0]
    pub range_violations: usize,
    pub samples: usize,
}

/// Check the witness bounds at the given strip samples. Derivatives use
/// central differences at step delta/100.
pub fn verify_f_property_witness(
    w: &FPropertyWitness,
    strip_samples: &[Point],
) -> Result<WitnessReport> {
    let h = w.delta / 100.0;
    let fsq = w.f.eval(1.0 / w.delta).powi(2);
    let mut min_ratio = f64::INFINITY;
    let mut max_grad = 0.0f64;
    let mut range_violations = 0usize;
    for p in strip_samples {
        let r = w.domain.r(p);
        if !(r < 0.0 && r > -w.delta) {
            return Err(Error::SampleOutsideStrip(p.coords));
        }
        let val = (w.weight)(p);
        if !(-1.0 - 1e-9..=1e-9).contains(&val) {
            range_violations += 1;
        }
        let hp = crate::operator::hessian_of_fn(w.weight.as_ref(), p, h);
        let ratio = hp.lambda_min() / fsq;
        if ratio < min_ratio {
            min_ratio = ratio;
        }
        let mut grad2 = 0.0;
        for axis in 0..p.dim {
            let mut e = [0.0; 4];
            e[axis] = 1.0;
            let d = ((w.weight)(&p.add_scaled(&e, h)) - (w.weight)(&p.add_scaled(&e, -h)))
                / (2.0 * h);
            grad2 += d * d;
        }
        let g = grad2.sqrt() * w.delta;
        if g > max_grad {
            max_grad = g;
        }
    }
    Ok(WitnessReport {
        delta: w.delta,
        min_hessian_ratio: min_ratio,
        max_gradient_ratio: max_grad,
        range_violations,
        samples: strip_samples.len(),
    })
}

/// Log-spaced values between lo and hi inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

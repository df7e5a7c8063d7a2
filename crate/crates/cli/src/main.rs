//! `cma`: named, reproducible experiments over the Monge-Ampere toolkit.
//! One experiment per invocation; outputs are written atomically and listed
//! in a manifest with content digests.

use clap::{Args, Parser, Subcommand};
use cma_core::barriers::{
    barrier_envelope, barrier_v, build_rho, cphi, rho_from_oracle, upper_barrier, BarrierSpec,
    ConstantLedger, DefiningRho,
};
use cma_core::geometry::{sample_boundary, validate_peak, PeakFamily};
use cma_core::index::{
    check_omega_lemma, compute_g, eta_search, log_spaced, verify_f_property_witness,
    FPropertyWitness, GIndex, IndexFunction, ModulusOmega,
};
use cma_core::regularity::{
    closed_form_u_e, dyadic_scales, estimate_modulus, membership_verdict, scaled_cloud,
    sharpness_probe, ModulusConfig,
};
use cma_core::solver::{sandwich_check, solve, BoundaryData, Density, ProblemSpec, SolveConfig};
use cma_core::verification::verify_all;
use cma_core::{DomainSpec, Error, Grid, Point, ScalarField};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

const SCHEMA_VERSION: &str = "1";

#[derive(Parser)]
#[command(name = "cma", version, about = "Grid experiments for the complex Monge-Ampere Dirichlet problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OutArg {
    /// Output directory (default $CMA_OUT_DIR or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate f, g and omega over a log-spaced t range
    Gfun {
        /// index function: `power:<eps>` | `logpower:<s>` | `strongly-pseudoconvex`
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 10.0)]
        t_min: f64,
        #[arg(long, default_value_t = 1e6)]
        t_max: f64,
        #[arg(long, default_value_t = 40)]
        count: usize,
        /// modulus exponent; `auto` selects by the concavity-margin search
        #[arg(long, default_value = "auto")]
        eta: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Property-test the modulus omega over log-spaced deltas
    OmegaCheck {
        #[arg(long)]
        f: String,
        #[arg(long, default_value = "auto")]
        eta: String,
        #[arg(long, default_value_t = 1e-6)]
        delta_min: f64,
        #[arg(long, default_value_t = 1e-3)]
        delta_max: f64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Check the strip-weight witness (|z|^2 - 1)/delta on a catalog ball
    Witness {
        #[arg(long, default_value = "ball2")]
        domain: String,
        #[arg(long, default_value = "strongly-pseudoconvex")]
        f: String,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Build the defining function and the barrier family
    Barriers {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value = "power:0.25")]
        f: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 32)]
        mesh_count: usize,
        #[arg(long, default_value_t = 0.0625)]
        grid_spacing: f64,
        #[arg(long, default_value = "zero")]
        phi: String,
        #[arg(long, default_value = "zero")]
        h: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Solve `det[u_ij] = h` with u = phi on the boundary
    Solve {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value = "strongly-pseudoconvex")]
        f: String,
        #[arg(long, default_value = "zero")]
        phi: String,
        #[arg(long, default_value = "one")]
        h: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0625)]
        spacing: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
        /// solve on the (r1, r2) reduction (rotation-invariant data only)
        #[arg(long, default_value_t = false)]
        radial: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Estimate the G^alpha modulus of a sampled function
    Modulus {
        /// CSV of samples: `x1,y1[,x2,y2],value`
        #[arg(long, conflicts_with_all = ["function", "from_solve"])]
        input: Option<PathBuf>,
        /// field.csv emitted by a solve run (radial coordinates are embedded)
        #[arg(long, conflicts_with = "function")]
        from_solve: Option<PathBuf>,
        /// catalog function: `u-e:<s>:<alpha>` | `abs-z1:<beta>` | `re-z1`
        #[arg(long)]
        function: Option<String>,
        /// domain for cloud sampling and boundary focus
        #[arg(long, default_value = "exp-ellipsoid:0.5")]
        domain: String,
        /// gauge id (as `--f`) or `identity` for the Lipschitz gauge
        #[arg(long, default_value = "logpower:0.5")]
        g: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-4)]
        scale_min: f64,
        #[arg(long, default_value_t = 1e-1)]
        scale_max: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 12_000_000)]
        pairs: usize,
        #[arg(long, default_value_t = 20.0)]
        spread_cap: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Tabulate the infinite-type sharpness quantities
    Sharpness {
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 4)]
        eps_decades: u32,
        #[arg(long, default_value_t = 4)]
        per_decade: u32,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run every module's property suite
    VerifyAll {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// List catalog entries for domains, index functions and data
    Catalog,
    /// Run an experiment described by a flat JSON config
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    std::process::exit(code);
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid { .. } => 2,
        Error::NotConverged { .. } => 4,
        _ => 3,
    }
}

/// Output collector: atomic writes plus a digest manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
    stages: Vec<(String, f64)>,
    started: Instant,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: &'a str,
    artifact_version: &'a str,
    config: serde_json::Value,
    wall_clock_seconds: f64,
    stages: Vec<StageEntry>,
    files: Vec<FileEntry>,
}

#[derive(Serialize)]
struct StageEntry {
    stage: String,
    seconds: f64,
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

impl Outputs {
    fn new(arg: &OutArg) -> Result<Outputs, Error> {
        let dir = arg
            .out
            .clone()
            .or_else(|| std::env::var_os("CMA_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).map_err(|e| Error::ConfigInvalid {
            key: "out".into(),
            reason: format!("cannot create {}: {e}", dir.display()),
        })?;
        Ok(Outputs { dir, files: Vec::new(), stages: Vec::new(), started: Instant::now() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Error> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!("{name}.tmp"));
        let io_err = |e: std::io::Error| Error::ConfigInvalid {
            key: "out".into(),
            reason: format!("write {}: {e}", path.display()),
        };
        std::fs::write(&tmp, bytes).map_err(io_err)?;
        std::fs::rename(&tmp, &path).map_err(io_err)?;
        let mut h = Sha256::new();
        h.update(bytes);
        let digest = h.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.files.push((name.to_string(), hex));
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Error> {
        let mut body = serde_json::json!({ "schema_version": SCHEMA_VERSION });
        let v = serde_json::to_value(value).expect("serializable");
        body["report"] = v;
        let bytes = serde_json::to_vec_pretty(&body).expect("serializable");
        self.write(name, &bytes)
    }

    fn stage(&mut self, name: &str, started: Instant) {
        self.stages.push((name.to_string(), started.elapsed().as_secs_f64()));
    }

    fn finish(self, config: serde_json::Value) -> Result<(), Error> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION"),
            config,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            stages: self
                .stages
                .iter()
                .map(|(s, t)| StageEntry { stage: s.clone(), seconds: *t })
                .collect(),
            files: self
                .files
                .iter()
                .map(|(n, d)| FileEntry { name: n.clone(), sha256: d.clone() })
                .collect(),
        };
        let bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
        let path = self.dir.join("manifest.json");
        let tmp = self.dir.join("manifest.json.tmp");
        let io_err = |e: std::io::Error| Error::ConfigInvalid {
            key: "out".into(),
            reason: format!("write manifest: {e}"),
        };
        std::fs::write(&tmp, &bytes).map_err(io_err)?;
        std::fs::rename(&tmp, &path).map_err(io_err)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn validate_alpha_spacing(alpha: f64, spacing: f64) -> Result<(), Error> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::ConfigInvalid {
            key: "alpha".into(),
            reason: format!("alpha = {alpha} must lie in (0, 1]"),
        });
    }
    if !(spacing > 0.0) {
        return Err(Error::ConfigInvalid {
            key: "spacing".into(),
            reason: format!("spacing = {spacing} must be positive"),
        });
    }
    Ok(())
}

fn parse_eta(g: &GIndex, eta: &str, deltas: &[f64]) -> Result<f64, Error> {
    if eta == "auto" {
        Ok(eta_search(g, deltas).eta)
    } else {
        eta.parse::<f64>().map_err(|_| Error::ConfigInvalid {
            key: "eta".into(),
            reason: format!("expected a number or `auto`, got `{eta}`"),
        })
    }
}

fn parse_gauge(id: &str) -> Result<GIndex, Error> {
    if id == "identity" {
        return Ok(GIndex::with_closed_form(
            IndexFunction::Custom {
                eval: Arc::new(|t: f64| t),
                deriv: Some(Arc::new(|_| 1.0)),
                ln_eval: Some(Arc::new(|l: f64| l)),
                convergent_tail: true,
            },
            Arc::new(|t: f64| t),
        ));
    }
    GIndex::new(IndexFunction::parse(id)?)
}

fn field_csv(field: &ScalarField, extra: Option<(&str, &ScalarField)>) -> String {
    let grid = &field.grid;
    let mut out = String::new();
    let coord_header = if grid.dim == 2 {
        if grid.radial { "r1,r2" } else { "x,y" }
    } else {
        "x1,y1,x2,y2"
    };
    out.push_str(coord_header);
    out.push_str(",class,value");
    if let Some((name, _)) = extra {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..grid.node_count() {
        if !grid.is_inside(i) {
            continue;
        }
        let p = grid.node_point(i);
        for a in 0..grid.dim {
            out.push_str(&format!("{},", p.coords[a]));
        }
        let class = match grid.class[i] {
            cma_core::NodeClass::Interior => "interior",
            cma_core::NodeClass::BoundaryAdjacent => "boundary_adjacent",
            cma_core::NodeClass::Exterior => "exterior",
        };
        out.push_str(&format!("{class},{}", field.values[i]));
        if let Some((_, f2)) = extra {
            out.push_str(&format!(",{}", f2.values[i]));
        }
        out.push('\n');
    }
    out
}

/// Closed-form solutions registered by (domain, phi, h) catalog ids.
fn oracle_for(domain: &DomainSpec, phi: &str, h: &str) -> Option<Box<dyn Fn(&Point) -> f64>> {
    let id = domain.id();
    match (id.as_str(), phi, h) {
        ("disk", "zero", "one") | ("ball2", "zero", "one") => {
            Some(Box::new(|p: &Point| p.norm2() - 1.0))
        }
        (_, "zero", "zero") => Some(Box::new(|_| 0.0)),
        _ => {
            if let cma_core::geometry::DomainCatalog::ExpEllipsoid { s } = domain.catalog {
                if h == "zero" {
                    if let Some(a) = phi.strip_prefix("neg-abs-z1:") {
                        let alpha: f64 = a.parse().ok()?;
                        return Some(Box::new(move |p: &Point| {
                            -cma_core::solver::exp_ellipsoid_profile(p.z(1).norm(), s, alpha)
                        }));
                    }
                    if let Some(a) = phi.strip_prefix("abs-z1:") {
                        let alpha: f64 = a.parse().ok()?;
                        return Some(Box::new(move |p: &Point| p.z(0).norm().powf(alpha)));
                    }
                }
            }
            None
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Gfun { f, t_min, t_max, count, eta, out } => {
            let config = serde_json::json!({
                "experiment": "gfun", "f": f, "t_min": t_min, "t_max": t_max,
                "count": count, "eta": eta,
            });
            let mut outputs = Outputs::new(&out)?;
            let stage = Instant::now();
            let func = IndexFunction::parse(&f)?;
            let g = GIndex::new(func.clone())?;
            let eta_v = parse_eta(&g, &eta, &log_spaced(1e-6, 1e-3, 50))?;
            let m = ModulusOmega::new(g.clone(), eta_v)?;
            let mut csv = String::from("t,f,g,omega_at_1_over_t\n");
            for t in log_spaced(t_min.max(1.0 + 1e-9), t_max, count) {
                let gv = compute_g(&func, t, 1e-8)?;
                let omega = m.omega((1.0 / t).clamp(1e-300, 1.0 - 1e-12))?;
                csv.push_str(&format!("{t},{},{gv},{omega}\n", func.eval(t)));
            }
            outputs.write("gfun.csv", csv.as_bytes())?;
            outputs.stage("tabulate", stage);
            outputs.finish(config)
        }
        Command::OmegaCheck { f, eta, delta_min, delta_max, count, out } => {
            let config = serde_json::json!({
                "experiment": "omega-check", "f": f, "eta": eta,
                "delta_min": delta_min, "delta_max": delta_max, "count": count,
            });
            let mut outputs = Outputs::new(&out)?;
            let stage = Instant::now();
            let g = GIndex::new(IndexFunction::parse(&f)?)?;
            let deltas = log_spaced(delta_min, delta_max, count);
            let eta_v = parse_eta(&g, &eta, &deltas)?;
            let m = ModulusOmega::new(g, eta_v)?;
            let report = check_omega_lemma(&m, &deltas)?;
            outputs.write_json("omega_report.json", &report)?;
            outputs.stage("property-check", stage);
            outputs.finish(config)
        }
        Command::Witness { domain, f, delta, samples, out } => {
            let config = serde_json::json!({
                "experiment": "witness", "domain": domain, "f": f,
                "delta": delta, "samples": samples,
            });
            let mut outputs = Outputs::new(&out)?;
            let stage = Instant::now();
            let d = DomainSpec::parse(&domain)?;
            if !matches!(
                d.catalog,
                cma_core::geometry::DomainCatalog::Disk | cma_core::geometry::DomainCatalog::Ball2
            ) {
                return Err(Error::ConfigInvalid {
                    key: "domain".into(),
                    reason: "the shipped witness family is the ball weight (|z|^2 - 1)/delta".into(),
                });
            }
            let func = IndexFunction::parse(&f)?;
            let dd = delta;
            let witness = FPropertyWitness {
                delta,
                weight: Arc::new(move |p: &Point| (p.norm2() - 1.0) / dd),
                f: func,
                domain: d.clone(),
            };
            // strip points: boundary mesh scaled inward to -delta < r < 0
            let mesh = sample_boundary(&d, samples.max(8))?;
            let mut pts = Vec::new();
            for (k, zeta) in mesh.points.iter().enumerate() {
                let u = (k as f64 + 0.5) / mesh.points.len() as f64;
                let t = ((1.0 - delta).sqrt() + u * (1.0 - (1.0 - delta).sqrt())).min(1.0 - 1e-9);
                let mut coords = [0.0; 4];
                for a in 0..d.real_dim() {
                    coords[a] = zeta.coords[a] * t;
                }
                pts.push(Point { coords, dim: d.real_dim() });
            }
            let report = verify_f_property_witness(&witness, &pts)?;
            outputs.write_json("witness_report.json", &report)?;
            outputs.stage("verify", stage);
            outputs.finish(config)
        }
        Command::Barriers {
            domain,
            f,
            alpha,
            mesh_count,
            grid_spacing,
            phi,
            h,
            seed,
            out,
        } => {
            let config = serde_json::json!({
                "experiment": "barriers", "domain": domain, "f": f, "alpha": alpha,
                "mesh_count": mesh_count, "grid_spacing": grid_spacing,
                "phi": phi, "h": h, "seed": seed,
            });
            let mut outputs = Outputs::new(&out)?;
            run_barriers(
                &mut outputs,
                &domain,
                &f,
                alpha,
                mesh_count,
                grid_spacing,
                &phi,
                &h,
                seed,
            )?;
            outputs.finish(config)
        }
        Command::Solve { domain, f, phi, h, alpha, spacing, tol, max_sweeps, radial, out } => {
            let config = serde_json::json!({
                "experiment": "solve", "domain": domain, "f": f, "phi": phi, "h": h,
                "alpha": alpha, "spacing": spacing, "tol": tol,
                "max_sweeps": max_sweeps, "radial": radial,
            });
            let mut outputs = Outputs::new(&out)?;
            let stage = Instant::now();
            validate_alpha_spacing(alpha, spacing)?;
            let p = ProblemSpec {
                domain: DomainSpec::parse(&domain)?,
                phi: BoundaryData::parse(&phi)?,
                h: Density::parse(&h)?,
                alpha,
            };
            let cfg = SolveConfig { spacing, tol, max_sweeps, radial };
            let report = solve(&p, &cfg)?;
            outputs.stage("solve", stage);
            let stage = Instant::now();
            outputs.write_json("solve_report.json", &report)?;
            outputs.write("field.csv", field_csv(&report.field, None).as_bytes())?;
            let mut log = String::from("sweep,max_update,min_update\n");
            for (k, (max_up, min_up)) in report.sweep_log.iter().enumerate() {
                log.push_str(&format!("{},{max_up},{min_up}\n", k + 1));
            }
            outputs.write("sweep_log.csv", log.as_bytes())?;
            if let Some(oracle) = oracle_for(&p.domain, &phi, &h) {
                let grid = report.field.grid.clone();
                let exact = if radial {
                    ScalarField::from_fn_inside(grid, |q| {
                        oracle(&Point::new4(q.coords[0], 0.0, q.coords[1], 0.0))
                    })
                } else {
                    ScalarField::from_fn_inside(grid, |q| oracle(q))
                };
                let mut csv = String::from("max_abs_error\n");
                csv.push_str(&format!("{}\n", report.field.max_abs_diff(&exact)));
                outputs.write("error_vs_oracle.csv", csv.as_bytes())?;
                outputs.write(
                    "field_vs_oracle.csv",
                    field_csv(&report.field, Some(("oracle", &exact))).as_bytes(),
                )?;
            }
            outputs.stage("emit", stage);
            if !report.converged {
                outputs.finish(config)?;
                return Err(Error::NotConverged {
                    sweeps: report.sweeps,
                    final_update: report.final_update,
                });
            }
            outputs.finish(config)
        }
        Command::Modulus {
            input,
            from_solve,
            function,
            domain,
            g,
            alpha,
            scale_min,
            scale_max,
            seed,
            pairs,
            spread_cap,
            out,
        } => {
            let config = serde_json::json!({
                "experiment": "modulus", "input": input, "from_solve": from_solve,
                "function": function, "domain": domain, "g": g, "alpha": alpha,
                "scale_min": scale_min, "scale_max": scale_max, "seed": seed,
                "pairs": pairs, "spread_cap": spread_cap,
            });
            let mut outputs = Outputs::new(&out)?;
            let stage = Instant::now();
            let d = DomainSpec::parse(&domain)?;
            let scales = dyadic_scales(scale_min, scale_max);
            let samples: Vec<(Point, f64)> = match (&input, &from_solve, &function) {
                (Some(path), _, _) => read_samples_csv(path)?,
                (None, Some(path), _) => read_field_csv(path)?,
                (None, None, Some(spec)) => {
                    let func = parse_sample_function(spec)?;
                    scaled_cloud(&d, &scales, 32, seed)?
                        .iter()
                        .map(|p| (*p, func(p)))
                        .collect()
                }
                (None, None, None) => {
                    return Err(Error::ConfigInvalid {
                        key: "input".into(),
                        reason: "need --input CSV, --from-solve field.csv, or --function".into(),
                    })
                }
            };
            let gauge = parse_gauge(&g)?;
            let cfg = ModulusConfig {
                pair_budget: pairs,
                boundary_focus: 0.7,
                seed,
                domain: Some(d),
            };
            let report = estimate_modulus(&samples, &gauge, alpha, &cfg, &scales)?;
            let verdict = membership_verdict(&report, spread_cap)?;
            let mut csv = String::from("scale,m_raw,m_monotone,ratio,pairs\n");
            for k in 0..report.scales.len() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    report.scales[k],
                    report.m_raw[k],
                    report.m_monotone[k],
                    report.ratios[k],
                    report.pair_counts[k]
                ));
            }
            outputs.write("modulus_scales.csv", csv.as_bytes())?;
            outputs.write_json(
                "modulus_report.json",
                &serde_json::json!({ "report": report, "verdict": format!("{verdict:?}") }),
            )?;
            outputs.stage("estimate", stage);
            outputs.finish(config)
        }
        Command::Sharpness { s, alpha, eps_decades, per_decade, out } => {
            let config = serde_json::json!({
                "experiment": "sharpness", "s": s, "alpha": alpha,
                "eps_decades": eps_decades, "per_decade": per_decade,
            });
            let mut outputs = Outputs::new(&out)?;
            let stage = Instant::now();
            let total = (eps_decades * per_decade) as usize;
            let eps: Vec<f64> = (0..=total)
                .map(|k| 0.1 * 10f64.powf(-(k as f64) / per_decade as f64))
                .collect();
            let report = sharpness_probe(s, alpha, &eps)?;
            let mut csv = String::from(
                "eps,u_z,u_w,delta_u,u_z_f_based,u_w_f_based,g_bound,f_difference_neg_pow,ratio_fdiff_over_g\n",
            );
            for r in &report.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.eps,
                    r.u_z,
                    r.u_w,
                    r.delta_u,
                    r.u_z_f_based,
                    r.u_w_f_based,
                    r.g_bound,
                    r.f_difference_neg_pow,
                    r.ratio_fdiff_over_g
                ));
            }
            outputs.write("sharpness.csv", csv.as_bytes())?;
            outputs.write_json("sharpness_report.json", &report)?;
            outputs.stage("probe", stage);
            outputs.finish(config)
        }
        Command::VerifyAll { seed, out } => {
            let config = serde_json::json!({ "experiment": "verify-all", "seed": seed });
            let mut outputs = Outputs::new(&out)?;
            let stage = Instant::now();
            let verdicts = verify_all(seed);
            let mut failures = 0usize;
            for m in &verdicts {
                outputs.write_json(&format!("verdicts_{}.json", m.module), m)?;
                for v in &m.verdicts {
                    if !v.pass {
                        failures += 1;
                        eprintln!("FAIL {}::{}: {}", m.module, v.check, v.detail);
                    }
                }
            }
            outputs.stage("verify-all", stage);
            outputs.finish(config)?;
            if failures > 0 {
                return Err(Error::ConfigInvalid {
                    key: "verify-all".into(),
                    reason: format!("{failures} property checks failed"),
                });
            }
            println!("all property suites passed");
            Ok(())
        }
        Command::Catalog => {
            print_catalog();
            Ok(())
        }
        Command::Run { config } => run_from_config(&config),
    }
}

fn parse_sample_function(spec: &str) -> Result<Box<dyn Fn(&Point) -> f64>, Error> {
    if let Some(rest) = spec.strip_prefix("u-e:") {
        let mut it = rest.split(':');
        let s: f64 = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad_function(spec))?;
        let alpha: f64 = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad_function(spec))?;
        return Ok(Box::new(move |p: &Point| {
            closed_form_u_e(p, s, alpha).unwrap_or(f64::NAN)
        }));
    }
    if let Some(b) = spec.strip_prefix("abs-z1:") {
        let beta: f64 = b.parse().map_err(|_| bad_function(spec))?;
        return Ok(Box::new(move |p: &Point| p.z(0).norm().powf(beta)));
    }
    if spec == "re-z1" {
        return Ok(Box::new(|p: &Point| p.coords[0]));
    }
    Err(bad_function(spec))
}

fn bad_function(spec: &str) -> Error {
    Error::ConfigInvalid {
        key: "function".into(),
        reason: format!("unknown sample function `{spec}` (u-e:<s>:<alpha> | abs-z1:<b> | re-z1)"),
    }
}

/// Parse a `field.csv` from a solve run: coordinate columns, a class column,
/// and the value. Radial (r1, r2) rows are embedded as (r1, 0, r2, 0).
fn read_field_csv(path: &Path) -> Result<Vec<(Point, f64)>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigInvalid {
        key: "from_solve".into(),
        reason: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let cols: Vec<&str> = header.split(',').collect();
    let radial = cols.first() == Some(&"r1");
    let n_coords = cols.iter().take_while(|c| **c != "class").count();
    if !(n_coords == 2 || n_coords == 4) {
        return Err(Error::ConfigInvalid {
            key: "from_solve".into(),
            reason: format!("unrecognized header `{header}`"),
        });
    }
    let mut out = Vec::new();
    for (ln, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != n_coords + 2 {
            continue;
        }
        let mut coords = [0.0f64; 4];
        for (a, v) in parts[..n_coords].iter().enumerate() {
            coords[a] = v.parse().map_err(|e| Error::ConfigInvalid {
                key: "from_solve".into(),
                reason: format!("line {}: {e}", ln + 2),
            })?;
        }
        let value: f64 = parts[n_coords + 1].parse().map_err(|e| Error::ConfigInvalid {
            key: "from_solve".into(),
            reason: format!("line {}: {e}", ln + 2),
        })?;
        let p = if radial {
            Point::new4(coords[0], 0.0, coords[1], 0.0)
        } else if n_coords == 2 {
            Point::new2(coords[0], coords[1])
        } else {
            Point::new4(coords[0], coords[1], coords[2], coords[3])
        };
        out.push((p, value));
    }
    Ok(out)
}

fn read_samples_csv(path: &Path) -> Result<Vec<(Point, f64)>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigInvalid {
        key: "input".into(),
        reason: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(|c: char| c.is_alphabetic()) {
            continue; // header or blank
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::ConfigInvalid {
                key: "input".into(),
                reason: format!("line {}: {e}", ln + 1),
            })?;
        match vals.len() {
            3 => out.push((Point::new2(vals[0], vals[1]), vals[2])),
            5 => out.push((Point::new4(vals[0], vals[1], vals[2], vals[3]), vals[4])),
            n => {
                return Err(Error::ConfigInvalid {
                    key: "input".into(),
                    reason: format!("line {}: expected 3 or 5 columns, got {n}", ln + 1),
                })
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn run_barriers(
    outputs: &mut Outputs,
    domain: &str,
    f: &str,
    alpha: f64,
    mesh_count: usize,
    grid_spacing: f64,
    phi_id: &str,
    h_id: &str,
    seed: u64,
) -> Result<(), Error> {
    let stage = Instant::now();
    validate_alpha_spacing(alpha, grid_spacing)?;
    let d = DomainSpec::parse(domain)?;
    let func = IndexFunction::parse(f)?;
    let g = GIndex::new(func)?;
    let phi = BoundaryData::parse(phi_id)?;
    let h = Density::parse(h_id)?;
    let grid = Arc::new(Grid::classify(&d, grid_spacing)?);

    // defining function: the peak construction on convex domains, the exact
    // oracle on the unit ball in C^2
    let rho: DefiningRho = if d.id() == "ball2" {
        rho_from_oracle(grid.clone(), |p| p.norm2() - 1.0, "unit-ball")
    } else if d.convex() {
        let es = eta_search(&g, &log_spaced(1e-6, 1e-3, 50));
        let mesh = sample_boundary(&d, mesh_count)?;
        let fam = PeakFamily::linear(&d, mesh, es.eta)?;
        let mut fit = grid.seeded_interior_points(400, seed);
        fit.extend(sample_boundary(&d, 128)?.points);
        let peak_report = validate_peak(&fam, &g, &fit);
        let omega = ModulusOmega::new(g.clone(), es.eta)?;
        let probe = sample_boundary(&d, (4 * mesh_count).max(64) + 1)?;
        build_rho(fam, &peak_report, omega, grid.clone(), &probe, seed)?
    } else {
        return Err(Error::NonConvexDomain(d.id()));
    };

    // boundary Holder constant and the barrier scale
    let mesh = sample_boundary(&d, 256)?;
    let phi_samples: Vec<(Point, f64)> =
        mesh.points.iter().map(|p| (*p, phi.eval(p))).collect();
    let c_phi = cphi(&phi_samples, alpha)?;
    let h_sup = grid
        .inside_nodes()
        .iter()
        .map(|&i| h.eval(&grid.node_point(i)))
        .fold(0.0, f64::max);
    let n = d.n();
    // max(-2 rho + |z - zeta|^2) over nodes x anchors
    let anchor_mesh = sample_boundary(&d, mesh_count)?;
    let mut max_s = 0.0f64;
    for &i in &grid.inside_nodes() {
        let p = grid.node_point(i);
        let r = rho.field.values[i];
        for zeta in &anchor_mesh.points {
            max_s = max_s.max(-2.0 * r + p.dist2(zeta));
        }
    }
    let max_z_sq = grid
        .inside_nodes()
        .iter()
        .map(|&i| grid.node_point(i).norm2())
        .fold(0.0, f64::max);
    let mut ledger = ConstantLedger::assemble(
        n,
        alpha,
        c_phi,
        max_s,
        h_sup.powf(1.0 / n as f64),
        h_sup.powf(1.0 / n as f64),
        1.0,
        max_z_sq,
    );
    outputs.stage("setup", stage);

    let stage = Instant::now();
    let rho_values = rho.field.clone();
    let barriers: Vec<_> = anchor_mesh
        .points
        .iter()
        .map(|zeta| {
            let spec = BarrierSpec {
                zeta: *zeta,
                phi_zeta: phi.eval(zeta),
                k: ledger.k,
                alpha,
            };
            barrier_v(&spec, &ledger, |p| {
                rho_values
                    .grid
                    .nearest_node(p)
                    .map(|i| rho_values.values[i])
                    .filter(|v| v.is_finite())
                    .unwrap_or(0.0)
            }, &grid)
        })
        .collect::<Result<_, _>>()?;
    let envelope = barrier_envelope(&barriers)?;
    let upper = upper_barrier(&phi, grid.clone())?;
    // fit the uniform norms that back C0 and K3
    let scales = dyadic_scales(2.0 * grid_spacing, 0.5);
    let fit_norm = |field: &ScalarField, salt: u64| -> Result<f64, Error> {
        let samples: Vec<(Point, f64)> = grid
            .inside_nodes()
            .iter()
            .map(|&i| (grid.node_point(i), field.values[i]))
            .collect();
        let (seminorm, _) =
            cma_core::regularity::fitted_seminorm(&samples, &g, alpha, &scales, seed ^ salt)?;
        let sup = samples.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
        Ok(sup + seminorm)
    };
    let v_norm = fit_norm(&envelope.field, 0x5eed)?;
    let w_norm = fit_norm(&upper.field, 0xcafe)?;
    ledger.k3 = v_norm.max(w_norm);
    ledger.c0 = v_norm;
    ledger.validate()?;
    outputs.stage("barriers", stage);

    let stage = Instant::now();
    #[derive(Serialize)]
    struct BarrierLedgerOut {
        ledger: ConstantLedger,
        rho_provenance: String,
        rho_lambda_min: f64,
        rho_lambda_min_raw: f64,
        rho_envelope_gap: f64,
        rho_negative_inside: bool,
        anchors: usize,
    }
    outputs.write_json(
        "ledger.json",
        &BarrierLedgerOut {
            ledger,
            rho_provenance: rho.provenance.clone(),
            rho_lambda_min: rho.lambda_min,
            rho_lambda_min_raw: rho.lambda_min_raw,
            rho_envelope_gap: rho.envelope_gap,
            rho_negative_inside: rho.negative_inside,
            anchors: anchor_mesh.points.len(),
        },
    )?;
    outputs.write(
        "rho_and_barriers.csv",
        field_csv(&rho.field, Some(("barrier_envelope", &envelope.field))).as_bytes(),
    )?;
    outputs.write(
        "upper_barrier.csv",
        field_csv(&upper.field, None).as_bytes(),
    )?;
    // sandwich diagnostic when a solve oracle is registered
    if let Some(oracle) = oracle_for(&d, phi_id, h_id) {
        let u = ScalarField::from_fn_inside(grid.clone(), |p| oracle(p));
        let cmp = sandwich_check(&u, &envelope.field, &upper.field)?;
        outputs.write_json("sandwich.json", &cmp)?;
    }
    outputs.stage("emit", stage);
    Ok(())
}

fn print_catalog() {
    println!("domains:");
    println!("  disk                 — unit disk in C, strongly pseudoconvex");
    println!("  ball2                — unit ball in C^2, strongly pseudoconvex");
    println!("  power-ellipsoid:<m>  — |z1|^(2m) + |z2|^2 < 1, finite type 2m");
    println!("  exp-ellipsoid:<s>    — exp(1 - 1/|z1|^s) + |z2|^2 < 1, infinite-type model ellipsoid");
    println!("index functions:");
    println!("  power:<eps>            — f(t) = t^eps, finite-type gauge (0 < eps <= 1/2)");
    println!("  logpower:<s>           — f(t) = (1 + log t)^(1/s), infinite-type gauge (0 < s < 1)");
    println!("  strongly-pseudoconvex  — alias for power:0.5");
    println!("boundary data (phi):");
    println!("  zero            — phi = 0");
    println!("  re-z1           — phi = Re z1, Lipschitz datum");
    println!("  abs-z1:<a>      — phi = |z1|^a, power datum of the model ellipsoid");
    println!("  neg-abs-z1:<a>  — phi = -|z1|^a, the plurisubharmonic side of the model datum");
    println!("densities (h):");
    println!("  zero  — degenerate equation det = 0");
    println!("  one   — det = 1, closed-form ball oracles");
}

fn run_from_config(path: &Path) -> Result<(), Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigInvalid {
        key: "config".into(),
        reason: format!("cannot read {}: {e}", path.display()),
    })?;
    let cfg: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::ConfigInvalid {
        key: "config".into(),
        reason: format!("invalid JSON: {e}"),
    })?;
    let experiment = cfg
        .get("experiment")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::ConfigInvalid {
            key: "experiment".into(),
            reason: "missing experiment name".into(),
        })?;
    let get_str = |key: &str, default: &str| -> String {
        cfg.get(key)
            .and_then(|v| v.as_str())
            .unwrap_or(default)
            .to_string()
    };
    let get_f64 = |key: &str, default: f64| cfg.get(key).and_then(|v| v.as_f64()).unwrap_or(default);
    let get_u64 = |key: &str, default: u64| cfg.get(key).and_then(|v| v.as_u64()).unwrap_or(default);
    let out = OutArg {
        out: cfg.get("out").and_then(|v| v.as_str()).map(PathBuf::from),
    };
    let command = match experiment {
        "gfun" => Command::Gfun {
            f: get_str("f", "strongly-pseudoconvex"),
            t_min: get_f64("t_min", 10.0),
            t_max: get_f64("t_max", 1e6),
            count: get_u64("count", 40) as usize,
            eta: get_str("eta", "auto"),
            out,
        },
        "omega-check" => Command::OmegaCheck {
            f: get_str("f", "strongly-pseudoconvex"),
            eta: get_str("eta", "auto"),
            delta_min: get_f64("delta_min", 1e-6),
            delta_max: get_f64("delta_max", 1e-3),
            count: get_u64("count", 200) as usize,
            out,
        },
        "witness" => Command::Witness {
            domain: get_str("domain", "ball2"),
            f: get_str("f", "strongly-pseudoconvex"),
            delta: get_f64("delta", 0.05),
            samples: get_u64("samples", 200) as usize,
            out,
        },
        "barriers" => Command::Barriers {
            domain: get_str("domain", "ball2"),
            f: get_str("f", "power:0.25"),
            alpha: get_f64("alpha", 1.0),
            mesh_count: get_u64("mesh_count", 32) as usize,
            grid_spacing: get_f64("grid_spacing", 0.0625),
            phi: get_str("phi", "zero"),
            h: get_str("h", "zero"),
            seed: get_u64("seed", 1),
            out,
        },
        "solve" => Command::Solve {
            domain: get_str("domain", "disk"),
            f: get_str("f", "strongly-pseudoconvex"),
            phi: get_str("phi", "zero"),
            h: get_str("h", "one"),
            alpha: get_f64("alpha", 1.0),
            spacing: get_f64("spacing", 0.0625),
            tol: cfg.get("tol").and_then(|v| v.as_f64()),
            max_sweeps: cfg.get("max_sweeps").and_then(|v| v.as_u64()).map(|v| v as usize),
            radial: cfg.get("radial").and_then(|v| v.as_bool()).unwrap_or(false),
            out,
        },
        "modulus" => Command::Modulus {
            input: cfg.get("input").and_then(|v| v.as_str()).map(PathBuf::from),
            from_solve: cfg.get("from_solve").and_then(|v| v.as_str()).map(PathBuf::from),
            function: cfg.get("function").and_then(|v| v.as_str()).map(String::from),
            domain: get_str("domain", "exp-ellipsoid:0.5"),
            g: get_str("g", "logpower:0.5"),
            alpha: get_f64("alpha", 1.0),
            scale_min: get_f64("scale_min", 1e-4),
            scale_max: get_f64("scale_max", 1e-1),
            seed: get_u64("seed", 1),
            pairs: get_u64("pairs", 12_000_000) as usize,
            spread_cap: get_f64("spread_cap", 20.0),
            out,
        },
        "sharpness" => Command::Sharpness {
            s: get_f64("s", 0.5),
            alpha: get_f64("alpha", 1.0),
            eps_decades: get_u64("eps_decades", 4) as u32,
            per_decade: get_u64("per_decade", 4) as u32,
            out,
        },
        "verify-all" => Command::VerifyAll { seed: get_u64("seed", 1), out },
        other => {
            return Err(Error::ConfigInvalid {
                key: "experiment".into(),
                reason: format!("unknown experiment `{other}`"),
            })
        }
    };
    dispatch(command)
}

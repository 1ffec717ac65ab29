//! Command surface and the JSON report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use finsler::classify::{classify, ClassifyOptions, Verdicts};
use finsler::geodesic::{conservation_report, integrate_geodesic, write_csv, Exit, Trajectory};
use finsler::identities::{run_identity_suite, SuiteOptions, DEFAULT_TOL};
use finsler::manifold::{validate_finsler, validate_spray, ValidationReport};
use finsler::projective::{projective_invariance_report, rapcsak};
use finsler::report::ResidualReport;
use finsler::spraycore::EngineOptions;
use finsler::twodim::{two_dim_report, TwoDimReport};
use finsler::{gallery, load_manifest, sample_points, GeometrySpec, Kind, TangentPoint};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::out::{self, num, nums, point, sci, table};

#[derive(Debug, Parser)]
#[command(name = "finsler", version, about = "Spray and Finsler geometry: curvature, identities, classification, metrizability")]
pub struct Cli {
    /// Number of sample points (default: the manifest's).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Sampling seed (default: the manifest's).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Emit the JSON report instead of tables.
    #[arg(long, global = true)]
    json: bool,
    /// Serve high-order partials by finite differences.
    #[arg(long, global = true)]
    fd_fallback: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the Finsler axioms (or spray homogeneity).
    Validate { manifest: String },
    /// Berwald / Douglas / Landsberg / isotropy verdicts.
    Classify { manifest: String },
    /// Evaluate the identity catalogue.
    Identities { manifest: String },
    /// Validation, identities, classification and (in 2D) the frame report.
    Report { manifest: String },
    /// Integrate a geodesic with RK4.
    Geodesic {
        manifest: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x0: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y0: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Projective change laws and invariants for the factor P.
    Projective {
        manifest: String,
        #[arg(long, allow_hyphen_values = true)]
        factor: String,
    },
    /// Rapcsák equations: is the spray of SOURCE projectively metrizable by TARGET?
    Rapcsak { source: String, target: String },
    /// Berwald frame, Gauss curvature and main scalar (n = 2).
    Frame2d { manifest: String },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Lib(#[from] finsler::Error),
}

impl CliError {
    /// 1 IO, 2 parse, 3 validation, 4 internal consistency.
    pub fn code(&self) -> u8 {
        use finsler::Error as E;
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse(_) => 2,
            CliError::Lib(E::ManifestSyntax { .. } | E::MissingField(_) | E::InvalidField { .. } | E::Expr { .. } | E::Dimension(_)) => 2,
            CliError::Lib(E::Consistency(_)) => 4,
            CliError::Lib(_) => 3,
        }
    }
}

/// A path, or else the name of a gallery manifest.
fn load(arg: &str) -> Result<GeometrySpec, CliError> {
    let path = Path::new(arg);
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => match gallery::manifest(arg) {
            Some(t) if !path.exists() => t.to_string(),
            _ => return Err(CliError::Io { path: arg.into(), source: e }),
        },
    };
    Ok(load_manifest(&text)?)
}

struct Ctx {
    samples: usize,
    seed: u64,
    tol: Option<f64>,
    engine: EngineOptions,
    points: Vec<TangentPoint>,
}

impl Ctx {
    fn new(cli: &Cli, spec: &GeometrySpec) -> Result<Ctx, CliError> {
        let samples = cli.samples.unwrap_or(spec.samples);
        let seed = cli.seed.unwrap_or(spec.seed);
        let points = sample_points(spec, samples, seed)?;
        let engine = EngineOptions { fd_fallback: cli.fd_fallback, ..EngineOptions::default() };
        Ok(Ctx { samples, seed, tol: cli.tol, engine, points })
    }
    fn suite(&self) -> SuiteOptions {
        SuiteOptions { engine: self.engine, tol: self.tol.unwrap_or(DEFAULT_TOL), seed: self.seed, ..SuiteOptions::default() }
    }
}

struct Section {
    name: &'static str,
    json: Value,
    text: String,
    /// Exit code this section asks for (0 when fine).
    code: u8,
}

fn spec_json(spec: &GeometrySpec) -> Value {
    let formulas: Map<String, Value> = spec.formulas.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let bounds: Vec<Value> = spec.domain.x.iter().map(|(a, b)| json!([num(*a), num(*b)])).collect();
    json!({
        "name": spec.name,
        "kind": spec.kind().name(),
        "n": spec.n,
        "formulas": formulas,
        "domain": { "x": bounds, "y_annulus": [num(spec.domain.y_annulus.0), num(spec.domain.y_annulus.1)] },
    })
}

fn emit(cli: &Cli, spec: &GeometrySpec, ctx: &Ctx, sections: &[Section]) -> u8 {
    let text = if cli.json {
        let secs: Map<String, Value> = sections.iter().map(|s| (s.name.to_string(), s.json.clone())).collect();
        let doc = json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "spec": spec_json(spec),
            "samples": ctx.samples,
            "seed": ctx.seed,
            "sections": secs,
        });
        serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n"
    } else {
        let mut t = format!("{} ({}, n = {}), {} samples, seed {}\n", spec.name, spec.kind().name(), spec.n, ctx.samples, ctx.seed);
        for s in sections {
            t += &format!("\n[{}]\n{}\n", s.name, s.text.trim_end());
        }
        t
    };
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    sections.iter().map(|s| s.code).max().unwrap_or(0)
}

// ---- sections -----------------------------------------------------------

fn validation(spec: &GeometrySpec, ctx: &Ctx) -> Result<(Section, bool), CliError> {
    let tol = ctx.tol.unwrap_or(spec.tol);
    let rep: ValidationReport = match spec.kind() {
        Kind::Finsler => validate_finsler(spec, &ctx.points, tol)?,
        Kind::Spray => validate_spray(spec, &ctx.points, tol)?,
    };
    let entries: Vec<Value> = rep
        .checks
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "paper_anchor": c.description,
                "residual": num(c.worst),
                "tolerance": num(c.threshold),
                "pass": c.pass,
                "witness_point": point(c.witness.as_ref()),
            })
        })
        .collect();
    let rows: Vec<Vec<String>> =
        rep.checks.iter().map(|c| vec![c.id.into(), if c.pass { "pass" } else { "FAIL" }.into(), sci(c.worst), sci(c.threshold), c.description.into()]).collect();
    let ok = rep.pass();
    let sec = Section {
        name: "validation",
        json: json!({ "pass": ok, "entries": entries }),
        text: table(&["axiom", "status", "value", "threshold", "check"], &rows),
        code: if ok { 0 } else { 3 },
    };
    Ok((sec, ok))
}

fn residual_section(name: &'static str, rep: &ResidualReport, extra: Map<String, Value>) -> Section {
    let mut m = extra;
    m.insert("pass".into(), json!(rep.pass()));
    m.insert("entries".into(), out::entries(&rep.entries));
    Section { name, json: Value::Object(m), text: out::entry_table(&rep.entries), code: if rep.pass() { 0 } else { 4 } }
}

fn identities(spec: &GeometrySpec, ctx: &Ctx) -> Result<Section, CliError> {
    let rep = run_identity_suite(spec, &ctx.points, &ctx.suite())?;
    Ok(residual_section("identities", &rep, Map::new()))
}

const CLASS_ANCHORS: &[(&str, &str)] = &[
    ("riemannian", "Cartan tensor vanishes"),
    ("berwald", "Berwald curvature vanishes"),
    ("weakly_berwald", "trace of the Berwald curvature vanishes"),
    ("douglas", "Douglas curvature vanishes"),
    ("p_berwald", "B + (1/E) P ⊗ y vanishes"),
    ("landsberg_free", "Landsberg tensor vanishes"),
    ("r_quadratic", "vertical derivative of the affine curvature vanishes"),
    ("isotropic", "Weyl endomorphism vanishes (in dimension two: K = K̂ p)"),
    ("constant_curvature", "isotropic with constant scalar curvature (sample standard deviation)"),
];

fn classification(spec: &GeometrySpec, ctx: &Ctx) -> Result<Section, CliError> {
    let opts = ClassifyOptions { engine: ctx.engine, tol: ctx.tol.unwrap_or(DEFAULT_TOL) };
    let v: Verdicts = classify(spec, &ctx.points, &opts)?;
    let consistent = v.check_consistency();
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for (name, verdict) in v.flags() {
        let anchor = CLASS_ANCHORS.iter().find(|a| a.0 == name).map_or("", |a| a.1);
        match verdict {
            Some(vd) => {
                entries.push(json!({
                    "id": name,
                    "paper_anchor": anchor,
                    "residual": num(vd.residual),
                    "tolerance": num(opts.tol),
                    "pass": vd.holds,
                    "witness_point": point(vd.witness.as_ref()),
                }));
                rows.push(vec![name.into(), if vd.holds { "yes" } else { "no" }.into(), sci(vd.residual), anchor.into()]);
            }
            None => rows.push(vec![name.into(), "n/a".into(), "-".into(), anchor.into()]),
        }
    }
    let scalar = v.scalar_curvature.map_or(Value::Null, |(mean, sd)| json!({ "mean": num(mean), "sd": num(sd) }));
    let mut text = table(&["class", "holds", "residual", "condition"], &rows);
    if let Some((mean, sd)) = v.scalar_curvature {
        text += &format!("scalar curvature: mean {mean:.10}, sd {sd:.3e}\n");
    }
    for n in &v.notes {
        text += &format!("note: {n}\n");
    }
    let mut code = 0;
    let mut j = json!({ "verdicts": entries, "scalar_curvature": scalar, "notes": v.notes });
    if let Err(e) = consistent {
        text += &format!("INCONSISTENT: {e}\n");
        j["inconsistency"] = json!(e.to_string());
        code = 4;
    }
    Ok(Section { name: "classification", json: j, text, code })
}

fn twodim(spec: &GeometrySpec, ctx: &Ctx) -> Result<Section, CliError> {
    let rep: TwoDimReport = two_dim_report(spec, &ctx.points, ctx.engine)?;
    let berwald = |r: &finsler::twodim::TwoDimRecord| r.residuals.iter().find(|(id, _)| *id == "BERWALD-IDENTITY").map(|(_, v)| *v);
    let records: Vec<Value> = rep
        .records
        .iter()
        .map(|r| {
            json!({
                "x": nums(&r.frame.pt.x),
                "y": nums(&r.frame.pt.y),
                "ell": nums(&r.frame.ell),
                "m": nums(&r.frame.m),
                "orientation": r.frame.orientation,
                "F": num(r.f),
                "kappa": num(r.kappa),
                "gauss_curvature": num(r.gauss),
                "main_scalar": num(r.main_scalar),
                "SI": num(r.si),
                "SSI": num(r.ssi),
                "berwald_identity": out::opt(berwald(r)),
            })
        })
        .collect();
    let rows: Vec<Vec<String>> = rep
        .records
        .iter()
        .map(|r| {
            vec![
                out::coords(&r.frame.pt.x),
                out::coords(&r.frame.pt.y),
                format!("{:.8}", r.kappa),
                format!("{:.8}", r.gauss),
                format!("{:.6}", r.main_scalar),
                berwald(r).map_or("-".into(), sci),
            ]
        })
        .collect();
    let pass = rep.entries.iter().all(|e| e.pass);
    let text = table(&["x", "y", "kappa", "gauss", "I", "berwald identity"], &rows) + "\n" + &out::entry_table(&rep.entries);
    Ok(Section {
        name: "twodim",
        json: json!({ "pass": pass, "records": records, "entries": out::entries(&rep.entries) }),
        text,
        code: if pass { 0 } else { 4 },
    })
}

fn exit_json(t: &Trajectory) -> Value {
    match &t.exit {
        None => Value::Null,
        Some(Exit::LeftDomain { t }) => json!({ "reason": "left_domain", "t": num(*t) }),
        Some(Exit::Speed { t, norm }) => json!({ "reason": "speed_out_of_range", "t": num(*t), "norm": num(*norm) }),
    }
}

fn geodesic(spec: &GeometrySpec, x0: &[f64], y0: &[f64], t_end: f64, steps: usize, csv: Option<&Path>) -> Result<Section, CliError> {
    let traj = integrate_geodesic(spec, x0, y0, t_end, steps)?;
    let drift = match spec.kind() {
        Kind::Finsler => Some(conservation_report(spec, &traj)?),
        Kind::Spray => None,
    };
    if let Some(path) = csv {
        let io = |e| CliError::Io { path: path.display().to_string(), source: e };
        let file = fs::File::create(path).map_err(io)?;
        write_csv(spec, &traj, std::io::BufWriter::new(file))?;
    }
    let end = traj.end();
    let j = json!({
        "method": traj.method,
        "steps_requested": steps,
        "steps_taken": traj.steps,
        "t_end": num(t_end),
        "x0": nums(x0),
        "y0": nums(y0),
        "exit": exit_json(&traj),
        "endpoint": { "t": num(end.t), "x": nums(&end.x), "y": nums(&end.y) },
        "energy_drift": out::opt(drift.map(|d| d.energy_drift)),
        "f_drift": out::opt(drift.map(|d| d.f_drift)),
        "csv": csv.map(|p| p.display().to_string()),
    });
    let mut text = format!("method {}, {} of {} steps\n", traj.method, traj.steps, steps);
    text += &format!("endpoint t = {:.6}: x = {}, y = {}\n", end.t, out::coords(&end.x), out::coords(&end.y));
    match &traj.exit {
        None => {}
        Some(Exit::LeftDomain { t }) => text += &format!("stopped: left the domain at t = {t:.6}\n"),
        Some(Exit::Speed { t, norm }) => text += &format!("stopped: |y| = {norm:.4e} out of range at t = {t:.6}\n"),
    }
    if let Some(d) = drift {
        text += &format!("relative drift: E {}, F {}\n", sci(d.energy_drift), sci(d.f_drift));
    }
    Ok(Section { name: "geodesic", json: j, text, code: 0 })
}

fn factor_rows(factor: &[(TangentPoint, f64)]) -> (Value, String) {
    let j = factor.iter().map(|(p, v)| json!({ "x": nums(&p.x), "y": nums(&p.y), "P": num(*v) })).collect();
    let rows: Vec<Vec<String>> = factor.iter().map(|(p, v)| vec![out::coords(&p.x), out::coords(&p.y), format!("{v:.10}")]).collect();
    (Value::Array(j), table(&["x", "y", "P = SF/(2F)"], &rows))
}

// ---- dispatch -----------------------------------------------------------

/// Runs validation first; a geometry failing its axioms stops there with exit 3.
fn with_validation(cli: &Cli, spec: &GeometrySpec, ctx: &Ctx, rest: impl FnOnce() -> Result<Vec<Section>, CliError>) -> Result<u8, CliError> {
    let (v, ok) = validation(spec, ctx)?;
    let mut sections = vec![v];
    if ok {
        sections.extend(rest()?);
    }
    Ok(emit(cli, spec, ctx, &sections))
}

pub fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Validate { manifest } => {
            let spec = load(manifest)?;
            let ctx = Ctx::new(cli, &spec)?;
            with_validation(cli, &spec, &ctx, || Ok(vec![]))
        }
        Command::Classify { manifest } => {
            let spec = load(manifest)?;
            let ctx = Ctx::new(cli, &spec)?;
            with_validation(cli, &spec, &ctx, || Ok(vec![classification(&spec, &ctx)?]))
        }
        Command::Identities { manifest } => {
            let spec = load(manifest)?;
            let ctx = Ctx::new(cli, &spec)?;
            with_validation(cli, &spec, &ctx, || Ok(vec![identities(&spec, &ctx)?]))
        }
        Command::Report { manifest } => {
            let spec = load(manifest)?;
            let ctx = Ctx::new(cli, &spec)?;
            with_validation(cli, &spec, &ctx, || {
                let mut s = vec![identities(&spec, &ctx)?, classification(&spec, &ctx)?];
                if spec.n == 2 && spec.kind() == Kind::Finsler {
                    s.push(twodim(&spec, &ctx)?);
                }
                Ok(s)
            })
        }
        Command::Frame2d { manifest } => {
            let spec = load(manifest)?;
            let ctx = Ctx::new(cli, &spec)?;
            with_validation(cli, &spec, &ctx, || Ok(vec![twodim(&spec, &ctx)?]))
        }
        Command::Geodesic { manifest, x0, y0, t, steps, csv } => {
            let spec = load(manifest)?;
            let ctx = Ctx::new(cli, &spec)?;
            with_validation(cli, &spec, &ctx, || Ok(vec![geodesic(&spec, x0, y0, *t, *steps, csv.as_deref())?]))
        }
        Command::Projective { manifest, factor } => {
            let spec = load(manifest)?;
            let ctx = Ctx::new(cli, &spec)?;
            let p = exprlang::parse(factor, spec.n).map_err(|e| CliError::Parse(format!("--factor: {e}")))?;
            with_validation(cli, &spec, &ctx, || {
                let rep = projective_invariance_report(&spec, &p, factor, &ctx.points, &ctx.suite())?;
                let mut extra = Map::new();
                extra.insert("factor".into(), json!(factor));
                Ok(vec![residual_section("projective", &rep, extra)])
            })
        }
        Command::Rapcsak { source, target } => {
            let (src, tgt) = (load(source)?, load(target)?);
            let ctx = Ctx::new(cli, &src)?;
            let tctx = Ctx::new(cli, &tgt)?;
            let (tv, ok) = validation(&tgt, &tctx)?;
            if !ok {
                return Ok(emit(cli, &tgt, &tctx, &[tv]));
            }
            with_validation(cli, &src, &ctx, || {
                let rep = rapcsak(&src, &tgt, &ctx.points, &ctx.suite())?;
                let (fj, ftext) = factor_rows(&rep.factor);
                let j = json!({
                    "target": spec_json(&tgt),
                    "projectively_related": rep.projectively_related,
                    "variational": rep.variational,
                    "factor": fj,
                    "entries": out::entries(&rep.entries),
                });
                let text = format!(
                    "target: {}\nprojectively related: {}\nvariational: {}\n\n{}\n{}",
                    tgt.name,
                    rep.projectively_related,
                    rep.variational,
                    out::entry_table(&rep.entries),
                    ftext
                );
                Ok(vec![Section { name: "rapcsak", json: j, text, code: 0 }])
            })
        }
    }
}

//! Acceptance criteria 1–9, one PASS/FAIL line each. Runs without the test
//! harness so the lines always appear in `cargo test` output.

use std::process::Command;

use exprlang::{evaluate, parse};
use finsler::classify::{classify, ClassifyOptions};
use finsler::curvature::{relative_gap, Pack};
use finsler::geodesic::{conservation_report, integrate_geodesic};
use finsler::identities::{run_identity_suite, SuiteOptions};
use finsler::projective::{projective_invariance_report, rapcsak};
use finsler::report::ResidualEntry;
use finsler::spraycore::{Engine, EngineOptions};
use finsler::tensor::JetTensor;
use finsler::twodim::two_dim_report;
use finsler::{gallery, sample_points, GeometrySpec, TangentPoint};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const FLAT_TOL: f64 = 1e-10;
const CARTAN_FLOOR: f64 = 1e-3;
const GAUSS_TOL: f64 = 1e-6;
const SCALAR_SD_TOL: f64 = 1e-6;
const IDENTITY_TOL: f64 = 1e-7;
const FD_TOL: f64 = 1e-4;
const DUAL_TOL: f64 = 1e-6;
const WEYL_TOL: f64 = 1e-7;
const JACFORM_TOL: f64 = 1e-6;
const INVARIANCE_TOL: f64 = 1e-7;
const BERWALD_INVARIANCE_TOL: f64 = 1e-8;
const R1_SELF_TOL: f64 = 1e-9;
const R1_FUNK_TOL: f64 = 1e-6;
const FACTOR_TOL: f64 = 1e-6;
const VARIATIONAL_FLOOR: f64 = 1e-2;
const NECESSARY_TOL: f64 = 1e-5;
const GEODESIC_TOL: f64 = 1e-6;
const DRIFT_TOL: f64 = 1e-9;
const RK4_ORDER_FLOOR: f64 = 3.7;

const FINSLER_2D: [&str; 6] = ["euclidean", "poincare-half-plane", "sphere-stereographic", "minkowski-quartic", "randers-variable", "funk-disk"];

fn pts(spec: &GeometrySpec, count: usize, seed: u64) -> Result<Vec<TangentPoint>, String> {
    sample_points(spec, count, seed).map_err(|e| e.to_string())
}

fn max_abs(t: &JetTensor) -> f64 {
    t.data.iter().map(|j| j.value().abs()).fold(0.0, f64::max)
}

fn residual(entries: &[ResidualEntry], id: &str) -> Result<f64, String> {
    let e = entries.iter().find(|e| e.id == id).ok_or(format!("no entry {id}"))?;
    e.residual.ok_or(format!("{id}: no residual ({:?} {:?})", e.skipped, e.error))
}

/// `Err` naming the first violated bound, otherwise the summary.
fn check(bounds: &[(String, f64, bool)], summary: String) -> Outcome {
    match bounds.iter().find(|b| !b.2) {
        Some((what, v, _)) => Err(format!("{what} = {v:.3e}")),
        None => Ok(summary),
    }
}

fn below(what: impl Into<String>, v: f64, tol: f64) -> (String, f64, bool) {
    (what.into(), v, v < tol)
}

fn above(what: impl Into<String>, v: f64, floor: f64) -> (String, f64, bool) {
    (what.into(), v, v > floor)
}

fn flat_sanity() -> Outcome {
    let mut worst = 0.0f64;
    let mut cartan = 0.0f64;
    for name in ["euclidean", "minkowski-quartic"] {
        let spec = gallery::load(name);
        let engine = Engine::new(&spec, EngineOptions::default()).map_err(|e| e.to_string())?;
        for p in pts(&spec, 50, 1)? {
            let fr = engine.frame(&p).map_err(|e| e.to_string())?;
            let pk = Pack::new(&fr);
            let stretch = pk.stretch().map_err(|e| e.to_string())?;
            for t in [pk.berwald(), pk.jacobi(), pk.curvature(), pk.affine(), stretch, pk.douglas(), pk.weyl0()] {
                worst = worst.max(max_abs(&t));
            }
            if name == "minkowski-quartic" {
                cartan = cartan.max(max_abs(&*pk.cartan().map_err(|e| e.to_string())?));
            }
        }
    }
    check(
        &[below("max |B,K,R,H,Σ,D,W°|", worst, FLAT_TOL), above("quartic max |Cartan|", cartan, CARTAN_FLOOR)],
        format!("max |B,K,R,H,Σ,D,W°| = {worst:.1e}; quartic max |C| = {cartan:.3}"),
    )
}

fn riemannian_oracle() -> Outcome {
    let mut bounds = Vec::new();
    let mut summary = Vec::new();
    for (name, k) in [("poincare-half-plane", -1.0), ("sphere-stereographic", 1.0)] {
        let spec = gallery::load(name);
        let samples = pts(&spec, 100, 1)?;
        let rep = two_dim_report(&spec, &samples, EngineOptions::default()).map_err(|e| e.to_string())?;
        let gap = rep.records.iter().map(|r| (r.gauss - k).abs()).fold(0.0, f64::max);
        let v = classify(&spec, &samples, &ClassifyOptions::default()).map_err(|e| e.to_string())?;
        let (mean, sd) = v.scalar_curvature.ok_or(format!("{name}: not classified isotropic"))?;
        let constant = v.constant_curvature.map(|c| c.holds).unwrap_or(false);
        bounds.push(below(format!("{name} |κ/F − ({k})|"), gap, GAUSS_TOL));
        bounds.push(below(format!("{name} scalar curvature sd"), sd, SCALAR_SD_TOL));
        bounds.push((format!("{name} isotropic ∧ constant (1 = yes)"), 0.0, v.isotropic.holds && constant));
        summary.push(format!("{name}: κ/F gap {gap:.1e}, scalar curvature {mean:.6} ± {sd:.1e}"));
    }
    check(&bounds, summary.join("; "))
}

fn identity_suite() -> Outcome {
    let spec = gallery::load("randers-variable");
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in [1, 2] {
        let rep = run_identity_suite(&spec, &pts(&spec, 50, seed)?, &SuiteOptions::default()).map_err(|e| e.to_string())?;
        for e in &rep.entries {
            let r = e.residual.ok_or(format!("{}: no residual", e.id))?;
            if e.fd || r >= IDENTITY_TOL {
                return Err(format!("seed {seed} {}: {r:.3e} (fd = {})", e.id, e.fd));
            }
            worst = worst.max(r);
        }
        count = rep.entries.len();
    }
    let fd_opts = SuiteOptions { engine: EngineOptions { fd_fallback: true, ..Default::default() }, ..Default::default() };
    let rep = run_identity_suite(&spec, &pts(&spec, 50, 1)?, &fd_opts).map_err(|e| e.to_string())?;
    let flagged: Vec<&ResidualEntry> = rep.entries.iter().filter(|e| e.fd).collect();
    let fd_worst = flagged.iter().filter_map(|e| e.residual).fold(0.0, f64::max);
    check(
        &[below("FD-flagged worst", fd_worst, FD_TOL), above("FD-flagged count", flagged.len() as f64, 0.0)],
        format!("{count} identities × seeds {{1,2}}: worst {worst:.1e}; fallback mode: {} flagged, worst {fd_worst:.1e}", flagged.len()),
    )
}

fn dual_routes() -> Outcome {
    let spec = gallery::load("randers-variable");
    let engine = Engine::new(&spec, EngineOptions::default()).map_err(|e| e.to_string())?;
    let mut gaps = [0.0f64; 4];
    for p in pts(&spec, 50, 1)? {
        let fr = engine.frame(&p).map_err(|e| e.to_string())?;
        let pk = Pack::new(&fr);
        let f = |r: Result<_, finsler::Error>| r.map_err(|e| e.to_string());
        let pairs = [
            relative_gap(&pk.jacobi(), &pk.jacobi_from_curvature()),
            relative_gap(&pk.curvature(), &pk.curvature_from_jacobi()),
            relative_gap(&*f(pk.landsberg())?, &*f(pk.landsberg_from_berwald())?),
            relative_gap(&*f(pk.stretch())?, &*f(pk.stretch_from_affine())?),
        ];
        for (g, v) in gaps.iter_mut().zip(pairs) {
            *g = g.max(v);
        }
    }
    let names = ["K", "R", "P", "Σ"];
    let bounds: Vec<_> = names.iter().zip(gaps).map(|(n, g)| below(format!("{n} relative gap"), g, DUAL_TOL)).collect();
    check(&bounds, format!("relative gaps K {:.1e}, R {:.1e}, P {:.1e}, Σ {:.1e}", gaps[0], gaps[1], gaps[2], gaps[3]))
}

fn two_dim() -> Outcome {
    let mut worst = [0.0f64; 6];
    let ids = ["WEYL-ZERO", "BERWALD-IDENTITY-FD", "JACFORM", "SURV-LANDS-FD", "VAN-STRETCH-FD", "BERWALD-IDENTITY"];
    for name in FINSLER_2D {
        let spec = gallery::load(name);
        let rep = two_dim_report(&spec, &pts(&spec, 50, 1)?, EngineOptions::default()).map_err(|e| e.to_string())?;
        for (w, id) in worst.iter_mut().zip(ids) {
            *w = w.max(residual(&rep.entries, id).map_err(|e| format!("{name}: {e}"))?);
        }
    }
    let tols = [WEYL_TOL, FD_TOL, JACFORM_TOL, FD_TOL, FD_TOL, FD_TOL];
    let bounds: Vec<_> = ids.iter().zip(worst).zip(tols).map(|((id, w), t)| below(*id, w, t)).collect();
    check(
        &bounds,
        format!(
            "W° {:.1e}; Berwald identity {:.1e} (FD) / {:.1e} (exact); jacform {:.1e}; P(m,m,m) − SI {:.1e}; Σ(ℓ,m,m,m) − (2/F)S(SI) {:.1e}",
            worst[0], worst[1], worst[5], worst[2], worst[3], worst[4]
        ),
    )
}

fn projective_invariance() -> Outcome {
    let mut bounds = Vec::new();
    let mut worst = 0.0f64;
    let cases = [("poincare-half-plane", "0.1*sqrt(y1^2 + y2^2)/x2"), ("randers-variable", "0.1*(sqrt(y1^2 + y2^2) + 0.3*sin(x2)*y1)")];
    for (name, factor) in cases {
        let spec = gallery::load(name);
        let p = parse(factor, 2).map_err(|e| e.to_string())?;
        let rep = projective_invariance_report(&spec, &p, factor, &pts(&spec, 50, 1)?, &SuiteOptions::default()).map_err(|e| e.to_string())?;
        for id in ["DOUGLAS-INVARIANT", "WEYL0-INVARIANT", "CORR-B", "CORR-TRB"] {
            let r = residual(&rep.entries, id)?;
            worst = worst.max(r);
            bounds.push(below(format!("{name} {id}"), r, INVARIANCE_TOL));
        }
    }
    let spec = gallery::load("randers-variable");
    let rep = projective_invariance_report(&spec, &parse("0.7*y1", 2).unwrap(), "0.7*y1", &pts(&spec, 50, 1)?, &SuiteOptions::default())
        .map_err(|e| e.to_string())?;
    let b = residual(&rep.entries, "BERWALD-INVARIANT")?;
    bounds.push(below("‖B̄ − B‖ for P = 0.7·y1", b, BERWALD_INVARIANCE_TOL));
    check(&bounds, format!("P = 0.1F: D, W°, B- and trB-laws worst {worst:.1e}; P = 0.7·y1: ‖B̄ − B‖ {b:.1e}"))
}

fn metrizability() -> Outcome {
    let opts = SuiteOptions::default();
    let mut bounds = Vec::new();
    let mut self_r1 = 0.0f64;
    let mut necessary = 0.0f64;
    let necessary_ids = ["RAP-ALPHA", "SELF-ADJOINT", "PE-CYCLIC"];
    for name in FINSLER_2D {
        let spec = gallery::load(name);
        let rep = rapcsak(&spec, &spec, &pts(&spec, 30, 1)?, &opts).map_err(|e| e.to_string())?;
        let r1 = residual(&rep.entries, "R1")?;
        self_r1 = self_r1.max(r1);
        bounds.push(below(format!("{name} self R1"), r1, R1_SELF_TOL));
        for id in necessary_ids {
            necessary = necessary.max(residual(&rep.entries, id)?);
        }
    }
    let (flat, funk) = (gallery::load("flat-spray"), gallery::load("funk-disk"));
    let rep = rapcsak(&flat, &funk, &pts(&flat, 30, 1)?, &opts).map_err(|e| e.to_string())?;
    let r1 = residual(&rep.entries, "R1")?;
    let oracle = residual(&rep.entries, "FACTOR-ORACLE")?;
    let variational = residual(&rep.entries, "VARIATIONAL")?;
    // the canonical spray of funk is (F/2)·y, computed independently of the factor formula
    let engine = Engine::new(&funk, EngineOptions { g_order: 0, ..Default::default() }).map_err(|e| e.to_string())?;
    let mut factor_gap = 0.0f64;
    for (p, factor) in &rep.factor {
        let g = engine.spray_values(p).map_err(|e| e.to_string())?;
        let k = (0..2).max_by(|&a, &b| p.y[a].abs().total_cmp(&p.y[b].abs())).unwrap();
        factor_gap = factor_gap.max((factor - g[k] / p.y[k]).abs());
    }
    for id in necessary_ids {
        necessary = necessary.max(residual(&rep.entries, id)?);
    }
    let f = funk.finsler_function().unwrap();
    let half_f = rep.factor.iter().map(|(p, v)| (v - 0.5 * evaluate(f, &p.x, &p.y).unwrap()).abs()).fold(0.0, f64::max);
    bounds.extend([
        below("flat→funk R1", r1, R1_FUNK_TOL),
        below("flat→funk factor vs canonical spray", factor_gap.max(oracle), FACTOR_TOL),
        above("flat→funk variationality residual", variational, VARIATIONAL_FLOOR),
        below("necessary conditions", necessary, NECESSARY_TOL),
    ]);
    check(
        &bounds,
        format!(
            "self R1 worst {self_r1:.1e}; flat→funk R1 {r1:.1e}, factor gap {:.1e} (|P − F/2| {half_f:.1e}), variational residual {variational:.3}; necessary conditions worst {necessary:.1e}",
            factor_gap.max(oracle)
        ),
    )
}

fn geodesics() -> Outcome {
    let spec = gallery::load("poincare-half-plane");
    let run = |steps| -> Result<(f64, f64), String> {
        let t = integrate_geodesic(&spec, &[0.0, 1.0], &[1.0, 0.0], 1.0, steps).map_err(|e| e.to_string())?;
        let end = t.end();
        let err = (end.x[0] - 1f64.tanh()).hypot(end.x[1] - 1.0 / 1f64.cosh());
        Ok((err, conservation_report(&spec, &t).map_err(|e| e.to_string())?.energy_drift))
    };
    let (err, drift) = run(1000)?;
    let (e10, _) = run(10)?;
    let (e20, _) = run(20)?;
    let order = (e10 / e20).log2();
    check(
        &[below("endpoint error", err, GEODESIC_TOL), below("energy drift", drift, DRIFT_TOL), above("RK4 order", order, RK4_ORDER_FLOOR)],
        format!("endpoint error {err:.1e}, energy drift {drift:.1e}, measured order {order:.2}"),
    )
}

fn determinism() -> Outcome {
    let csv = std::env::temp_dir().join(format!("finsler-acceptance-{}.csv", std::process::id()));
    let csv = csv.display().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["validate", "randers-variable"],
        vec!["classify", "funk-disk", "--samples", "10"],
        vec!["identities", "randers-variable", "--samples", "8", "--seed", "2"],
        vec!["identities", "randers-variable", "--samples", "4", "--fd-fallback"],
        vec!["report", "sphere-stereographic", "--samples", "6"],
        vec!["geodesic", "poincare-half-plane", "--x0", "0,1", "--y0", "1,0", "--t", "1", "--steps", "200", "--csv", &csv],
        vec!["projective", "poincare-half-plane", "--factor", "0.1*sqrt(y1^2 + y2^2)/x2", "--samples", "8"],
        vec!["rapcsak", "flat-spray", "funk-disk", "--samples", "8"],
        vec!["frame2d", "randers-variable", "--samples", "8"],
    ];
    for args in &commands {
        let run = || Command::new(env!("CARGO_BIN_EXE_finsler")).args(args).arg("--json").output().map_err(|e| e.to_string());
        let (a, b) = (run()?, run()?);
        if !a.status.success() {
            return Err(format!("{args:?} exited with {:?}", a.status.code()));
        }
        if a.stdout != b.stdout || a.stdout.is_empty() {
            return Err(format!("{args:?}: output differs between runs"));
        }
    }
    let _ = std::fs::remove_file(&csv);
    Ok(format!("{} commands produced byte-identical JSON twice", commands.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("flat/trivial sanity", flat_sanity),
        ("Riemannian oracle", riemannian_oracle),
        ("identity suite", identity_suite),
        ("dual-route agreement", dual_routes),
        ("2D theory", two_dim),
        ("projective invariance", projective_invariance),
        ("Rapcsák / metrizability", metrizability),
        ("geodesics", geodesics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("criterion {} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

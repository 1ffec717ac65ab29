//! Geometry manifests, the built-in gallery, point sampling and numerical
//! validation of the Finsler axioms.

use std::fmt;

use exprlang::{evaluate, parse, Expr};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spraycore::{Engine, EngineOptions};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Finsler,
    Spray,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Finsler => "finsler",
            Kind::Spray => "spray",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Source {
    Finsler { f: Expr },
    Spray { g: Vec<Expr> },
    /// `Ḡ^i = G^i + P·y^i` on top of another spec.
    Projective { base: Box<GeometrySpec>, factor: Expr },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub x: Vec<(f64, f64)>,
    pub y_annulus: (f64, f64),
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.x).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

#[derive(Clone, Debug)]
pub struct GeometrySpec {
    pub name: String,
    pub n: usize,
    pub source: Source,
    pub domain: Domain,
    pub positive_definite: bool,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Formula texts as written, for reports.
    pub formulas: Vec<(String, String)>,
}

impl GeometrySpec {
    pub fn kind(&self) -> Kind {
        match self.source {
            Source::Finsler { .. } => Kind::Finsler,
            _ => Kind::Spray,
        }
    }

    pub fn finsler_function(&self) -> Option<&Expr> {
        match &self.source {
            Source::Finsler { f } => Some(f),
            _ => None,
        }
    }

    /// The spray `G + P·y` obtained by a projective change with factor `P`.
    pub fn projective_change(&self, factor: Expr, factor_text: &str) -> GeometrySpec {
        let mut formulas = self.formulas.clone();
        formulas.push(("P".into(), factor_text.into()));
        GeometrySpec {
            name: format!("{} + projective change", self.name),
            source: Source::Projective { base: Box::new(self.clone()), factor },
            formulas,
            ..self.clone()
        }
    }

    /// The same chart and domain carrying an explicitly given spray.
    pub fn with_spray(&self, name: &str, g: Vec<Expr>) -> GeometrySpec {
        let formulas = g.iter().enumerate().map(|(i, e)| (format!("G{}", i + 1), e.to_string())).collect();
        GeometrySpec { name: name.into(), source: Source::Spray { g }, formulas, ..self.clone() }
    }
}

/// A point of the slit tangent bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TangentPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> TangentPoint {
        TangentPoint { x, y }
    }
    pub fn n(&self) -> usize {
        self.x.len()
    }
    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl fmt::Display for TangentPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x={:?}, y={:?}", self.x, self.y)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

fn number(v: &toml::Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

fn interval(field: &str, v: &toml::Value) -> Result<(f64, f64), Error> {
    let bad = |msg: &str| Error::InvalidField { field: field.into(), msg: msg.into() };
    let arr = v.as_array().ok_or_else(|| bad("expected [lo, hi]"))?;
    match arr.as_slice() {
        [a, b] => Ok((number(a).ok_or_else(|| bad("bounds must be numbers"))?, number(b).ok_or_else(|| bad("bounds must be numbers"))?)),
        _ => Err(bad("expected exactly two bounds")),
    }
}

/// Parse a geometry manifest (TOML layout, see the README).
pub fn load_manifest(text: &str) -> Result<GeometrySpec, Error> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        Error::ManifestSyntax { line, col, msg: e.message().trim().to_string() }
    })?;
    let section = |name: &str| -> Result<&toml::Table, Error> {
        match doc.get(name) {
            Some(toml::Value::Table(t)) => Ok(t),
            Some(_) => Err(Error::InvalidField { field: name.into(), msg: "expected a section".into() }),
            None => Err(Error::MissingField(format!("[{name}]"))),
        }
    };
    let geometry = section("geometry")?;
    let domain_t = section("domain")?;
    let lookup = |key: &str| geometry.get(key).or_else(|| domain_t.get(key));
    let string = |key: &str| -> Result<String, Error> {
        match geometry.get(key) {
            Some(toml::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(Error::InvalidField { field: key.into(), msg: "expected a string".into() }),
            None => Err(Error::MissingField(format!("geometry.{key}"))),
        }
    };

    let name = string("name")?;
    let dim = geometry
        .get("dim")
        .ok_or_else(|| Error::MissingField("geometry.dim".into()))?
        .as_integer()
        .ok_or_else(|| Error::InvalidField { field: "dim".into(), msg: "expected an integer".into() })?;
    if dim < 2 {
        return Err(Error::Dimension(dim.max(0) as usize));
    }
    let n = dim as usize;
    let parse_field = |key: &str| -> Result<(Expr, String), Error> {
        let text = string(key)?;
        let e = parse(&text, n).map_err(|source| Error::Expr { field: key.into(), source })?;
        Ok((e, text))
    };
    let kind = string("kind")?;
    let mut formulas = Vec::new();
    let source = match kind.as_str() {
        "finsler" => {
            let (f, text) = parse_field("F")?;
            formulas.push(("F".to_string(), text));
            Source::Finsler { f }
        }
        "spray" => {
            let mut g = Vec::with_capacity(n);
            for i in 1..=n {
                let key = format!("G{i}");
                let (e, text) = parse_field(&key)?;
                formulas.push((key, text));
                g.push(e);
            }
            Source::Spray { g }
        }
        other => {
            return Err(Error::InvalidField { field: "kind".into(), msg: format!("expected \"finsler\" or \"spray\", got \"{other}\"") })
        }
    };

    let mut x = Vec::with_capacity(n);
    for k in 1..=n {
        let key = format!("x{k}");
        let v = domain_t.get(&key).ok_or_else(|| Error::MissingField(format!("domain.{key}")))?;
        let (lo, hi) = interval(&key, v)?;
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidField { field: key, msg: "empty interval".into() });
        }
        x.push((lo, hi));
    }
    let y_annulus = match domain_t.get("y_annulus") {
        Some(v) => interval("y_annulus", v)?,
        None => (0.5, 2.0),
    };
    if !(y_annulus.0 > 0.0 && y_annulus.0 < y_annulus.1) {
        return Err(Error::InvalidField { field: "y_annulus".into(), msg: "need 0 < r_min < r_max".into() });
    }

    let positive_definite = match lookup("positive_definite") {
        None => true,
        Some(v) => v.as_bool().ok_or_else(|| Error::InvalidField { field: "positive_definite".into(), msg: "expected true or false".into() })?,
    };
    let int_field = |key: &str, default: i64| -> Result<i64, Error> {
        match lookup(key) {
            None => Ok(default),
            Some(v) => v.as_integer().ok_or_else(|| Error::InvalidField { field: key.into(), msg: "expected an integer".into() }),
        }
    };
    let samples = int_field("samples", 50)?;
    if samples < 1 {
        return Err(Error::InvalidField { field: "samples".into(), msg: "must be at least 1".into() });
    }
    let seed = int_field("seed", 1)?;
    let tol = match lookup("tol") {
        None => 1e-7,
        Some(v) => number(v).filter(|t| *t > 0.0).ok_or_else(|| Error::InvalidField { field: "tol".into(), msg: "expected a positive number".into() })?,
    };

    Ok(GeometrySpec {
        name,
        n,
        source,
        domain: Domain { x, y_annulus },
        positive_definite,
        samples: samples as usize,
        seed: seed as u64,
        tol,
        formulas,
    })
}

/// Built-in example manifests.
pub mod gallery {
    use super::{load_manifest, GeometrySpec};

    pub const MANIFESTS: [(&str, &str); 7] = [
        ("euclidean", include_str!("../manifests/euclidean.toml")),
        ("poincare-half-plane", include_str!("../manifests/poincare-half-plane.toml")),
        ("sphere-stereographic", include_str!("../manifests/sphere-stereographic.toml")),
        ("minkowski-quartic", include_str!("../manifests/minkowski-quartic.toml")),
        ("randers-variable", include_str!("../manifests/randers-variable.toml")),
        ("funk-disk", include_str!("../manifests/funk-disk.toml")),
        ("flat-spray", include_str!("../manifests/flat-spray.toml")),
    ];

    pub fn names() -> impl Iterator<Item = &'static str> {
        MANIFESTS.iter().map(|(n, _)| *n)
    }

    pub fn manifest(name: &str) -> Option<&'static str> {
        MANIFESTS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }

    /// Load a gallery entry; panics on an unknown name.
    pub fn load(name: &str) -> GeometrySpec {
        let text = manifest(name).unwrap_or_else(|| panic!("no gallery entry `{name}`"));
        load_manifest(text).expect("gallery manifests are valid")
    }
}

/// Deterministic samples, uniform in the x box times the y annulus.
pub fn sample_points(spec: &GeometrySpec, count: usize, seed: u64) -> Result<Vec<TangentPoint>, Error> {
    if count == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let (rmin, rmax) = spec.domain.y_annulus;
    let nf = n as f64;
    Ok((0..count)
        .map(|_| {
            let x = spec.domain.x.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect();
            let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: f64 = rng.random();
            let r = (rmin.powf(nf) + u * (rmax.powf(nf) - rmin.powf(nf))).powf(1.0 / nf);
            for d in &mut dir {
                *d *= r / norm;
            }
            TangentPoint { x, y: dir }
        })
        .collect())
}

/// One axiom check: the worst value seen and where.
#[derive(Clone, Debug)]
pub struct AxiomCheck {
    pub id: &'static str,
    pub description: &'static str,
    /// Worst residual (for homogeneity checks) or worst value (for the
    /// determinant and positivity checks).
    pub worst: f64,
    pub threshold: f64,
    pub witness: Option<TangentPoint>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<AxiomCheck>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub const DET_TOL: f64 = 1e-10;
const LAMBDAS: [f64; 3] = [0.5, 2.0, 3.0];

struct Worst {
    value: f64,
    witness: Option<TangentPoint>,
    maximize: bool,
}

impl Worst {
    fn new(maximize: bool) -> Worst {
        Worst { value: if maximize { 0.0 } else { f64::INFINITY }, witness: None, maximize }
    }
    fn see(&mut self, v: f64, pt: &TangentPoint) {
        let worse = if self.maximize { v > self.value || v.is_nan() } else { v < self.value || v.is_nan() };
        if worse || self.witness.is_none() {
            self.value = v;
            self.witness = Some(pt.clone());
        }
    }
}

fn eval_at(e: &Expr, pt: &TangentPoint, y: &[f64]) -> Result<f64, Error> {
    evaluate(e, &pt.x, y).map_err(|source| Error::Eval { point: pt.clone(), source })
}

/// Numerical check of (F2)–(F4) and the Euler relation on the samples.
pub fn validate_finsler(spec: &GeometrySpec, samples: &[TangentPoint], tol: f64) -> Result<ValidationReport, Error> {
    let f = spec.finsler_function().ok_or(Error::NotFinsler("validate_finsler"))?;
    let engine = Engine::new(spec, EngineOptions { g_order: 0, ..EngineOptions::default() })?;
    let mut hom = Worst::new(true);
    let mut euler = Worst::new(true);
    let mut det = Worst::new(false);
    let mut pos = Worst::new(false);
    for pt in samples {
        let fv = eval_at(f, pt, &pt.y)?;
        for lam in LAMBDAS {
            let ys: Vec<f64> = pt.y.iter().map(|v| lam * v).collect();
            let fl = eval_at(f, pt, &ys)?;
            hom.see((fl - lam * fv).abs() / fv.abs().max(f64::MIN_POSITIVE), pt);
        }
        let (e, de, g) = engine.energy_second_order(pt)?;
        let y_de: f64 = pt.y.iter().zip(&de).map(|(a, b)| a * b).sum();
        euler.see((y_de - 2.0 * e).abs() / e.abs().max(f64::MIN_POSITIVE), pt);
        let m = DMatrix::from_row_slice(spec.n, spec.n, &g);
        det.see(m.determinant().abs(), pt);
        if spec.positive_definite {
            let eig = m.symmetric_eigen().eigenvalues.min();
            pos.see(eig.min(fv), pt);
        }
    }
    let mut checks = vec![
        AxiomCheck {
            id: "F2-HOMOGENEITY",
            description: "|F(x,λy) − λF(x,y)| / |F| for λ in {0.5, 2, 3}",
            worst: hom.value,
            threshold: tol,
            pass: hom.value <= tol,
            witness: hom.witness,
        },
        AxiomCheck {
            id: "EULER",
            description: "|y·∂E/∂y − 2E| / |E|",
            worst: euler.value,
            threshold: tol,
            pass: euler.value <= tol,
            witness: euler.witness,
        },
        AxiomCheck {
            id: "F3-NONDEGENERATE",
            description: "smallest |det g|",
            worst: det.value,
            threshold: DET_TOL,
            pass: det.value >= DET_TOL,
            witness: det.witness,
        },
    ];
    if spec.positive_definite {
        checks.push(AxiomCheck {
            id: "F4-POSITIVE",
            description: "smallest of (eigenvalues of g, F)",
            worst: pos.value,
            threshold: 0.0,
            pass: pos.value > 0.0,
            witness: pos.witness,
        });
    }
    Ok(ValidationReport { checks })
}

/// Degree-2 homogeneity of explicitly given spray coefficients.
pub fn validate_spray(spec: &GeometrySpec, samples: &[TangentPoint], tol: f64) -> Result<ValidationReport, Error> {
    let engine = Engine::new(spec, EngineOptions { g_order: 0, ..EngineOptions::default() })?;
    let mut hom = Worst::new(true);
    for pt in samples {
        let g = engine.spray_values(pt)?;
        let scale = 1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for lam in LAMBDAS {
            let q = TangentPoint::new(pt.x.clone(), pt.y.iter().map(|v| lam * v).collect());
            let gl = engine.spray_values(&q)?;
            let r = g.iter().zip(&gl).fold(0.0f64, |m, (a, b)| m.max((b - lam * lam * a).abs()));
            hom.see(r / (lam * lam * scale), pt);
        }
    }
    Ok(ValidationReport {
        checks: vec![AxiomCheck {
            id: "S5-HOMOGENEITY",
            description: "|G(x,λy) − λ²G(x,y)| for λ in {0.5, 2, 3}, normalised",
            worst: hom.value,
            threshold: tol,
            pass: hom.value <= tol,
            witness: hom.witness,
        }],
    })
}

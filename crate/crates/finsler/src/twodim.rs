//! Two-dimensional Finsler manifolds: the Berwald frame and its scalars.
//!
//! `κ = g(R(m,ℓ),m)` is positively 1-homogeneous; the Gauss curvature of a
//! Riemannian surface is `κ/F`. Every relation is checked twice: with the
//! directional derivatives taken exactly on jets, and with central finite
//! differences (Richardson, base step 1e-3) of the pointwise scalars.

use crate::curvature::Pack;
use crate::jet::Jet;
use crate::manifold::{GeometrySpec, TangentPoint};
use crate::report::{Residual, ResidualEntry};
use crate::spraycore::{Engine, EngineOptions, Frame};
use crate::tensor::indices;
use crate::Error;

pub const EXACT_TOL: f64 = 1e-7;
pub const FD_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-3;

/// `(ℓ, m)` at one point; `det(ℓ, m) > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BerwaldFrame {
    pub pt: TangentPoint,
    pub ell: [f64; 2],
    pub m: [f64; 2],
    /// `m` is the Gram–Schmidt image of `(−ℓ²,ℓ¹)`, so `(ℓ, m)` is positively oriented.
    pub orientation: &'static str,
}

const ORIENTATION: &str = "positive: det(l, m) > 0";

fn require(spec: &GeometrySpec) -> Result<(), Error> {
    if spec.n != 2 {
        return Err(Error::Unsupported(format!("two-dimensional theory needs n = 2 (got {})", spec.n)));
    }
    if spec.finsler_function().is_none() {
        return Err(Error::NotFinsler("the Berwald frame"));
    }
    if !spec.positive_definite {
        return Err(Error::Unsupported("the Berwald frame needs a positive-definite metric".into()));
    }
    Ok(())
}

/// Frame vectors and scalars as jets.
struct Jets {
    ell: [Jet; 2],
    m: [Jet; 2],
    /// main scalar `C♭(m,m,m)`
    i: Jet,
    kappa: Jet,
    /// `g(R(m,ℓ),ℓ)`
    kappa_perp: Jet,
}

fn jets(pk: &Pack) -> Result<Jets, Error> {
    let g = pk.g()?;
    let l = pk.ell()?;
    let ell = [l.data[0].clone(), l.data[1].clone()];
    let gform = |a: &[Jet; 2], b: &[Jet; 2]| {
        let mut acc = g.at(&[0, 0]) * &a[0] * &b[0];
        for ix in indices(2, 2).skip(1) {
            acc = acc + g.at(&ix) * &a[ix[0]] * &b[ix[1]];
        }
        acc
    };
    let j = [-&ell[1], ell[0].clone()];
    let c = gform(&j, &ell);
    let mt = [&j[0] - &(&c * &ell[0]), &j[1] - &(&c * &ell[1])];
    let norm = gform(&mt, &mt).powf(-0.5);
    let m = [&mt[0] * &norm, &mt[1] * &norm];

    let cf = pk.cartan()?;
    let mut i = m[0].zero_like();
    for ix in indices(2, 3) {
        i = i + cf.at(&ix) * &m[ix[0]] * &m[ix[1]] * &m[ix[2]];
    }
    let r = pk.curvature();
    let rml: Vec<Jet> = (0..2)
        .map(|a| {
            let mut acc = m[0].zero_like();
            for ix in indices(2, 2) {
                acc = acc + r.at(&[a, ix[0], ix[1]]) * &m[ix[0]] * &ell[ix[1]];
            }
            acc
        })
        .collect();
    let rml = [rml[0].clone(), rml[1].clone()];
    Ok(Jets { kappa: gform(&rml, &m), kappa_perp: gform(&rml, &ell), ell, m, i })
}

/// `(i X) f = Xʳ ∂f/∂yʳ` at the point.
fn vertical(fr: &Frame, x: &[f64], f: &Jet) -> f64 {
    (0..fr.n).map(|r| x[r] * f.d1(fr.n + r)).sum()
}

/// `(H X) f = Xᵃ (∂f/∂xᵃ − Gʳ_a ∂f/∂yʳ)` at the point.
fn horizontal(fr: &Frame, x: &[f64], f: &Jet) -> f64 {
    let nc = fr.conn();
    let n = fr.n;
    (0..n).map(|a| x[a] * (f.d1(a) - (0..n).map(|r| nc.at(&[r, a]).value() * f.d1(n + r)).sum::<f64>())).sum()
}

fn vals(j: &[Jet; 2]) -> [f64; 2] {
    [j[0].value(), j[1].value()]
}

pub fn berwald_frame(spec: &GeometrySpec, pt: &TangentPoint) -> Result<BerwaldFrame, Error> {
    require(spec)?;
    let engine = Engine::new(spec, EngineOptions { g_order: 2, ..Default::default() })?;
    let fr = engine.frame(pt)?;
    let j = jets(&Pack::new(&fr))?;
    Ok(BerwaldFrame { pt: pt.clone(), ell: vals(&j.ell), m: vals(&j.m), orientation: ORIENTATION })
}

/// `κ = g(R(m,ℓ),m)`.
pub fn gauss_curvature(spec: &GeometrySpec, pt: &TangentPoint) -> Result<f64, Error> {
    require(spec)?;
    let engine = Engine::new(spec, EngineOptions { g_order: 2, ..Default::default() })?;
    let fr = engine.frame(pt)?;
    Ok(jets(&Pack::new(&fr))?.kappa.value())
}

/// `I = C♭(m,m,m)`, odd in `m`: reported with the positive orientation.
pub fn main_scalar(spec: &GeometrySpec, pt: &TangentPoint) -> Result<f64, Error> {
    require(spec)?;
    let engine = Engine::new(spec, EngineOptions { g_order: 2, ..Default::default() })?;
    let fr = engine.frame(pt)?;
    Ok(jets(&Pack::new(&fr))?.i.value())
}

/// Everything computed at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoDimRecord {
    pub frame: BerwaldFrame,
    pub f: f64,
    pub kappa: f64,
    /// `κ/F`, the Gauss curvature in the Riemannian case.
    pub gauss: f64,
    pub main_scalar: f64,
    pub si: f64,
    pub ssi: f64,
    pub si_fd: Option<f64>,
    pub ssi_fd: Option<f64>,
    /// Residual per check id at this point.
    pub residuals: Vec<(&'static str, f64)>,
    pub fd_skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoDimReport {
    pub records: Vec<TwoDimRecord>,
    pub entries: Vec<ResidualEntry>,
}

/// Check ids with their description and tolerance.
pub const CHECKS: &[(&str, &str, f64)] = &[
    ("FRAME-ORTHONORMAL", "g(l,l) = g(m,m) = 1, g(l,m) = 0", 1e-10),
    ("KAPPA-PERP", "g(R(m,l), l) = 0: kappa is the only curvature component", EXACT_TOL),
    ("JACFORM", "K = kappa F 1 - kappa dF (x) y", 1e-6),
    ("WEYL-ZERO", "Weyl endomorphism vanishes in dimension two", EXACT_TOL),
    ("CARTAN-FROM-I", "Cartan tensor = I m(x)m(x)m lowered", EXACT_TOL),
    ("BERWALD-IDENTITY", "I kappa + (i m)kappa + S(SI)/F = 0", EXACT_TOL),
    ("SURV-B", "B(m,m)m = -(2 SI/F) l + ((i m)SI + (H m)I) m", EXACT_TOL),
    ("TRB-MM", "trB(m,m) = (i m)SI + (H m)I", EXACT_TOL),
    ("SURV-LANDS", "P(m,m,m) = SI", EXACT_TOL),
    ("VAN-STRETCH", "Sigma(l,m,m,m) = (2/F) S(SI)", EXACT_TOL),
    ("BERWALD-IDENTITY-FD", "Berwald identity with finite-difference derivatives", FD_TOL),
    ("SURV-B-FD", "surviving Berwald component, finite differences", FD_TOL),
    ("TRB-MM-FD", "trB(m,m), finite differences", FD_TOL),
    ("SURV-LANDS-FD", "P(m,m,m) = SI, finite differences", FD_TOL),
    ("VAN-STRETCH-FD", "Sigma(l,m,m,m) = (2/F) S(SI), finite differences", FD_TOL),
];

fn scalar_res(terms: &[f64]) -> f64 {
    let mut r = Residual::new();
    r.push(terms);
    r.value()
}

/// Pointwise scalars used by the finite-difference route.
#[derive(Clone, Copy)]
struct Point {
    i: f64,
    kappa: f64,
}

struct Fd<'e> {
    engine: &'e Engine,
    spec: &'e GeometrySpec,
}

impl Fd<'_> {
    fn scalars(&self, pt: &TangentPoint) -> Result<Point, Error> {
        if !self.spec.domain.contains(&pt.x) {
            return Err(Error::Unsupported(format!("finite-difference stencil leaves the domain at {pt}")));
        }
        let fr = self.engine.frame_with_order(pt, 2)?;
        let j = jets(&Pack::new(&fr))?;
        Ok(Point { i: j.i.value(), kappa: j.kappa.value() })
    }

    /// Richardson-extrapolated central difference along `(dx, dy)` in TM.
    fn along(&self, pt: &TangentPoint, dx: &[f64], dy: &[f64], f: &dyn Fn(&TangentPoint) -> Result<f64, Error>) -> Result<f64, Error> {
        let norm = dx.iter().chain(dy).map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let h = FD_STEP / norm;
        let at = |t: f64| {
            let x: Vec<f64> = pt.x.iter().zip(dx).map(|(a, b)| a + t * b).collect();
            let y: Vec<f64> = pt.y.iter().zip(dy).map(|(a, b)| a + t * b).collect();
            f(&TangentPoint::new(x, y))
        };
        let d = |h: f64| -> Result<f64, Error> { Ok((at(h)? - at(-h)?) / (2.0 * h)) };
        let (d1, d2) = (d(h)?, d(h / 2.0)?);
        Ok((4.0 * d2 - d1) / 3.0)
    }

    /// `S f` by finite differences: direction `(y, −2G)`.
    fn spray(&self, pt: &TangentPoint, f: &dyn Fn(&TangentPoint) -> Result<f64, Error>) -> Result<f64, Error> {
        let g = self.engine.spray_values(pt)?;
        let dy: Vec<f64> = g.iter().map(|v| -2.0 * v).collect();
        self.along(pt, &pt.y, &dy, f)
    }
}

fn analyse(engine: &Engine, spec: &GeometrySpec, pt: &TangentPoint) -> Result<TwoDimRecord, Error> {
    let fr = engine.frame(pt)?;
    let pk = Pack::new(&fr);
    let j = jets(&pk)?;
    let (ell, m) = (vals(&j.ell), vals(&j.m));
    let f = pk.finsler()?.value();
    let (i, kappa) = (j.i.value(), j.kappa.value());

    let si_j = fr.spray_derivative(&j.i);
    let ssi_j = fr.spray_derivative(&si_j);
    let (si, ssi) = (si_j.value(), ssi_j.value());
    let im_kappa = vertical(&fr, &m, &j.kappa);
    let im_si = vertical(&fr, &m, &si_j);
    let hm_i = horizontal(&fr, &m, &j.i);

    let mut res: Vec<(&'static str, f64)> = Vec::new();

    let g = pk.g()?;
    let gv = |a: &[f64; 2], b: &[f64; 2]| indices(2, 2).map(|ix| g.at(&ix).value() * a[ix[0]] * b[ix[1]]).sum::<f64>();
    let ortho = (gv(&ell, &ell) - 1.0).abs().max((gv(&m, &m) - 1.0).abs()).max(gv(&ell, &m).abs());
    res.push(("FRAME-ORTHONORMAL", ortho));
    res.push(("KAPPA-PERP", scalar_res(&[j.kappa_perp.value()]) / (1.0 + kappa.abs())));

    let (k, lf) = (pk.jacobi(), pk.ell_flat()?);
    let mut r = Residual::new();
    for ix in indices(2, 2) {
        let (a, b) = (ix[0], ix[1]);
        let id = if a == b { kappa * f } else { 0.0 };
        r.push(&[k.at(&ix).value(), -id, kappa * lf.at(&[b]).value() * pt.y[a]]);
    }
    res.push(("JACFORM", r.value()));

    let w = pk.weyl0();
    let mut r = Residual::new();
    for x in &w.data {
        r.push(&[x.value()]);
    }
    res.push(("WEYL-ZERO", r.value() / (1.0 + k.data.iter().map(|x| x.value().abs()).fold(0.0, f64::max))));

    let cf = pk.cartan()?;
    let mflat: Vec<f64> = (0..2).map(|a| (0..2).map(|b| g.at(&[a, b]).value() * m[b]).sum()).collect();
    let mut r = Residual::new();
    for ix in indices(2, 3) {
        r.eq(cf.at(&ix).value(), i * mflat[ix[0]] * mflat[ix[1]] * mflat[ix[2]]);
    }
    res.push(("CARTAN-FROM-I", r.value()));

    let (b, tb, pl, sg) = (pk.berwald(), pk.tr_berwald(), pk.landsberg()?, pk.stretch()?);
    let bmmm: Vec<f64> = (0..2).map(|a| indices(2, 3).map(|ix| b.at(&[a, ix[0], ix[1], ix[2]]).value() * m[ix[0]] * m[ix[1]] * m[ix[2]]).sum()).collect();
    let trb_mm: f64 = indices(2, 2).map(|ix| tb.at(&ix).value() * m[ix[0]] * m[ix[1]]).sum();
    let p_mmm: f64 = indices(2, 3).map(|ix| pl.at(&ix).value() * m[ix[0]] * m[ix[1]] * m[ix[2]]).sum();
    let s_lmmm: f64 = indices(2, 4).map(|ix| sg.at(&ix).value() * ell[ix[0]] * m[ix[1]] * m[ix[2]] * m[ix[3]]).sum();

    let derived = |tag: &[&'static str; 5], si: f64, ssi: f64, im_kappa: f64, im_si: f64, hm_i: f64, res: &mut Vec<(&'static str, f64)>| {
        res.push((tag[0], scalar_res(&[i * kappa, im_kappa, ssi / f])));
        let mut r = Residual::new();
        for a in 0..2 {
            r.push(&[bmmm[a], 2.0 * si / f * ell[a], -(im_si + hm_i) * m[a]]);
        }
        res.push((tag[1], r.value()));
        res.push((tag[2], scalar_res(&[trb_mm, -im_si, -hm_i])));
        res.push((tag[3], scalar_res(&[p_mmm, -si])));
        res.push((tag[4], scalar_res(&[s_lmmm, -2.0 / f * ssi])));
    };
    derived(&["BERWALD-IDENTITY", "SURV-B", "TRB-MM", "SURV-LANDS", "VAN-STRETCH"], si, ssi, im_kappa, im_si, hm_i, &mut res);

    // the same with finite differences of pointwise scalars
    let fd = Fd { engine, spec };
    let zero = [0.0, 0.0];
    let mut fd_fail = None;
    let fd_run = || -> Result<(f64, f64, f64, f64, f64), Error> {
        let i_of = |p: &TangentPoint| fd.scalars(p).map(|s| s.i);
        let si_of = |p: &TangentPoint| fd.spray(p, &i_of);
        let si = si_of(pt)?;
        let ssi = fd.spray(pt, &si_of)?;
        let im_kappa = fd.along(pt, &zero, &m, &|p| fd.scalars(p).map(|s| s.kappa))?;
        let im_si = fd.along(pt, &zero, &m, &si_of)?;
        let nc = fr.conn();
        let vdy: Vec<f64> = (0..2).map(|r| -(0..2).map(|a| nc.at(&[r, a]).value() * m[a]).sum::<f64>()).collect();
        let hm_i = fd.along(pt, &m, &vdy, &i_of)?;
        Ok((si, ssi, im_kappa, im_si, hm_i))
    };
    let (mut si_fd, mut ssi_fd) = (None, None);
    match fd_run() {
        Ok((a, b, c, d, e)) => {
            si_fd = Some(a);
            ssi_fd = Some(b);
            derived(&["BERWALD-IDENTITY-FD", "SURV-B-FD", "TRB-MM-FD", "SURV-LANDS-FD", "VAN-STRETCH-FD"], a, b, c, d, e, &mut res);
        }
        Err(e) => fd_fail = Some(e.to_string()),
    }

    Ok(TwoDimRecord {
        frame: BerwaldFrame { pt: pt.clone(), ell, m, orientation: ORIENTATION },
        f,
        kappa,
        gauss: kappa / f,
        main_scalar: i,
        si,
        ssi,
        si_fd,
        ssi_fd,
        residuals: res,
        fd_skipped: fd_fail,
    })
}

pub fn two_dim_report(spec: &GeometrySpec, samples: &[TangentPoint], opts: EngineOptions) -> Result<TwoDimReport, Error> {
    use rayon::prelude::*;
    require(spec)?;
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let engine = Engine::new(spec, opts)?;
    let records = samples.par_iter().map(|pt| analyse(&engine, spec, pt)).collect::<Result<Vec<_>, _>>()?;
    let mut entries: Vec<ResidualEntry> = CHECKS.iter().map(|(id, name, tol)| ResidualEntry::new(id, name, name, *tol)).collect();
    for e in entries.iter_mut() {
        e.fd = e.id.ends_with("-FD");
    }
    for rec in &records {
        for (id, r) in &rec.residuals {
            let e = entries.iter_mut().find(|e| e.id == *id).expect("known check id");
            e.record(*r, &rec.frame.pt);
        }
    }
    let skipped = records.iter().filter(|r| r.fd_skipped.is_some()).count();
    for e in entries.iter_mut().filter(|e| e.fd) {
        if e.residual.is_none() {
            e.skip(format!("finite-difference stencils left the domain at all {skipped} samples"));
        }
    }
    Ok(TwoDimReport { records, entries })
}

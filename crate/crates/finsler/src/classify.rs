//! Class verdicts from sampled curvature data.

use crate::curvature::Pack;
use crate::identities::DEFAULT_TOL;
use crate::manifold::{GeometrySpec, TangentPoint};
use crate::spraycore::{Engine, EngineOptions};
use crate::tensor::{indices, JetTensor};
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    /// Largest offending magnitude over the samples.
    pub residual: f64,
    pub witness: Option<TangentPoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdicts {
    /// `None` for classes that need a Finsler function.
    pub riemannian: Option<Verdict>,
    pub berwald: Verdict,
    pub weakly_berwald: Verdict,
    pub douglas: Verdict,
    pub p_berwald: Option<Verdict>,
    pub landsberg_free: Option<Verdict>,
    pub r_quadratic: Verdict,
    pub isotropic: Verdict,
    pub constant_curvature: Option<Verdict>,
    /// Mean and sample standard deviation of `trK/((n−1)F²)`; only when isotropic.
    pub scalar_curvature: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

impl Verdicts {
    /// Named booleans in a fixed order.
    pub fn flags(&self) -> Vec<(&'static str, Option<&Verdict>)> {
        vec![
            ("riemannian", self.riemannian.as_ref()),
            ("berwald", Some(&self.berwald)),
            ("weakly_berwald", Some(&self.weakly_berwald)),
            ("douglas", Some(&self.douglas)),
            ("p_berwald", self.p_berwald.as_ref()),
            ("landsberg_free", self.landsberg_free.as_ref()),
            ("r_quadratic", Some(&self.r_quadratic)),
            ("isotropic", Some(&self.isotropic)),
            ("constant_curvature", self.constant_curvature.as_ref()),
        ]
    }

    /// Berwald ⇒ weakly Berwald ∧ Douglas ∧ Landsberg-free.
    pub fn check_consistency(&self) -> Result<(), Error> {
        if self.berwald.holds {
            let mut broken = Vec::new();
            if !self.weakly_berwald.holds {
                broken.push("weakly_berwald");
            }
            if !self.douglas.holds {
                broken.push("douglas");
            }
            if matches!(&self.landsberg_free, Some(v) if !v.holds) {
                broken.push("landsberg_free");
            }
            if !broken.is_empty() {
                return Err(Error::Consistency(format!("berwald holds but {} fails", broken.join(", "))));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    pub engine: EngineOptions,
    pub tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { engine: EngineOptions::default(), tol: DEFAULT_TOL }
    }
}

#[derive(Default)]
struct Max {
    v: f64,
    at: Option<TangentPoint>,
}

impl Max {
    fn see(&mut self, x: f64, pt: &TangentPoint) {
        if self.at.is_none() || x > self.v || x.is_nan() {
            self.v = x;
            self.at = Some(pt.clone());
        }
    }
    fn verdict(self, tol: f64) -> Verdict {
        Verdict { holds: self.v <= tol, residual: self.v, witness: self.at }
    }
}

fn max_abs(t: &JetTensor) -> f64 {
    t.data.iter().map(|j| j.value().abs()).fold(0.0, f64::max)
}

pub fn classify(spec: &GeometrySpec, samples: &[TangentPoint], opts: &ClassifyOptions) -> Result<Verdicts, Error> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let engine = Engine::new(spec, opts.engine)?;
    let fin = spec.finsler_function().is_some();
    let n = spec.n;
    let [mut cartan, mut b, mut trb, mut d, mut pb, mut p, mut dh, mut iso] = std::array::from_fn(|_| Max::default());
    let mut rs = Vec::with_capacity(samples.len());

    for pt in samples {
        let fr = engine.frame(pt)?;
        let pk = Pack::new(&fr);
        b.see(max_abs(&pk.berwald()), pt);
        trb.see(max_abs(&pk.tr_berwald()), pt);
        d.see(max_abs(&pk.douglas()), pt);
        dh.see(max_abs(&pk.v_affine()), pt);
        let w0 = max_abs(&pk.weyl0()) / (1.0 + max_abs(&pk.jacobi()));
        if fin {
            cartan.see(max_abs(&*pk.cartan()?), pt);
            let (bb, pl, e) = (pk.berwald(), pk.landsberg()?, pk.energy()?.value());
            p.see(max_abs(&pl), pt);
            let mut worst = 0.0f64;
            for ix in indices(n, 4) {
                worst = worst.max((bb.at(&ix).value() + pl.at(&ix[1..]).value() * pt.y[ix[0]] / e).abs());
            }
            pb.see(worst, pt);
            if n == 2 {
                // K = K̂ p, normalized like the identity suite
                let (k, pp) = (pk.jacobi(), pk.proj()?);
                let khat = pk.tr_jacobi().value();
                let (mut num, mut scale) = (0.0f64, 0.0f64);
                for ix in indices(n, 2) {
                    let (a, c) = (k.at(&ix).value(), khat * pp.at(&ix).value());
                    num = num.max((a - c).abs());
                    scale = scale.max(a.abs()).max(c.abs());
                }
                iso.see(num / (1.0 + scale), pt);
            } else {
                iso.see(w0, pt);
            }
            rs.push(pk.scalar_curvature()?.value());
        } else {
            iso.see(w0, pt);
        }
    }

    let tol = opts.tol;
    let isotropic = iso.verdict(tol);
    let mut notes = Vec::new();
    let scalar_curvature = (fin && isotropic.holds).then(|| {
        let m = rs.len() as f64;
        let mean = rs.iter().sum::<f64>() / m;
        let var = if rs.len() > 1 { rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
        (mean, var.sqrt())
    });
    let constant_curvature = fin.then_some(match scalar_curvature {
        Some((_, sd)) => Verdict { holds: sd <= tol, residual: sd, witness: None },
        None => Verdict { holds: false, residual: f64::NAN, witness: None },
    });
    let riemannian = fin.then(|| cartan.verdict(tol));
    let berwald = b.verdict(tol);
    if let Some(r) = &riemannian {
        if r.holds && !berwald.holds {
            let at = berwald.witness.as_ref().map(|w| w.to_string()).unwrap_or_default();
            notes.push(format!("Cartan tensor vanishes but B does not (max {:.3e} at {at})", berwald.residual));
        }
    }
    let v = Verdicts {
        riemannian,
        berwald,
        weakly_berwald: trb.verdict(tol),
        douglas: d.verdict(tol),
        p_berwald: fin.then(|| pb.verdict(tol)),
        landsberg_free: fin.then(|| p.verdict(tol)),
        r_quadratic: dh.verdict(tol),
        isotropic,
        constant_curvature,
        scalar_curvature,
        notes,
    };
    v.check_consistency()?;
    Ok(v)
}

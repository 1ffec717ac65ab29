//! The identity catalogue and the suite runner.
//!
//! Every relation is tested on coordinate basis sections, which suffices by
//! multilinearity. Residuals are `max|Σ terms| / (1 + max|term|)`, maxed over
//! free indices and then over samples.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::curvature::Pack;
use crate::jet::Jet;
use crate::manifold::{GeometrySpec, TangentPoint};
use crate::report::{Residual, ResidualEntry, ResidualReport};
use crate::spraycore::{Engine, EngineOptions, Frame};
use crate::tensor::{indices, JetTensor};
use crate::Error;

pub const DEFAULT_TOL: f64 = 1e-7;
/// Tolerance for residuals that involve finite-difference partials.
pub const FD_TOL: f64 = 1e-4;

pub enum Outcome {
    Residual(f64),
    Skip(String),
}

type Eval = fn(&Pack) -> Result<Outcome, Error>;

pub struct Identity {
    pub id: &'static str,
    pub name: &'static str,
    pub anchor: &'static str,
    pub finsler_only: bool,
    /// Highest total order of spray partials entering the residual.
    pub depth: usize,
    pub eval: Eval,
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub engine: EngineOptions,
    pub tol: f64,
    pub fd_tol: f64,
    pub overrides: BTreeMap<String, f64>,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> SuiteOptions {
        SuiteOptions { engine: EngineOptions::default(), tol: DEFAULT_TOL, fd_tol: FD_TOL, overrides: BTreeMap::new(), seed: 0 }
    }
}

// ---- helpers ------------------------------------------------------------

fn v(t: &JetTensor, ix: &[usize]) -> f64 {
    t.at(ix).value()
}

fn ok(r: Residual) -> Result<Outcome, Error> {
    Ok(Outcome::Residual(r.value()))
}

fn worst(a: Residual, b: Residual) -> Result<Outcome, Error> {
    Ok(Outcome::Residual(a.value().max(b.value())))
}

fn insert(ix: &[usize], at: usize, a: usize) -> Vec<usize> {
    let mut j = ix[..at].to_vec();
    j.push(a);
    j.extend_from_slice(&ix[at..]);
    j
}

/// `y·∂_y T = d T`.
fn homogeneity(p: &Pack, t: &JetTensor, d: f64) -> Residual {
    let dt = p.fr.dy(t);
    let y = &p.fr.pt.y;
    let mut r = Residual::new();
    for ix in indices(t.n, t.rank) {
        let mut terms: Vec<f64> = (0..t.n).map(|a| y[a] * v(&dt, &insert(&ix, t.up, a))).collect();
        terms.push(-d * v(t, &ix));
        r.push(&terms);
    }
    r
}

/// `T` with `y` inserted in `slot` vanishes.
fn y_slot(p: &Pack, t: &JetTensor, slot: usize) -> Residual {
    let y = &p.fr.pt.y;
    let mut r = Residual::new();
    for ix in indices(t.n, t.rank - 1) {
        let terms: Vec<f64> = (0..t.n).map(|a| y[a] * v(t, &insert(&ix, slot, a))).collect();
        r.push(&terms);
    }
    r
}

fn y_lower_slots(p: &Pack, t: &JetTensor) -> Residual {
    let mut r = Residual::new();
    for s in t.up..t.rank {
        let q = y_slot(p, t, s);
        if q.value() > r.value() || q.value().is_nan() {
            r = q;
        }
    }
    r
}

/// Invariance of the lower slots under every transposition.
fn symmetric_lower(t: &JetTensor) -> Residual {
    let mut r = Residual::new();
    for ix in indices(t.n, t.rank) {
        for a in t.up..t.rank {
            for b in a + 1..t.rank {
                let mut s = ix.clone();
                s.swap(a, b);
                r.eq(v(t, &ix), v(t, &s));
            }
        }
    }
    r
}

fn agree(a: &JetTensor, b: &JetTensor) -> Residual {
    let mut r = Residual::new();
    for (x, y) in a.data.iter().zip(&b.data) {
        r.eq(x.value(), y.value());
    }
    r
}

/// A fixed nonlinear function on TM used to probe the commutation rules.
fn probe(fr: &Frame) -> Jet {
    let (xs, ys, n) = (&fr.xs, &fr.ys, fr.n);
    let one = xs[0].zero_like().add_const(1.0);
    let mut q = one.clone();
    for (k, yk) in ys.iter().enumerate() {
        q = q + (yk * yk).scale(k as f64 + 1.0);
    }
    let a = (&xs[0] * &xs[n - 1]).add_const(1.0) * &ys[0] * &ys[0] * &ys[n - 1];
    a + &xs[n - 1] * &q.sqrt() + &xs[0] * &xs[0] * &ys[n - 1]
}

/// `p(T(pX, pY, …))` for a (1,k) tensor given by values.
fn project(p: &JetTensor, t: &JetTensor) -> Vec<f64> {
    let n = t.n;
    let k = t.rank - 1;
    let mut cur: Vec<f64> = t.data.iter().map(Jet::value).collect();
    // each slot in turn: out[.. s ..] = Σ_r T[.. r ..] pʳ_s for lower slots, Σ_r pⁱ_r T[r ..] for the upper one
    for slot in 0..=k {
        let mut next = vec![0.0; cur.len()];
        for (pos, ix) in indices(n, k + 1).enumerate() {
            let mut acc = 0.0;
            let mut j = ix.clone();
            for r in 0..n {
                j[slot] = r;
                let pv = if slot == 0 { v(p, &[ix[0], r]) } else { v(p, &[r, ix[slot]]) };
                acc += pv * cur[crate::tensor::flat(n, &j)];
            }
            next[pos] = acc;
        }
        cur = next;
    }
    cur
}

// ---- the catalogue --------------------------------------------------------

macro_rules! id {
    ($id:literal, $name:literal, $anchor:literal, $fin:expr, $depth:expr, $eval:expr) => {
        Identity { id: $id, name: $name, anchor: $anchor, finsler_only: $fin, depth: $depth, eval: $eval }
    };
}

pub fn catalogue() -> Vec<Identity> {
    vec![
        id!("HOM-F", "F is positively 1-homogeneous", "axiom: positive homogeneity of the Finsler function", true, 0, |p| {
            ok(homogeneity(p, &p.fr.scalar(&p.finsler()?), 1.0))
        }),
        id!("EULER-E", "E is positively 2-homogeneous", "energy function is homogeneous of degree 2", true, 0, |p| {
            ok(homogeneity(p, &p.fr.scalar(&p.energy()?), 2.0))
        }),
        id!("G-HOM", "spray coefficients are 2-homogeneous", "axiom: spray homogeneity", false, 1, |p| ok(homogeneity(p, &p.spray(), 2.0))),
        id!("TENSION", "h∇δ = 0", "spray connections have vanishing tension", false, 2, |p| {
            let t = p.fr.hnabla(&p.fr.y_vector());
            let mut r = Residual::new();
            // δ_j yⁱ = −Gⁱ_j, plus Γⁱ_{jr}yʳ
            let (n, nc, gm, y) = (p.n(), p.conn(), p.gamma(), &p.fr.pt.y);
            for ix in indices(n, 2) {
                let mut terms = vec![-v(&nc, &ix)];
                terms.extend((0..n).map(|r| v(&gm, &[ix[0], ix[1], r]) * y[r]));
                r.push(&terms);
                r.push(&[v(&t, &ix)]);
            }
            ok(r)
        }),
        id!("TORSION", "Γ is symmetric", "the spray connection is torsion-free", false, 2, |p| ok(symmetric_lower(&p.gamma()))),
        id!("CONS", "δ_i F = 0", "the Berwald connection is conservative", true, 1, |p| {
            let d = p.fr.delta(&p.fr.scalar(&p.finsler()?));
            let (n, nc, lf) = (p.n(), p.conn(), p.ell_flat()?);
            let f = p.finsler()?;
            let mut r = Residual::new();
            for i in 0..n {
                let mut terms = vec![f.d1(i)];
                terms.extend((0..n).map(|s| -v(&nc, &[s, i]) * v(&lf, &[s])));
                r.push(&terms);
                r.push(&[v(&d, &[i])]);
            }
            ok(r)
        }),
        id!("HILBERT", "θ = g(δ, ·)", "Hilbert 1-form", true, 0, |p| {
            let (g, th, y) = (p.g()?, p.theta()?, &p.fr.pt.y);
            let mut r = Residual::new();
            for i in 0..p.n() {
                let mut terms: Vec<f64> = (0..p.n()).map(|j| v(&g, &[i, j]) * y[j]).collect();
                terms.push(-v(&th, &[i]));
                r.push(&terms);
            }
            ok(r)
        }),
        id!("METRIC-DELTA", "g(δ, δ) = 2E", "metric evaluated on the canonical section", true, 0, |p| {
            let (g, y) = (p.g()?, &p.fr.pt.y);
            let mut terms: Vec<f64> = indices(p.n(), 2).map(|ix| v(&g, &ix) * y[ix[0]] * y[ix[1]]).collect();
            terms.push(-2.0 * p.energy()?.value());
            let mut r = Residual::new();
            r.push(&terms);
            ok(r)
        }),
        id!("METRIC-HOM", "g is 0-homogeneous", "metric tensor is homogeneous of degree 0", true, 1, |p| ok(homogeneity(p, &*p.g()?, 0.0))),
        id!("CARTAN-SYM", "C♭ totally symmetric", "Cartan tensor symmetry", true, 1, |p| ok(symmetric_lower(&*p.cartan()?))),
        id!("CARTAN-DELTA", "C♭(δ, ·, ·) = 0", "Cartan tensor annihilates the canonical section", true, 1, |p| ok(y_lower_slots(p, &*p.cartan()?))),
        id!("CARTAN-HOM", "C♭ is (−1)-homogeneous", "Cartan tensor is homogeneous of degree −1", true, 2, |p| {
            ok(homogeneity(p, &*p.cartan()?, -1.0))
        }),
        id!("CARTAN-VEC-ORTH", "g(C*, δ) = 0", "Cartan vector field is g-orthogonal to the canonical section", true, 1, |p| {
            let (g, cv, y) = (p.g()?, p.cartan_vector()?, &p.fr.pt.y);
            let mut r = Residual::new();
            r.push(&indices(p.n(), 2).map(|ix| v(&g, &ix) * v(&cv, &[ix[0]]) * y[ix[1]]).collect::<Vec<_>>());
            ok(r)
        }),
        id!("ELL-NORM", "g(ℓ, ℓ) = 1", "unit length of the normalized canonical section", true, 0, |p| {
            let (g, l) = (p.g()?, p.ell()?);
            let mut terms: Vec<f64> = indices(p.n(), 2).map(|ix| v(&g, &ix) * v(&l, &[ix[0]]) * v(&l, &[ix[1]])).collect();
            terms.push(-1.0);
            let mut r = Residual::new();
            r.push(&terms);
            ok(r)
        }),
        id!("ANGULAR-HESSIAN", "∂²F/∂y∂y = η/F", "angular metric as the vertical Hessian of F", true, 0, |p| {
            let hf = p.fr.dy(&*p.ell_flat()?);
            let (eta, f) = (p.eta()?, p.finsler()?.value());
            let mut r = Residual::new();
            for ix in indices(p.n(), 2) {
                r.eq(v(&hf, &ix), v(&eta, &ix) / f);
            }
            ok(r)
        }),
        id!("THIRD-DERIV", "∂³F in terms of C♭, ℓ♭, η", "third vertical derivative of the Finsler function", true, 1, |p| {
            let d3 = p.fr.dy(&p.fr.dy(&*p.ell_flat()?));
            let (c, l, eta, f) = (p.cartan()?, p.ell_flat()?, p.eta()?, p.finsler()?.value());
            let mut r = Residual::new();
            for ix in indices(p.n(), 3) {
                let (x, y, z) = (ix[0], ix[1], ix[2]);
                let ff = f * f;
                r.push(&[
                    v(&d3, &ix),
                    -2.0 / f * v(&c, &ix),
                    v(&l, &[x]) * v(&eta, &[y, z]) / ff,
                    v(&l, &[y]) * v(&eta, &[z, x]) / ff,
                    v(&l, &[z]) * v(&eta, &[x, y]) / ff,
                ]);
            }
            ok(r)
        }),
        id!("B-SYM", "B totally symmetric", "the Berwald curvature is totally symmetric", false, 3, |p| ok(symmetric_lower(&p.berwald()))),
        id!("B-DELTA", "B vanishes on δ in every slot", "Berwald curvature annihilates the canonical section", false, 3, |p| {
            ok(y_lower_slots(p, &p.berwald()))
        }),
        id!("B-HOM", "B is (−1)-homogeneous", "Berwald curvature is homogeneous of degree −1", false, 4, |p| {
            ok(homogeneity(p, &p.berwald(), -1.0))
        }),
        id!("TENSION-B", "B(X,Y)δ = ∇ᵛt(X,Y)", "tension and Berwald curvature (both sides vanish for sprays)", false, 3, |p| {
            // t(X) = Γ(X, δ) − N(X): identically zero for a spray
            let (n, gm, nc) = (p.n(), p.gamma(), p.conn());
            let y = p.fr.y_vector();
            let t = JetTensor::from_fn(n, 2, 1, |ix| {
                let mut acc = -nc.at(ix).clone();
                for r in 0..n {
                    acc = acc + gm.at(&[ix[0], ix[1], r]) * y.at(&[r]);
                }
                acc
            });
            let dt = p.fr.dy(&t); // [i][k][j] = ∂_k tⁱ_j
            let b = p.berwald();
            let yv = &p.fr.pt.y;
            let mut r = Residual::new();
            for ix in indices(n, 3) {
                let (i, j, k) = (ix[0], ix[1], ix[2]);
                let mut terms: Vec<f64> = (0..n).map(|l| v(&b, &[i, j, k, l]) * yv[l]).collect();
                terms.push(-v(&dt, &[i, k, j]));
                r.push(&terms);
            }
            ok(r)
        }),
        id!("K-DELTA", "K(δ) = 0", "Jacobi endomorphism annihilates the canonical section", false, 2, |p| ok(y_slot(p, &p.jacobi(), 1))),
        id!("K-HOM", "K is 2-homogeneous", "Jacobi endomorphism is homogeneous of degree 2", false, 3, |p| ok(homogeneity(p, &p.jacobi(), 2.0))),
        id!("K-FROM-R", "K(X) = R(X, δ)", "Jacobi endomorphism as a contraction of the curvature", false, 2, |p| {
            ok(agree(&p.jacobi(), &p.jacobi_from_curvature()))
        }),
        id!("R-HOM", "R is 1-homogeneous", "curvature is homogeneous of degree 1", false, 3, |p| ok(homogeneity(p, &p.curvature(), 1.0))),
        id!("R-ANTISYM", "R(X,Y) = −R(Y,X)", "curvature is skew-symmetric", false, 2, |p| {
            let rr = p.curvature();
            let mut r = Residual::new();
            for ix in indices(p.n(), 3) {
                r.push(&[v(&rr, &ix), v(&rr, &[ix[0], ix[2], ix[1]])]);
            }
            ok(r)
        }),
        id!("H-HOM", "H is 0-homogeneous", "affine curvature is homogeneous of degree 0", false, 4, |p| ok(homogeneity(p, &p.affine(), 0.0))),
        id!("R-FROM-K", "R = ⅓ antisymmetrized ∂ᵛK", "curvature recovered from the affine deviation", false, 3, |p| {
            ok(agree(&p.curvature(), &p.curvature_from_jacobi()))
        }),
        id!("TR-R", "tr R = ⅓(∂ᵛ trK − tr ∂ᵛK)", "trace of the curvature", false, 3, |p| {
            let (n, tr) = (p.n(), p.tr_curvature());
            let dk = p.fr.dy(&p.jacobi()); // [i][a][j]
            let trk = p.tr_jacobi();
            let mut r = Residual::new();
            for k in 0..n {
                let mut terms = vec![v(&tr, &[k]), -trk.d1(n + k) / 3.0];
                terms.extend((0..n).map(|i| v(&dk, &[i, i, k]) / 3.0));
                r.push(&terms);
            }
            ok(r)
        }),
        id!("H-FROM-R", "H = ∂ᵛR, coordinate form", "affine curvature in terms of the connection coefficients", false, 3, |p| {
            ok(agree(&p.affine(), &p.affine_coordinate()))
        }),
        id!("R-FROM-H", "H(X,Y)δ = R(X,Y)", "curvature reproduced from the affine curvature", false, 3, |p| {
            let (h, rr, y) = (p.affine(), p.curvature(), &p.fr.pt.y);
            let mut r = Residual::new();
            for ix in indices(p.n(), 3) {
                let mut terms: Vec<f64> = (0..p.n()).map(|a| v(&h, &[ix[0], ix[1], ix[2], a]) * y[a]).collect();
                terms.push(-v(&rr, &ix));
                r.push(&terms);
            }
            ok(r)
        }),
        id!("BIANCHI-ALG", "cyclic sum of H vanishes", "first Bianchi identity", false, 3, |p| {
            let h = p.affine();
            let mut r = Residual::new();
            for ix in indices(p.n(), 4) {
                let (i, a, b, c) = (ix[0], ix[1], ix[2], ix[3]);
                r.push(&[v(&h, &[i, a, b, c]), v(&h, &[i, b, c, a]), v(&h, &[i, c, a, b])]);
            }
            ok(r)
        }),
        id!("BIANCHI-DIFF", "∇ᵛH(X,Y,Z,U) = h∇B(Y,X,Z,U) − h∇B(Z,X,Y,U)", "vertical derivative of H by horizontal derivatives of B", false, 4, |p| {
            let (dh, hb) = (p.v_affine(), p.h_berwald());
            let mut r = Residual::new();
            for ix in indices(p.n(), 5) {
                let (i, x, y, z, u) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
                r.push(&[v(&dh, &ix), -v(&hb, &[i, y, x, z, u]), v(&hb, &[i, z, x, y, u])]);
            }
            ok(r)
        }),
        id!("BIANCHI-DIFF-SYM", "∇ᵛH(X,Y,Z,U) = h∇B(Y,Z,X,U) − h∇B(Z,Y,X,U)", "symmetrized form of the differential Bianchi identity", false, 4, |p| {
            let (dh, hb) = (p.v_affine(), p.h_berwald());
            let mut r = Residual::new();
            for ix in indices(p.n(), 5) {
                let (i, x, y, z, u) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
                r.push(&[v(&dh, &ix), -v(&hb, &[i, y, z, x, u]), v(&hb, &[i, z, y, x, u])]);
            }
            ok(r)
        }),
        id!("BIANCHI-GEN", "cyclic sum of h∇R vanishes", "second Bianchi identity for the curvature", false, 3, |p| {
            let hr = p.h_curvature();
            let mut r = Residual::new();
            for ix in indices(p.n(), 4) {
                let (i, x, y, z) = (ix[0], ix[1], ix[2], ix[3]);
                r.push(&[v(&hr, &[i, x, y, z]), v(&hr, &[i, y, z, x]), v(&hr, &[i, z, x, y])]);
            }
            ok(r)
        }),
        id!("RICCI-VH", "∇ᵛh∇f(X,Y) = h∇∇ᵛf(Y,X)", "Ricci identity for functions, mixed derivatives", false, 2, |p| {
            let f = |j: &Jet| {
                let s = p.fr.scalar(j);
                let a = p.fr.dy(&p.fr.delta(&s)); // [x][y] = ∂_x δ_y f
                let b = p.fr.hnabla(&p.fr.dy(&s)); // [y][x]
                let mut r = Residual::new();
                for ix in indices(p.n(), 2) {
                    r.eq(v(&a, &ix), v(&b, &[ix[1], ix[0]]));
                }
                r
            };
            let t = f(&probe(p.fr));
            match p.energy() {
                Ok(e) => worst(t, f(&e)),
                Err(_) => ok(t),
            }
        }),
        id!("RICCI-HH-F", "[δ_i, δ_j] f = −Rʳ_{ij} ∂f/∂yʳ", "Ricci identity for functions, horizontal derivatives", false, 2, |p| {
            let rr = p.curvature();
            let f = |j: &Jet| {
                let s = p.fr.scalar(j);
                let dd = p.fr.delta(&p.fr.delta(&s));
                let mut r = Residual::new();
                for ix in indices(p.n(), 2) {
                    let (a, b) = (ix[0], ix[1]);
                    let mut terms = vec![v(&dd, &[a, b]), -v(&dd, &[b, a])];
                    terms.extend((0..p.n()).map(|k| v(&rr, &[k, a, b]) * j.d1(p.n() + k)));
                    r.push(&terms);
                }
                r
            };
            let t = f(&probe(p.fr));
            match p.finsler() {
                Ok(ff) => worst(t, f(&ff)),
                Err(_) => ok(t),
            }
        }),
        id!("RICCI-VH-TENSOR", "h∇∇ᵛA(X,Y,…) − ∇ᵛh∇A(Y,X,…) = Σ A(…, B(Y,X)Z, …)", "Ricci identity for covariant tensors", false, 3, |p| {
            let b = p.berwald();
            let f = |a: &JetTensor| {
                let hv = p.fr.hnabla(&p.fr.dy(a));
                let vh = p.fr.dy(&p.fr.hnabla(a));
                let mut r = Residual::new();
                for ix in indices(p.n(), a.rank + 2) {
                    let (x, y) = (ix[0], ix[1]);
                    let mut terms = vec![v(&hv, &ix), -v(&vh, &[&[y, x][..], &ix[2..]].concat())];
                    for s in 0..a.rank {
                        let mut j = ix[2..].to_vec();
                        for q in 0..p.n() {
                            j[s] = q;
                            terms.push(-v(&b, &[q, y, x, ix[2 + s]]) * v(a, &j));
                        }
                    }
                    r.push(&terms);
                }
                r
            };
            let h = p.fr.dy(&p.fr.dy(&p.fr.scalar(&probe(p.fr))));
            let t = f(&h);
            match p.g() {
                Ok(g) => worst(t, f(&g)),
                Err(_) => ok(t),
            }
        }),
        id!("RICCI-HH-FORM", "h∇h∇A antisymmetrized = −A∘H − ∇ᵛA∘R", "Ricci identity for 1-forms, horizontal derivatives", false, 3, |p| {
            let (h, rr) = (p.affine(), p.curvature());
            let a = p.fr.dy(&p.fr.scalar(&probe(p.fr)));
            let (hh, va) = (p.fr.hnabla(&p.fr.hnabla(&a)), p.fr.dy(&a)); // va [r][z] = ∂_r A_z
            let mut r = Residual::new();
            for ix in indices(p.n(), 3) {
                let (x, y, z) = (ix[0], ix[1], ix[2]);
                let mut terms = vec![v(&hh, &[x, y, z]), -v(&hh, &[y, x, z])];
                for q in 0..p.n() {
                    terms.push(v(&a, &[q]) * v(&h, &[q, x, y, z]));
                    terms.push(v(&rr, &[q, x, y]) * v(&va, &[q, z]));
                }
                r.push(&terms);
            }
            ok(r)
        }),
        id!("RICCI-HH-VEC", "h∇h∇V antisymmetrized = H(·,·)V − ∇ᵛV∘R", "Ricci identity for vector fields, horizontal derivatives", false, 3, |p| {
            let (h, rr) = (p.affine(), p.curvature());
            let a = p.fr.dy(&p.fr.scalar(&probe(p.fr)));
            let vv = JetTensor { n: a.n, rank: 1, up: 1, data: a.data.clone() };
            let (hh, dv) = (p.fr.hnabla(&p.fr.hnabla(&vv)), p.fr.dy(&vv)); // hh [a][x][y], dv [a][r]
            let mut r = Residual::new();
            for ix in indices(p.n(), 3) {
                let (c, x, y) = (ix[0], ix[1], ix[2]);
                let mut terms = vec![v(&hh, &[c, x, y]), -v(&hh, &[c, y, x])];
                for q in 0..p.n() {
                    terms.push(-v(&h, &[c, x, y, q]) * v(&vv, &[q]));
                    terms.push(v(&rr, &[q, x, y]) * v(&dv, &[c, q]));
                }
                r.push(&terms);
            }
            ok(r)
        }),
        id!("LAND-FROM-B", "P = −½ θ∘B", "Landsberg tensor from the Berwald curvature", true, 3, |p| {
            ok(agree(&*p.landsberg()?, &*p.landsberg_from_berwald()?))
        }),
        id!("LAND-SYM", "P totally symmetric", "symmetry of the Landsberg tensor", true, 2, |p| ok(symmetric_lower(&*p.landsberg()?))),
        id!("LAND-DELTA", "P(δ, ·, ·) = 0", "Landsberg tensor annihilates the canonical section", true, 2, |p| {
            ok(y_lower_slots(p, &*p.landsberg()?))
        }),
        id!("LAND-HOM", "P is 0-homogeneous", "Landsberg tensor is homogeneous of degree 0", true, 3, |p| {
            ok(homogeneity(p, &*p.landsberg()?, 0.0))
        }),
        id!("NABLA-S-G", "∇_S g = 0", "the metric is parallel along the spray", true, 2, |p| {
            ok(y_slot(p, &p.fr.hnabla(&*p.g()?), 0))
        }),
        id!("NABLA-S-CARTAN", "∇_S C♭ = P", "dynamical derivative of the Cartan tensor", true, 3, |p| {
            let (hc, pl, y) = (p.fr.hnabla(&*p.cartan()?), p.landsberg()?, &p.fr.pt.y);
            let mut r = Residual::new();
            for ix in indices(p.n(), 3) {
                let mut terms: Vec<f64> = (0..p.n()).map(|a| y[a] * v(&hc, &insert(&ix, 0, a))).collect();
                terms.push(-v(&pl, &ix));
                r.push(&terms);
            }
            ok(r)
        }),
        id!("STRETCH-H", "θ∘∇ᵛH(X,Y,Z,U) = Σ(Z,Y,X,U)", "stretch tensor from the affine curvature", true, 4, |p| {
            ok(agree(&*p.stretch()?, &*p.stretch_from_affine()?))
        }),
        id!("STRETCH-HOM", "Σ is 0-homogeneous", "stretch tensor is homogeneous of degree 0", true, 4, |p| {
            ok(homogeneity(p, &*p.stretch()?, 0.0))
        }),
        id!("PROJ-IDEMPOTENT", "p² = p and p(δ) = 0", "orthogonal projection along the canonical section", true, 0, |p| {
            let (pp, y, n) = (p.proj()?, &p.fr.pt.y, p.n());
            let mut r = Residual::new();
            for ix in indices(n, 2) {
                let mut terms: Vec<f64> = (0..n).map(|k| v(&pp, &[ix[0], k]) * v(&pp, &[k, ix[1]])).collect();
                terms.push(-v(&pp, &ix));
                r.push(&terms);
            }
            for i in 0..n {
                r.push(&(0..n).map(|j| v(&pp, &[i, j]) * y[j]).collect::<Vec<_>>());
            }
            ok(r)
        }),
        id!("PROJ-TRACE", "tr p = n − 1", "trace of the orthogonal projection", true, 0, |p| {
            let tr = p.proj()?.trace(1);
            let mut r = Residual::new();
            r.eq(v(&tr, &[]), p.n() as f64 - 1.0);
            ok(r)
        }),
        id!("PROJ-HBASIC", "h∇p = 0", "the projection is horizontally parallel", true, 2, |p| {
            let hp = p.fr.hnabla(&*p.proj()?);
            let mut r = Residual::new();
            for x in &hp.data {
                r.push(&[x.value()]);
            }
            ok(r)
        }),
        id!("PROJ-METRIC", "projected metric = η", "the projected metric tensor is the angular metric", true, 0, |p| {
            let (pp, g, eta, n) = (p.proj()?, p.g()?, p.eta()?, p.n());
            let mut r = Residual::new();
            for ix in indices(n, 2) {
                let mut terms: Vec<f64> = indices(n, 2).map(|ab| v(&pp, &[ab[0], ix[0]]) * v(&pp, &[ab[1], ix[1]]) * v(&g, &ab)).collect();
                terms.push(-v(&eta, &ix));
                r.push(&terms);
            }
            ok(r)
        }),
        id!("PROJ-B", "pB = B + (1/E) P⊗δ", "projected Berwald curvature", true, 3, |p| {
            let (pp, b, pl, e, y) = (p.proj()?, p.berwald(), p.landsberg()?, p.energy()?.value(), &p.fr.pt.y);
            let pb = project(&pp, &b);
            let mut r = Residual::new();
            for (pos, ix) in indices(p.n(), 4).enumerate() {
                r.push(&[pb[pos], -v(&b, &ix), -v(&pl, &ix[1..]) * y[ix[0]] / e]);
            }
            ok(r)
        }),
        id!("PROJ-D", "pD = pB − 1/(n+1) trB ⊙ p", "projected Douglas curvature", true, 4, |p| {
            let (pp, b, d, tb) = (p.proj()?, p.berwald(), p.douglas(), p.tr_berwald());
            let (pd, pb) = (project(&pp, &d), project(&pp, &b));
            let c = 1.0 / (p.n() as f64 + 1.0);
            let mut r = Residual::new();
            for (pos, ix) in indices(p.n(), 4).enumerate() {
                let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
                r.push(&[
                    pd[pos],
                    -pb[pos],
                    c * v(&tb, &[j, k]) * v(&pp, &[i, l]),
                    c * v(&tb, &[j, l]) * v(&pp, &[i, k]),
                    c * v(&tb, &[k, l]) * v(&pp, &[i, j]),
                ]);
            }
            ok(r)
        }),
        id!("P-BERWALD-TRACE", "tr(B + (1/E)P⊗δ) = trB", "p-Berwald implies weakly Berwald", true, 3, |p| {
            let (b, pl, e, y, tb, n) = (p.berwald(), p.landsberg()?, p.energy()?.value(), &p.fr.pt.y, p.tr_berwald(), p.n());
            let mut r = Residual::new();
            for ix in indices(n, 2) {
                let mut terms = vec![-v(&tb, &ix)];
                for (i, yi) in y.iter().enumerate() {
                    terms.push(v(&b, &[i, i, ix[0], ix[1]]));
                    terms.push(v(&pl, &[i, ix[0], ix[1]]) * yi / e);
                }
                r.push(&terms);
            }
            ok(r)
        }),
        id!("DOUGLAS-DELTA", "D vanishes on δ in every slot", "Douglas curvature annihilates the canonical section", false, 4, |p| {
            ok(y_lower_slots(p, &p.douglas()))
        }),
        id!("WEYL-DELTA", "W°(δ) = 0", "Weyl endomorphism annihilates the canonical section", false, 3, |p| {
            ok(y_slot(p, &p.weyl0(), 1))
        }),
        id!("W-ZERO-2D", "W° = 0 in dimension 2", "two-dimensional sprays have vanishing Weyl endomorphism", false, 3, |p| {
            if p.n() != 2 {
                return Ok(Outcome::Skip(format!("dimension {} ≠ 2", p.n())));
            }
            ok(weyl_terms(p))
        }),
        id!("ISO-FORM", "K = K̂ p", "isotropic Finsler manifolds: K proportional to the projection", true, 2, |p| {
            if let Some(why) = not_isotropic(p) {
                return Ok(Outcome::Skip(why));
            }
            let (k, pp) = (p.jacobi(), p.proj()?);
            let khat = p.tr_jacobi().value() / (p.n() as f64 - 1.0);
            let mut r = Residual::new();
            for ix in indices(p.n(), 2) {
                r.eq(v(&k, &ix), khat * v(&pp, &ix));
            }
            ok(r)
        }),
        id!("ISO-CURV-FORM", "R = F p∧(R ∂F + ⅓F ∂R)", "curvature of an isotropic Finsler manifold via its scalar curvature", true, 3, |p| {
            if let Some(why) = not_isotropic(p) {
                return Ok(Outcome::Skip(why));
            }
            let (rr, pp, lf, n) = (p.curvature(), p.proj()?, p.ell_flat()?, p.n());
            let (rs, f) = (p.scalar_curvature()?, p.finsler()?.value());
            let beta: Vec<f64> = (0..n).map(|k| rs.value() * v(&lf, &[k]) + f / 3.0 * rs.d1(n + k)).collect();
            let mut r = Residual::new();
            for ix in indices(n, 3) {
                let (i, j, k) = (ix[0], ix[1], ix[2]);
                r.push(&[v(&rr, &ix), -f * v(&pp, &[i, j]) * beta[k], f * v(&pp, &[i, k]) * beta[j]]);
            }
            ok(r)
        }),
    ]
}

/// The defining sum of W°, as terms.
fn weyl_terms(p: &Pack) -> Residual {
    let n = p.n();
    let (k, dk, y) = (p.jacobi(), p.fr.dy(&p.jacobi()), &p.fr.pt.y);
    let trk = p.tr_jacobi();
    let khat = trk.value() / (n as f64 - 1.0);
    let c = 1.0 / (n as f64 + 1.0);
    let mut r = Residual::new();
    for ix in indices(n, 2) {
        let (i, j) = (ix[0], ix[1]);
        let mut terms = vec![v(&k, &ix), c * trk.d1(n + j) / (n as f64 - 1.0) * y[i]];
        if i == j {
            terms.push(-khat);
        }
        terms.extend((0..n).map(|q| -c * v(&dk, &[q, q, j]) * y[i]));
        r.push(&terms);
    }
    r
}

/// Reason to skip the isotropy identities, if any.
fn not_isotropic(p: &Pack) -> Option<String> {
    if p.n() == 2 {
        return None;
    }
    let w = weyl_terms(p).value();
    (w > DEFAULT_TOL).then(|| format!("not isotropic: W° residual {w:.3e}"))
}

/// Runs the catalogue at the given points.
pub fn run_identity_suite(spec: &GeometrySpec, samples: &[TangentPoint], opts: &SuiteOptions) -> Result<ResidualReport, Error> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let engine = Engine::new(spec, opts.engine)?;
    let cat = catalogue();
    let finsler = spec.finsler_function().is_some();
    let exact = engine.exact_g_order();

    let per_point: Vec<Result<Vec<Result<Outcome, String>>, String>> = samples
        .par_iter()
        .map(|pt| {
            let fr = engine.frame(pt).map_err(|e| e.to_string())?;
            let pack = Pack::new(&fr);
            Ok(cat
                .iter()
                .map(|id| if id.finsler_only && !finsler { Ok(Outcome::Skip(String::new())) } else { (id.eval)(&pack).map_err(|e| e.to_string()) })
                .collect())
        })
        .collect();

    let mut entries = Vec::with_capacity(cat.len());
    for (k, id) in cat.iter().enumerate() {
        let fd = id.depth > exact;
        let tol = opts.overrides.get(id.id).copied().unwrap_or(if fd { opts.fd_tol.max(opts.tol) } else { opts.tol });
        let mut e = ResidualEntry::new(id.id, id.name, id.anchor, tol);
        e.fd = fd;
        if id.finsler_only && !finsler {
            e.skip("requires a Finsler function".into());
            entries.push(e);
            continue;
        }
        for (pt, res) in samples.iter().zip(&per_point) {
            match res {
                Err(msg) => e.fail(format!("at {pt}: {msg}")),
                Ok(outs) => match &outs[k] {
                    Ok(Outcome::Residual(r)) => e.record(*r, pt),
                    Ok(Outcome::Skip(why)) => {
                        e.skip(why.clone());
                        break;
                    }
                    Err(msg) => e.fail(format!("at {pt}: {msg}")),
                },
            }
        }
        entries.push(e);
    }
    Ok(ResidualReport { seed: opts.seed, samples: samples.len(), entries })
}

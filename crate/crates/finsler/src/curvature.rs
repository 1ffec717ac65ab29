//! The curvature apparatus at one point.
//!
//! Index conventions (slot lists, the upper index first):
//!
//! | tensor | storage | meaning |
//! |---|---|---|
//! | `B` | `[i][j][k][l]` | `∂³Gⁱ/∂yʲ∂yᵏ∂yˡ`, `B(X,Y)Z` |
//! | `K` | `[i][j]` | `Kⁱ_j`, `K(X)` |
//! | `R` | `[i][j][k]` | `R(X,Y) = Rⁱ_{jk}XʲYᵏ`, `Rⁱ_{jk}yᵏ = Kⁱ_j` |
//! | `H` | `[i][j][k][h]` | `H(X,Y)Z = ∂R(X,Y)/∂y·Z`, `H(X,Y)δ = R(X,Y)` |
//! | `∇ᵛT`, `h∇T` | new slot first among the lower ones | `(∇_X T)(…)` |
//! | `P`, `Σ`, `C♭` | all lower | |
//!
//! With these, `Rⁱ_{jk} = δ_jGⁱ_k − δ_kGⁱ_j`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::jet::Jet;
use crate::spraycore::Frame;
use crate::tensor::{ComponentTensor, JetTensor, Role};
use crate::Error;

pub type T = Rc<JetTensor>;

/// Lazily computed tensors at one frame.
pub struct Pack<'f> {
    pub fr: &'f Frame,
    cache: RefCell<HashMap<&'static str, T>>,
}

fn sum(n: usize, mut f: impl FnMut(usize) -> Jet) -> Jet {
    let mut acc = f(0);
    for r in 1..n {
        acc = acc + f(r);
    }
    acc
}

fn delta_ij(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl<'f> Pack<'f> {
    pub fn new(fr: &'f Frame) -> Pack<'f> {
        Pack { fr, cache: RefCell::new(HashMap::new()) }
    }

    pub fn n(&self) -> usize {
        self.fr.n
    }

    pub fn is_finsler(&self) -> bool {
        self.fr.metric.is_some()
    }

    fn memo(&self, key: &'static str, build: impl FnOnce() -> JetTensor) -> T {
        if let Some(t) = self.cache.borrow().get(key) {
            return t.clone();
        }
        let t = Rc::new(build());
        self.cache.borrow_mut().insert(key, t.clone());
        t
    }

    fn metric(&self) -> Result<&crate::spraycore::Metric, Error> {
        self.fr.metric()
    }

    fn one(&self) -> Jet {
        self.fr.ys[0].zero_like().add_const(1.0)
    }

    // ---- spray level -------------------------------------------------

    pub fn spray(&self) -> T {
        self.memo("G", || self.fr.spray.clone())
    }
    pub fn conn(&self) -> T {
        self.memo("N", || self.fr.conn().clone())
    }
    pub fn gamma(&self) -> T {
        self.memo("Gamma", || self.fr.gamma().clone())
    }

    pub fn berwald(&self) -> T {
        self.memo("B", || self.fr.dy(&self.gamma()))
    }

    pub fn tr_berwald(&self) -> T {
        self.memo("trB", || self.berwald().trace(1))
    }

    /// Berwald's coordinate formula for the Jacobi endomorphism.
    pub fn jacobi(&self) -> T {
        self.memo("K", || {
            let (n, g, nc, gm) = (self.n(), self.spray(), self.conn(), self.gamma());
            let dxn = self.fr.dx(&nc); // [i][r][j] = ∂x_r Gⁱ_j
            JetTensor::from_fn(n, 2, 1, |ix| {
                let (i, j) = (ix[0], ix[1]);
                let mut acc = g.data[i].deriv(j).scale(2.0);
                for r in 0..n {
                    acc = acc - &self.fr.ys[r] * dxn.at(&[i, r, j]);
                    acc = acc + (gm.at(&[i, j, r]) * &g.data[r]).scale(2.0);
                    acc = acc - nc.at(&[i, r]) * nc.at(&[r, j]);
                }
                acc
            })
        })
    }

    /// `Rⁱ_{jk} = δ_jGⁱ_k − δ_kGⁱ_j`.
    pub fn curvature(&self) -> T {
        self.memo("R", || {
            let d = self.fr.delta(&self.conn()); // [i][a][k]
            JetTensor::from_fn(self.n(), 3, 1, |ix| d.at(&[ix[0], ix[1], ix[2]]) - d.at(&[ix[0], ix[2], ix[1]]))
        })
    }

    /// Second route: `Rⁱ_{jk} = ⅓(∂Kⁱ_j/∂yᵏ − ∂Kⁱ_k/∂yʲ)`.
    pub fn curvature_from_jacobi(&self) -> T {
        self.memo("R_K", || {
            let dk = self.fr.dy(&self.jacobi()); // [i][a][j]
            JetTensor::from_fn(self.n(), 3, 1, |ix| (dk.at(&[ix[0], ix[2], ix[1]]) - dk.at(&[ix[0], ix[1], ix[2]])).scale(1.0 / 3.0))
        })
    }

    /// `Kⁱ_j = Rⁱ_{jk}yᵏ`.
    pub fn jacobi_from_curvature(&self) -> T {
        self.memo("K_R", || {
            let r = self.curvature();
            JetTensor::from_fn(self.n(), 2, 1, |ix| sum(self.n(), |k| r.at(&[ix[0], ix[1], k]) * &self.fr.ys[k]))
        })
    }

    pub fn affine(&self) -> T {
        self.memo("H", || {
            let dr = self.fr.dy(&self.curvature()); // [i][h][j][k]
            JetTensor::from_fn(self.n(), 4, 1, |ix| dr.at(&[ix[0], ix[3], ix[1], ix[2]]).clone())
        })
    }

    /// `Hⁱ_{jkh} = δ_jΓⁱ_{kh} − δ_kΓⁱ_{jh} + Γⁱ_{jr}Γʳ_{kh} − Γⁱ_{kr}Γʳ_{jh}`.
    pub fn affine_coordinate(&self) -> T {
        self.memo("H_coord", || {
            let gm = self.gamma();
            let dg = self.fr.delta(&gm); // [i][a][k][h]
            let n = self.n();
            JetTensor::from_fn(n, 4, 1, |ix| {
                let (i, j, k, h) = (ix[0], ix[1], ix[2], ix[3]);
                let mut acc = dg.at(&[i, j, k, h]) - dg.at(&[i, k, j, h]);
                for r in 0..n {
                    acc = acc + gm.at(&[i, j, r]) * gm.at(&[r, k, h]) - gm.at(&[i, k, r]) * gm.at(&[r, j, h]);
                }
                acc
            })
        })
    }

    pub fn v_affine(&self) -> T {
        self.memo("dH", || self.fr.dy(&self.affine()))
    }
    pub fn h_berwald(&self) -> T {
        self.memo("hB", || self.fr.hnabla(&self.berwald()))
    }
    pub fn h_curvature(&self) -> T {
        self.memo("hR", || self.fr.hnabla(&self.curvature()))
    }

    pub fn tr_jacobi(&self) -> Jet {
        self.memo("trK", || {
            let k = self.jacobi();
            self.fr.scalar(&sum(self.n(), |i| k.at(&[i, i]).clone()))
        })
        .data[0]
            .clone()
    }

    pub fn tr_curvature(&self) -> T {
        self.memo("trR", || self.curvature().trace(1))
    }

    pub fn douglas(&self) -> T {
        self.memo("D", || {
            let (n, b, tb) = (self.n(), self.berwald(), self.tr_berwald());
            let dtb = self.fr.dy(&tb); // [a][k][l]
            let c = 1.0 / (n as f64 + 1.0);
            JetTensor::from_fn(n, 4, 1, |ix| {
                let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
                let mut sym = dtb.at(&[j, k, l]) * &self.fr.ys[i];
                for (a, b2, d) in [(j, k, l), (j, l, k), (k, l, j)] {
                    if i == d {
                        sym = sym + tb.at(&[a, b2]);
                    }
                }
                b.at(ix) - &sym.scale(c)
            })
        })
    }

    pub fn weyl0(&self) -> T {
        self.memo("W0", || {
            let n = self.n();
            let k = self.jacobi();
            let khat = self.tr_jacobi().scale(1.0 / (n as f64 - 1.0));
            let dk = self.fr.dy(&k); // [i][a][j]
            let c = 1.0 / (n as f64 + 1.0);
            JetTensor::from_fn(n, 2, 1, |ix| {
                let (i, j) = (ix[0], ix[1]);
                let tr = sum(n, |r| dk.at(&[r, r, j]).clone());
                let v = (khat.deriv(n + j) - tr) * &self.fr.ys[i];
                let mut acc = k.at(ix) + &v.scale(c);
                if i == j {
                    acc = acc - &khat;
                }
                acc
            })
        })
    }

    pub fn weyl_w(&self) -> T {
        self.memo("W", || {
            let dw = self.fr.dy(&self.weyl0());
            JetTensor::from_fn(self.n(), 3, 1, |ix| (dw.at(&[ix[0], ix[2], ix[1]]) - dw.at(&[ix[0], ix[1], ix[2]])).scale(1.0 / 3.0))
        })
    }

    /// `W*` stored like H: `[i][j][k][h] = ∂Wⁱ_{jk}/∂yʰ`.
    pub fn weyl_star(&self) -> T {
        self.memo("W*", || {
            let dw = self.fr.dy(&self.weyl_w());
            JetTensor::from_fn(self.n(), 4, 1, |ix| dw.at(&[ix[0], ix[3], ix[1], ix[2]]).clone())
        })
    }

    // ---- Finsler level -----------------------------------------------

    pub fn energy(&self) -> Result<Jet, Error> {
        Ok(self.metric()?.e.clone())
    }
    pub fn finsler(&self) -> Result<Jet, Error> {
        Ok(self.metric()?.f.clone())
    }
    pub fn g(&self) -> Result<T, Error> {
        let m = self.metric()?;
        Ok(self.memo("g", || m.g.clone()))
    }
    pub fn ginv(&self) -> Result<T, Error> {
        let m = self.metric()?;
        Ok(self.memo("ginv", || m.ginv.clone()))
    }

    /// Hilbert form `θ = ∂E/∂y` (= `yᵢ`).
    pub fn theta(&self) -> Result<T, Error> {
        let e = self.energy()?;
        Ok(self.memo("theta", || self.fr.dy(&self.fr.scalar(&e))))
    }

    /// `ℓ♭ = ∂F/∂y`.
    pub fn ell_flat(&self) -> Result<T, Error> {
        let f = self.finsler()?;
        Ok(self.memo("ell_flat", || self.fr.dy(&self.fr.scalar(&f))))
    }

    /// `ℓ = y/F`.
    pub fn ell(&self) -> Result<T, Error> {
        let fi = self.finsler()?.recip();
        Ok(self.memo("ell", || JetTensor::from_fn(self.n(), 1, 1, |ix| &self.fr.ys[ix[0]] * &fi)))
    }

    pub fn eta(&self) -> Result<T, Error> {
        let (g, lf) = (self.g()?, self.ell_flat()?);
        Ok(self.memo("eta", || JetTensor::from_fn(self.n(), 2, 0, |ix| g.at(ix) - lf.data[ix[0]].clone() * &lf.data[ix[1]])))
    }

    /// `p = 1 − (1/F) ∂F ⊗ δ`: `pⁱ_j = δⁱ_j − yⁱ ∂_jF / F`.
    pub fn proj(&self) -> Result<T, Error> {
        let (lf, ell) = (self.ell_flat()?, self.ell()?);
        Ok(self.memo("p", || {
            JetTensor::from_fn(self.n(), 2, 1, |ix| (-(&ell.data[ix[0]] * &lf.data[ix[1]])).add_const(delta_ij(ix[0], ix[1])))
        }))
    }

    /// `C♭(X,Y,Z) = ½ (∂_X g)(Y,Z)`.
    pub fn cartan(&self) -> Result<T, Error> {
        let g = self.g()?;
        Ok(self.memo("C", || self.fr.dy(&g).map(|j| j.scale(0.5))))
    }

    /// `(tr C)_j = g^{kl} C_{klj}`.
    pub fn cartan_trace(&self) -> Result<T, Error> {
        let (c, gi) = (self.cartan()?, self.ginv()?);
        let n = self.n();
        Ok(self.memo("trC", || {
            JetTensor::from_fn(n, 1, 0, |ix| {
                let mut acc = gi.at(&[0, 0]) * c.at(&[0, 0, ix[0]]);
                for k in 0..n {
                    for l in 0..n {
                        if k + l > 0 {
                            acc = acc + gi.at(&[k, l]) * c.at(&[k, l, ix[0]]);
                        }
                    }
                }
                acc
            })
        }))
    }

    /// `C*ⁱ = gⁱʲ (tr C)_j`.
    pub fn cartan_vector(&self) -> Result<T, Error> {
        let (tc, gi) = (self.cartan_trace()?, self.ginv()?);
        Ok(self.memo("C*", || JetTensor::from_fn(self.n(), 1, 1, |ix| sum(self.n(), |j| gi.at(&[ix[0], j]) * &tc.data[j]))))
    }

    /// Landsberg tensor `P = −½ h∇g`.
    pub fn landsberg(&self) -> Result<T, Error> {
        let g = self.g()?;
        Ok(self.memo("P", || self.fr.hnabla(&g).map(|j| j.scale(-0.5))))
    }

    /// Second route: `P_{jkl} = −½ yᵢ Bⁱ_{jkl}`.
    pub fn landsberg_from_berwald(&self) -> Result<T, Error> {
        let th = self.theta()?;
        let b = self.berwald();
        Ok(self.memo("P_B", || {
            JetTensor::from_fn(self.n(), 3, 0, |ix| sum(self.n(), |i| &th.data[i] * b.at(&[i, ix[0], ix[1], ix[2]])).scale(-0.5))
        }))
    }

    pub fn h_landsberg(&self) -> Result<T, Error> {
        let p = self.landsberg()?;
        Ok(self.memo("hP", || self.fr.hnabla(&p)))
    }

    /// `Σ(X,Y,Z,U) = 2(h∇P(X,Y,Z,U) − h∇P(Y,X,Z,U))`.
    pub fn stretch(&self) -> Result<T, Error> {
        let hp = self.h_landsberg()?;
        Ok(self.memo("Sigma", || {
            JetTensor::from_fn(self.n(), 4, 0, |ix| (hp.at(ix) - hp.at(&[ix[1], ix[0], ix[2], ix[3]])).scale(2.0))
        }))
    }

    /// Second route: `Σ(Z,Y,X,U) = yᵢ (∇ᵛH)ⁱ(X,Y,Z,U)`.
    pub fn stretch_from_affine(&self) -> Result<T, Error> {
        let th = self.theta()?;
        let dh = self.v_affine();
        Ok(self.memo("Sigma_H", || {
            JetTensor::from_fn(self.n(), 4, 0, |ix| {
                let (z, y, x, u) = (ix[0], ix[1], ix[2], ix[3]);
                sum(self.n(), |i| &th.data[i] * dh.at(&[i, x, y, z, u]))
            })
        }))
    }

    /// Scalar curvature `trK / ((n−1)F²)` as a jet.
    pub fn scalar_curvature(&self) -> Result<Jet, Error> {
        let e = self.energy()?;
        let n = self.n() as f64;
        Ok(self.tr_jacobi() * e.scale(2.0 * (n - 1.0)).recip())
    }

    pub fn unit(&self) -> Jet {
        self.one()
    }

    /// Component snapshot of the whole apparatus.
    pub fn snapshot(&self) -> Result<CurvaturePack, Error> {
        let fin = self.is_finsler();
        let opt = |r: Result<T, Error>, name: &str| -> Result<Option<ComponentTensor>, Error> {
            if fin {
                Ok(Some(r?.values(name)))
            } else {
                Ok(None)
            }
        };
        let mut tr_k = ComponentTensor::new("trK", self.n(), vec![], vec![self.tr_jacobi().value()]);
        tr_k.roles = vec![];
        Ok(CurvaturePack {
            berwald: self.berwald().values("B"),
            jacobi: self.jacobi().values("K"),
            curvature: self.curvature().values("R"),
            affine: self.affine().values("H"),
            douglas: self.douglas().values("D"),
            weyl0: self.weyl0().values("W0"),
            weyl_w: self.weyl_w().values("W"),
            weyl_star: self.weyl_star().values("W*"),
            tr_berwald: self.tr_berwald().values("trB"),
            tr_jacobi: tr_k,
            tr_curvature: self.tr_curvature().values("trR"),
            landsberg: opt(self.landsberg(), "P")?,
            stretch: opt(self.stretch(), "Sigma")?,
            cartan: opt(self.cartan(), "C")?,
            cartan_vector: opt(self.cartan_vector(), "C*")?,
            eta: opt(self.eta(), "eta")?,
            theta: opt(self.theta(), "theta")?,
            ell: opt(self.ell(), "ell")?,
            proj: opt(self.proj(), "p")?,
        })
    }
}

/// Component values of every tensor at one point.
#[derive(Clone, Debug)]
pub struct CurvaturePack {
    pub berwald: ComponentTensor,
    pub jacobi: ComponentTensor,
    pub curvature: ComponentTensor,
    pub affine: ComponentTensor,
    pub douglas: ComponentTensor,
    pub weyl0: ComponentTensor,
    pub weyl_w: ComponentTensor,
    pub weyl_star: ComponentTensor,
    pub tr_berwald: ComponentTensor,
    pub tr_jacobi: ComponentTensor,
    pub tr_curvature: ComponentTensor,
    pub landsberg: Option<ComponentTensor>,
    pub stretch: Option<ComponentTensor>,
    pub cartan: Option<ComponentTensor>,
    pub cartan_vector: Option<ComponentTensor>,
    pub eta: Option<ComponentTensor>,
    pub theta: Option<ComponentTensor>,
    pub ell: Option<ComponentTensor>,
    pub proj: Option<ComponentTensor>,
}

/// `max|a − b| / max(max|a|, max|b|)`, or the absolute gap when both vanish.
pub fn relative_gap(a: &JetTensor, b: &JetTensor) -> f64 {
    let (mut gap, mut scale) = (0.0f64, 0.0f64);
    for (x, y) in a.data.iter().zip(&b.data) {
        gap = gap.max((x.value() - y.value()).abs());
        scale = scale.max(x.value().abs()).max(y.value().abs());
    }
    if scale > 1e-12 {
        gap / scale
    } else {
        gap
    }
}

/// Dual-route agreement; a gap above `limit` is an internal inconsistency.
fn dual(name: &str, a: &JetTensor, b: &JetTensor, limit: f64) -> Result<(), Error> {
    let gap = relative_gap(a, b);
    if gap > limit || gap.is_nan() {
        return Err(Error::Consistency(format!("{name}: the two routes differ by {gap:e} (relative)")));
    }
    Ok(())
}

pub const DUAL_LIMIT: f64 = 1e-6;

/// R by the δ-commutator, checked against the ∂K route.
pub fn curvature_r(pack: &Pack) -> Result<ComponentTensor, Error> {
    dual("R", &pack.curvature(), &pack.curvature_from_jacobi(), DUAL_LIMIT)?;
    Ok(pack.curvature().values("R"))
}

/// K by Berwald's formula, checked against `R·y`.
pub fn jacobi_endomorphism(pack: &Pack) -> Result<ComponentTensor, Error> {
    dual("K", &pack.jacobi(), &pack.jacobi_from_curvature(), DUAL_LIMIT)?;
    Ok(pack.jacobi().values("K"))
}

/// P as `−½h∇g`, checked against `−½ y·B`.
pub fn landsberg(pack: &Pack) -> Result<ComponentTensor, Error> {
    dual("P", &*pack.landsberg()?, &*pack.landsberg_from_berwald()?, DUAL_LIMIT)?;
    Ok(pack.landsberg()?.values("P"))
}

/// Σ by definition, checked against the `∇ᵛH` route.
pub fn stretch(pack: &Pack) -> Result<ComponentTensor, Error> {
    dual("Sigma", &*pack.stretch()?, &*pack.stretch_from_affine()?, DUAL_LIMIT)?;
    Ok(pack.stretch()?.values("Sigma"))
}

impl ComponentTensor {
    pub fn is_up_first(&self) -> bool {
        self.roles.first() == Some(&Role::Up)
    }
}

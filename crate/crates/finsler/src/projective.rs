//! Projective changes `Ḡⁱ = Gⁱ + P yⁱ` and projective metrizability.

use exprlang::{differentiate, evaluate, Expr, Var};

use crate::curvature::Pack;
use crate::identities::SuiteOptions;
use crate::jet::Jet;
use crate::manifold::{GeometrySpec, TangentPoint};
use crate::report::{Residual, ResidualEntry, ResidualReport};
use crate::spraycore::{Engine, Frame, ScalarField};
use crate::tensor::{indices, JetTensor};
use crate::Error;

fn v(t: &JetTensor, ix: &[usize]) -> f64 {
    t.at(ix).value()
}

fn agree(a: &JetTensor, b: &JetTensor) -> f64 {
    let mut r = Residual::new();
    for (x, y) in a.data.iter().zip(&b.data) {
        r.eq(x.value(), y.value());
    }
    r.value()
}

/// `max |y·∂P/∂y − P| / (1 + |P|)` over the samples, with the worst point.
pub fn factor_homogeneity(factor: &Expr, n: usize, samples: &[TangentPoint]) -> Result<(f64, Option<TangentPoint>), Error> {
    let grads: Vec<Expr> = (0..n).map(|i| differentiate(factor, Var::y(i))).collect();
    let mut worst = (0.0f64, None);
    for pt in samples {
        let eval = |e: &Expr| evaluate(e, &pt.x, &pt.y).map_err(|source| Error::Eval { point: pt.clone(), source });
        let p = eval(factor)?;
        let mut terms = vec![-p];
        for (i, g) in grads.iter().enumerate() {
            terms.push(pt.y[i] * eval(g)?);
        }
        let mut r = Residual::new();
        r.push(&terms);
        if r.value() > worst.0 || worst.1.is_none() {
            worst = (r.value(), Some(pt.clone()));
        }
    }
    Ok(worst)
}

/// The spray `Ḡⁱ = Gⁱ + P yⁱ`; refuses factors that are not 1-homogeneous.
pub fn apply_projective_change(spec: &GeometrySpec, factor: &Expr, factor_text: &str, samples: &[TangentPoint], tol: f64) -> Result<GeometrySpec, Error> {
    if factor.max_index() > spec.n {
        return Err(Error::InvalidField { field: "factor".into(), msg: format!("mentions a variable beyond dimension {}", spec.n) });
    }
    let (worst, at) = factor_homogeneity(factor, spec.n, samples)?;
    if worst.is_nan() || worst > tol {
        let at = at.map(|p| p.to_string()).unwrap_or_default();
        return Err(Error::InvalidField { field: "factor".into(), msg: format!("not positively 1-homogeneous in y (residual {worst:.3e} at {at})") });
    }
    Ok(spec.projective_change(factor.clone(), factor_text))
}

struct Pair<'a> {
    base: Pack<'a>,
    bar: Pack<'a>,
    p: Jet,
}

type Law = fn(&Pair) -> f64;

/// `(id, description, spray-partial depth, law)`.
const LAWS: &[(&str, &str, usize, Law)] = &[
    ("CHANGE-CONN", "connection changes by dP (x) y + P 1", 1, |q| {
        let (nb, nn, n) = (q.bar.conn(), q.base.conn(), q.base.n());
        let y = &q.base.fr.pt.y;
        let mut r = Residual::new();
        for ix in indices(n, 2) {
            let (i, j) = (ix[0], ix[1]);
            let id = if i == j { q.p.value() } else { 0.0 };
            r.push(&[v(&nb, &ix), -v(&nn, &ix), -q.p.d1(n + j) * y[i], -id]);
        }
        r.value()
    }),
    ("CORR-B", "Berwald curvature changes by d²P sym 1 + d³P (x) y", 3, |q| {
        let (bb, b, n) = (q.bar.berwald(), q.base.berwald(), q.base.n());
        let y = &q.base.fr.pt.y;
        let p2 = q.base.fr.dy(&q.base.fr.dy(&q.base.fr.scalar(&q.p)));
        let p3 = q.base.fr.dy(&p2);
        let mut r = Residual::new();
        for ix in indices(n, 4) {
            let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
            let mut terms = vec![v(&bb, &ix), -v(&b, &ix), -v(&p3, &[j, k, l]) * y[i]];
            for (a, c, d) in [(j, k, l), (j, l, k), (k, l, j)] {
                if i == d {
                    terms.push(-v(&p2, &[a, c]));
                }
            }
            r.push(&terms);
        }
        r.value()
    }),
    ("CORR-TRB", "trace of the Berwald curvature changes by (n+1) d²P", 3, |q| {
        let (tb, t, n) = (q.bar.tr_berwald(), q.base.tr_berwald(), q.base.n());
        let p2 = q.base.fr.dy(&q.base.fr.dy(&q.base.fr.scalar(&q.p)));
        let mut r = Residual::new();
        for ix in indices(n, 2) {
            r.push(&[v(&tb, &ix), -v(&t, &ix), -(n as f64 + 1.0) * v(&p2, &ix)]);
        }
        r.value()
    }),
    ("DOUGLAS-INVARIANT", "Douglas curvature is projectively invariant", 4, |q| agree(&q.bar.douglas(), &q.base.douglas())),
    ("WEYL0-INVARIANT", "Weyl endomorphism is projectively invariant", 3, |q| agree(&q.bar.weyl0(), &q.base.weyl0())),
    ("WEYL-W-INVARIANT", "W is projectively invariant", 4, |q| agree(&q.bar.weyl_w(), &q.base.weyl_w())),
    ("WEYL-STAR-INVARIANT", "W* is projectively invariant", 5, |q| agree(&q.bar.weyl_star(), &q.base.weyl_star())),
];

/// Transformation laws and invariants under `Ḡ = G + Py`.
pub fn projective_invariance_report(spec: &GeometrySpec, factor: &Expr, factor_text: &str, samples: &[TangentPoint], opts: &SuiteOptions) -> Result<ResidualReport, Error> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let (hom, hom_at) = factor_homogeneity(factor, spec.n, samples)?;
    let changed = apply_projective_change(spec, factor, factor_text, samples, f64::INFINITY)?;
    let base = Engine::new(spec, opts.engine)?;
    let bar = Engine::new(&changed, opts.engine)?;
    let pf = ScalarField::new(factor, spec.n, opts.engine.g_order, opts.engine.node_cap)?;
    let exact = base.exact_g_order();

    let mut entries = vec![ResidualEntry::measured("FACTOR-HOM", "projective factor is positively 1-homogeneous", "projective factors are 1-homogeneous", hom, opts.tol, hom_at)];
    let mut laws: Vec<ResidualEntry> = LAWS
        .iter()
        .map(|(id, name, depth, _)| {
            let fd = *depth > exact;
            let mut e = ResidualEntry::new(id, name, name, if fd { opts.fd_tol.max(opts.tol) } else { opts.tol });
            e.fd = fd;
            e
        })
        .collect();
    let mut berwald = ResidualEntry::new("BERWALD-INVARIANT", "Berwald curvature unchanged when d²P = 0", "factors linear in y leave B unchanged", opts.tol);
    let mut linear = true;

    for pt in samples {
        let (f0, f1) = (base.frame(pt)?, bar.frame(pt)?);
        let q = Pair { p: pf.jet(&f0)?, base: Pack::new(&f0), bar: Pack::new(&f1) };
        for (e, (_, _, _, law)) in laws.iter_mut().zip(LAWS) {
            e.record(law(&q), pt);
        }
        let p2 = f0.dy(&f0.dy(&f0.scalar(&q.p)));
        linear &= p2.data.iter().all(|j| j.value().abs() <= 1e-12);
        berwald.record(agree(&q.bar.berwald(), &q.base.berwald()), pt);
    }
    entries.extend(laws);
    if !linear {
        berwald.skip("the factor is not linear in y (d²P ≠ 0)".into());
    }
    entries.push(berwald);
    Ok(ResidualReport { seed: opts.seed, samples: samples.len(), entries })
}

// ---- Rapcsák ---------------------------------------------------------------

/// `F̄` and its derived jets on the frame of the given spray.
struct Target<'a> {
    fr: &'a Frame,
    f: Jet,
    /// `∂F̄/∂y`
    lf: JetTensor,
    /// `μ̄ = ∂²F̄/∂y∂y`
    mu: JetTensor,
}

impl<'a> Target<'a> {
    fn new(fr: &'a Frame, f: Jet) -> Target<'a> {
        let lf = fr.dy(&fr.scalar(&f));
        let mu = fr.dy(&lf);
        Target { fr, f, lf, mu }
    }

    fn s_f(&self) -> Jet {
        self.fr.spray_derivative(&self.f)
    }

    /// `∇_S T`: contract the new first lower slot of `h∇T` with y.
    fn along_s(&self, t: &JetTensor) -> Vec<f64> {
        let h = self.fr.hnabla(t);
        let n = self.fr.n;
        indices(n, t.rank)
            .map(|ix| {
                (0..n)
                    .map(|a| {
                        let mut j = ix[..t.up].to_vec();
                        j.push(a);
                        j.extend_from_slice(&ix[t.up..]);
                        self.fr.pt.y[a] * v(&h, &j)
                    })
                    .sum()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RapcsakReport {
    pub entries: Vec<ResidualEntry>,
    /// `P = SF̄/(2F̄)` per sample.
    pub factor: Vec<(TangentPoint, f64)>,
    /// R1 passed at every sample.
    pub projectively_related: bool,
    /// The spray is the canonical spray of F̄ (δF̄ = 0).
    pub variational: bool,
}

const R_IDS: &[(&str, &str, &str)] = &[
    ("R1", "2 h F̄ = v(S F̄)", "Rapcsák equation in first-order form"),
    ("R6", "h∇∇ᵛF̄ symmetric", "Rapcsák equation in symmetric-Hessian form"),
    ("VARIATIONAL", "δ_i F̄ = 0 with the given spray", "criterion for Finsler variationality (raw max |δF̄|)"),
    ("FACTOR-ORACLE", "SF̄/(2F̄) equals the proportionality between the sprays", "projective factor against the canonical spray of F̄"),
    ("FACTOR-HOM", "SF̄/(2F̄) is 1-homogeneous", "homogeneity of the recovered projective factor"),
    ("RAP-ALPHA", "∇_S μ̄ = 0", "necessary condition: dynamical derivative of the vertical Hessian"),
    ("RAP-BETA", "∇_S ∇ᵛμ̄ + h∇μ̄ = 0", "necessary condition: its vertical consequence"),
    ("SELF-ADJOINT", "μ̄(K X, Y) = μ̄(X, K Y)", "necessary condition: self-adjointness of the Jacobi endomorphism"),
    ("PE-CYCLIC", "cyclic sum of μ̄(R(X,Y), Z) vanishes", "necessary condition: curvature condition"),
    ("RAP-DELTA", "h∇μ̄ = Sym(∇_S λ̄ ⊗ μ̄) + (2/F̄)(P C̄ − P̄)", "horizontal derivative of μ̄ (with ∇_S λ̄ in the symmetric term)"),
    ("N-LAW", "∇_S C̄ = P C̄ + P̄", "dynamical derivative of the Cartan tensor of F̄ along the given spray"),
];

/// Metrizability residuals of `F̄` with respect to the spray of `spray_spec`.
pub fn rapcsak(spray_spec: &GeometrySpec, finsler_spec: &GeometrySpec, samples: &[TangentPoint], opts: &SuiteOptions) -> Result<RapcsakReport, Error> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if spray_spec.n != finsler_spec.n {
        return Err(Error::Unsupported(format!("dimensions differ ({} vs {})", spray_spec.n, finsler_spec.n)));
    }
    let fbar = finsler_spec.finsler_function().ok_or(Error::NotFinsler("the Rapcsák target"))?;
    let n = spray_spec.n;
    let engine = Engine::new(spray_spec, opts.engine)?;
    let own = Engine::new(finsler_spec, opts.engine)?;
    let field = ScalarField::new(fbar, n, opts.engine.g_order, opts.engine.node_cap)?;

    let mut entries: Vec<ResidualEntry> = R_IDS.iter().map(|(id, name, anchor)| ResidualEntry::new(id, name, anchor, opts.tol)).collect();
    let tol_of = |id: &str| opts.overrides.get(id).copied();
    for e in entries.iter_mut() {
        if let Some(t) = tol_of(&e.id) {
            e.tolerance = t;
        }
    }
    let idx = |id: &str| R_IDS.iter().position(|r| r.0 == id).expect("known id");
    let mut factor = Vec::with_capacity(samples.len());

    for pt in samples {
        let fr = engine.frame(pt)?;
        let t = Target::new(&fr, field.jet(&fr)?);
        let pk = Pack::new(&fr);
        let (nc, y) = (fr.conn(), &pt.y);
        let sf = t.s_f();
        let dsf = fr.dy(&fr.scalar(&sf));
        let fv = t.f.value();
        let mut rec = |id: &str, r: f64| entries[idx(id)].record(r, pt);

        // δ_i F̄ as terms
        let delta_terms = |i: usize| -> Vec<f64> {
            let mut terms = vec![t.f.d1(i)];
            terms.extend((0..n).map(|r| -v(nc, &[r, i]) * v(&t.lf, &[r])));
            terms
        };
        let mut r1 = Residual::new();
        let mut raw = 0.0f64;
        for i in 0..n {
            let d = delta_terms(i);
            raw = raw.max(d.iter().sum::<f64>().abs());
            let mut terms: Vec<f64> = d.iter().map(|x| 2.0 * x).collect();
            terms.push(-v(&dsf, &[i]));
            r1.push(&terms);
        }
        rec("R1", r1.value());
        rec("VARIATIONAL", raw);

        let hv = fr.hnabla(&t.lf);
        let mut r6 = Residual::new();
        for ix in indices(n, 2) {
            r6.eq(v(&hv, &ix), v(&hv, &[ix[1], ix[0]]));
        }
        rec("R6", r6.value());

        // projective factor: estimate vs. the canonical spray of F̄
        let p = sf.scale(0.5) * t.f.recip();
        factor.push((pt.clone(), p.value()));
        let gbar = own.spray_values(pt)?;
        let gnow: Vec<f64> = fr.spray.data.iter().map(Jet::value).collect();
        let mut ro = Residual::new();
        for i in 0..n {
            ro.push(&[gbar[i], -gnow[i], -p.value() * y[i]]);
        }
        rec("FACTOR-ORACLE", ro.value());
        let mut rh = Residual::new();
        let mut terms: Vec<f64> = (0..n).map(|a| y[a] * p.d1(n + a)).collect();
        terms.push(-p.value());
        rh.push(&terms);
        rec("FACTOR-HOM", rh.value());

        // necessary conditions
        let hmu = fr.hnabla(&t.mu);
        let mut ra = Residual::new();
        for ix in indices(n, 2) {
            ra.push(&(0..n).map(|a| y[a] * v(&hmu, &[a, ix[0], ix[1]])).collect::<Vec<_>>());
        }
        rec("RAP-ALPHA", ra.value());

        let s_dmu = t.along_s(&fr.dy(&t.mu));
        let mut rb = Residual::new();
        for (pos, ix) in indices(n, 3).enumerate() {
            rb.push(&[s_dmu[pos], v(&hmu, &ix)]);
        }
        rec("RAP-BETA", rb.value());

        let (k, rr) = (pk.jacobi(), pk.curvature());
        let mut ry = Residual::new();
        for ix in indices(n, 2) {
            let (a, b) = (ix[0], ix[1]);
            let mut terms: Vec<f64> = (0..n).map(|r| v(&t.mu, &[r, b]) * v(&k, &[r, a])).collect();
            terms.extend((0..n).map(|r| -v(&t.mu, &[a, r]) * v(&k, &[r, b])));
            ry.push(&terms);
        }
        rec("SELF-ADJOINT", ry.value());

        let mut rp = Residual::new();
        for ix in indices(n, 3) {
            let (x, yy, z) = (ix[0], ix[1], ix[2]);
            let mut terms = Vec::with_capacity(3 * n);
            for r in 0..n {
                terms.push(v(&t.mu, &[r, z]) * v(&rr, &[r, x, yy]));
                terms.push(v(&t.mu, &[r, x]) * v(&rr, &[r, yy, z]));
                terms.push(v(&t.mu, &[r, yy]) * v(&rr, &[r, z, x]));
            }
            rp.push(&terms);
        }
        rec("PE-CYCLIC", rp.value());

        // Cartan tensor of F̄ as jets on this frame; Landsberg tensor of F̄ from its own spray
        let ebar = (&t.f * &t.f).scale(0.5);
        let gb = fr.dy(&fr.dy(&fr.scalar(&ebar)));
        let cbar = fr.dy(&gb).map(|j| j.scale(0.5));
        let own_fr = own.frame_with_order(pt, 2)?;
        let pbar = Pack::new(&own_fr).landsberg()?;
        let s_c = t.along_s(&cbar);
        let mut rn = Residual::new();
        for (pos, ix) in indices(n, 3).enumerate() {
            rn.push(&[s_c[pos], -p.value() * v(&cbar, &ix), -v(&pbar, &ix)]);
        }
        rec("N-LAW", rn.value());

        let lam = JetTensor::from_fn(n, 1, 0, |ix| t.lf.at(ix) * &t.f.recip());
        let s_lam = t.along_s(&lam);
        let mut rd = Residual::new();
        for ix in indices(n, 3) {
            let (x, yy, z) = (ix[0], ix[1], ix[2]);
            rd.push(&[
                v(&hmu, &ix),
                -s_lam[x] * v(&t.mu, &[yy, z]),
                -s_lam[yy] * v(&t.mu, &[z, x]),
                -s_lam[z] * v(&t.mu, &[x, yy]),
                -2.0 / fv * p.value() * v(&cbar, &ix),
                2.0 / fv * v(&pbar, &ix),
            ]);
        }
        rec("RAP-DELTA", rd.value());
    }

    let projectively_related = entries[idx("R1")].pass;
    let variational = entries[idx("VARIATIONAL")].pass;
    if !projectively_related {
        for id in ["FACTOR-ORACLE", "FACTOR-HOM", "RAP-ALPHA", "RAP-BETA", "SELF-ADJOINT", "PE-CYCLIC", "RAP-DELTA", "N-LAW"] {
            entries[idx(id)].skip("R1 fails: F̄ is not projectively related to the spray".into());
        }
    }
    Ok(RapcsakReport { entries, factor, projectively_related, variational })
}

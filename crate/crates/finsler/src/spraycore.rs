//! Metric, canonical spray and nonlinear connection at a point.
//!
//! An [`Engine`] holds the symbolic partial tables of a spec and is shared
//! read-only. A [`Frame`] is the per-point state: jets of E, F, g, g⁻¹ and
//! Gⁱ, plus the connection operators ∂/∂y, δ/δx and the Berwald h-derivative
//! acting on jet tensors.

use std::cell::OnceCell;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use exprlang::{differentiate, evaluate, Expr, PartialTable, TableError, Var, DEFAULT_NODE_CAP};
use nalgebra::DMatrix;

use crate::jet::{Jet, JetSpace};
use crate::manifold::{GeometrySpec, Kind, Source, TangentPoint};
use crate::tensor::{ComponentTensor, JetTensor, Role};
use crate::Error;

/// Highest E order served symbolically when the FD fallback is active.
pub const FD_SYMBOLIC_ORDER: usize = 5;

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    /// Highest order of Gⁱ partials a frame must provide.
    pub g_order: usize,
    /// Serve E partials above order 5 by central differences.
    pub fd_fallback: bool,
    pub node_cap: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { g_order: 5, fd_fallback: false, node_cap: DEFAULT_NODE_CAP }
    }
}

enum Inner {
    Finsler { f: Expr, table: PartialTable },
    Spray { table: PartialTable },
    Projective { base: Box<Engine>, factor: PartialTable },
}

/// Prepared symbolic data of one spec.
pub struct Engine {
    n: usize,
    kind: Kind,
    opts: EngineOptions,
    inner: Inner,
    spaces: Vec<OnceLock<Arc<JetSpace>>>,
}

fn chart_vars(n: usize) -> Vec<Var> {
    (0..n).map(Var::x).chain((0..n).map(Var::y)).collect()
}

fn energy_expr(f: &Expr) -> Expr {
    Expr::num(0.5) * Expr::bin(exprlang::BinOp::Pow, f.clone(), Expr::num(2.0))
}

impl Engine {
    pub fn new(spec: &GeometrySpec, opts: EngineOptions) -> Result<Engine, Error> {
        let n = spec.n;
        let vars = chart_vars(n);
        let (inner, top) = match &spec.source {
            Source::Finsler { f } => {
                let e = energy_expr(f);
                let want = opts.g_order + 2;
                let first = if opts.fd_fallback { want.min(FD_SYMBOLIC_ORDER) } else { want };
                let table = match PartialTable::build(std::slice::from_ref(&e), &vars, first, opts.node_cap) {
                    Ok(t) => t,
                    // Out of budget: drop to the symbolic floor and let FD serve the rest.
                    Err(TableError::NodeCap { .. }) if first > FD_SYMBOLIC_ORDER => {
                        PartialTable::build(std::slice::from_ref(&e), &vars, FD_SYMBOLIC_ORDER, opts.node_cap)?
                    }
                    Err(err) => return Err(err.into()),
                };
                (Inner::Finsler { f: f.clone(), table }, want)
            }
            Source::Spray { g } => (Inner::Spray { table: PartialTable::build(g, &vars, opts.g_order, opts.node_cap)? }, opts.g_order),
            Source::Projective { base, factor } => {
                let base = Engine::new(base, opts)?;
                let top = base.top_order();
                let factor = PartialTable::build(std::slice::from_ref(factor), &vars, opts.g_order, opts.node_cap)?;
                (Inner::Projective { base: Box::new(base), factor }, top)
            }
        };
        Ok(Engine { n, kind: spec.kind(), opts, inner, spaces: (0..=top).map(|_| OnceLock::new()).collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn kind(&self) -> Kind {
        self.kind
    }
    pub fn options(&self) -> EngineOptions {
        self.opts
    }

    fn top_order(&self) -> usize {
        self.spaces.len() - 1
    }

    /// True when some E partials come from finite differences.
    pub fn uses_fd(&self) -> bool {
        match &self.inner {
            Inner::Finsler { table, .. } => table.max_order() < self.opts.g_order + 2,
            Inner::Projective { base, .. } => base.uses_fd(),
            Inner::Spray { .. } => false,
        }
    }

    /// Highest order of Gⁱ partials computed without finite differences.
    pub fn exact_g_order(&self) -> usize {
        match &self.inner {
            Inner::Finsler { table, .. } => table.max_order().saturating_sub(2).min(self.opts.g_order),
            Inner::Projective { base, .. } => base.exact_g_order(),
            Inner::Spray { .. } => self.opts.g_order,
        }
    }

    fn space(&self, order: usize) -> Arc<JetSpace> {
        self.spaces[order].get_or_init(|| JetSpace::new(2 * self.n, order)).clone()
    }

    fn eval_table(table: &PartialTable, order: usize, pt: &TangentPoint) -> Result<Vec<Vec<f64>>, Error> {
        table.evaluate(order, &pt.x, &pt.y).map_err(|source| Error::Eval { point: pt.clone(), source })
    }

    /// Partials of E up to `order` in monomial order, finite differences
    /// filling in above the symbolic table.
    fn energy_partials(&self, table: &PartialTable, order: usize, pt: &TangentPoint) -> Result<Vec<f64>, Error> {
        let top = table.max_order();
        if order <= top {
            return Ok(Self::eval_table(table, order, pt)?.remove(0));
        }
        let sp = self.space(order);
        let mut out = Self::eval_table(table, top, pt)?.remove(0);
        let mut memo: HashMap<Vec<(usize, i8)>, Vec<f64>> = HashMap::new();
        let nv = 2 * self.n;
        let ynorm = pt.y_norm();
        let step: Vec<f64> = (0..nv).map(|v| if v < self.n { 1e-3 } else { 1e-3 * ynorm }).collect();
        // f(p + Σ k·(h_v/2)·e_v) for the order-`top` entries.
        let mut shifted = |shift: Vec<(usize, i8)>| -> Result<Vec<f64>, Error> {
            if let Some(v) = memo.get(&shift) {
                return Ok(v.clone());
            }
            let mut q = pt.clone();
            for &(v, k) in &shift {
                let d = f64::from(k) * step[v] / 2.0;
                if v < self.n {
                    q.x[v] += d;
                } else {
                    q.y[v - self.n] += d;
                }
            }
            let vals = Self::eval_table(table, top, &q)?.remove(0);
            memo.insert(shift, vals.clone());
            Ok(vals)
        };
        for (i, m) in sp.monomials().iter().enumerate().skip(out.len()) {
            let deg: usize = m.iter().map(|&c| c as usize).sum();
            if deg > order {
                break;
            }
            let excess = deg - top;
            let mut parent = m.clone();
            let v = m.iter().rposition(|&c| c > 0).expect("degree > 0");
            parent[v] -= 1;
            let w = if excess == 1 {
                None
            } else if excess == 2 {
                let w = parent.iter().rposition(|&c| c > 0).expect("degree > 1");
                parent[w] -= 1;
                Some(w)
            } else {
                return Err(Error::Unsupported(format!("finite differences cover at most two orders above the table (asked for {order})")));
            };
            let pi = table.position(&parent).expect("parent in table");
            let estimate = |scale: i8, f: &mut dyn FnMut(Vec<(usize, i8)>) -> Result<Vec<f64>, Error>| -> Result<f64, Error> {
                // scale 2 = full step, 1 = half step
                let hv = step[v] * f64::from(scale) / 2.0;
                Ok(match w {
                    None => (f(vec![(v, scale)])?[pi] - f(vec![(v, -scale)])?[pi]) / (2.0 * hv),
                    Some(w) if w == v => {
                        (f(vec![(v, scale)])?[pi] - 2.0 * f(vec![])?[pi] + f(vec![(v, -scale)])?[pi]) / (hv * hv)
                    }
                    Some(w) => {
                        let hw = step[w] * f64::from(scale) / 2.0;
                        let (a, b) = (w.min(v), w.max(v));
                        let s = |sa: i8, sb: i8| vec![(a, sa * scale), (b, sb * scale)];
                        (f(s(1, 1))?[pi] - f(s(1, -1))?[pi] - f(s(-1, 1))?[pi] + f(s(-1, -1))?[pi]) / (4.0 * hv * hw)
                    }
                })
            };
            let coarse = estimate(2, &mut shifted)?;
            let fine = estimate(1, &mut shifted)?;
            debug_assert_eq!(out.len(), i);
            out.push((4.0 * fine - coarse) / 3.0);
        }
        Ok(out)
    }

    /// E, ∂E/∂y and g at a point, straight from the table (no inversion).
    pub fn energy_second_order(&self, pt: &TangentPoint) -> Result<(f64, Vec<f64>, Vec<f64>), Error> {
        let Inner::Finsler { table, .. } = &self.inner else {
            return Err(Error::NotFinsler("energy_second_order"));
        };
        let vals = Self::eval_table(table, 2, pt)?.remove(0);
        let n = self.n;
        let at = |bumps: &[usize]| {
            let mut m = vec![0u8; 2 * n];
            for &b in bumps {
                m[b] += 1;
            }
            vals[table.position(&m).expect("order ≤ 2 entry")]
        };
        let de = (0..n).map(|j| at(&[n + j])).collect();
        let g = (0..n * n).map(|k| at(&[n + k / n, n + k % n])).collect();
        Ok((vals[0], de, g))
    }

    /// Frame providing Gⁱ partials up to the engine's `g_order`.
    pub fn frame(&self, pt: &TangentPoint) -> Result<Frame, Error> {
        self.frame_with_order(pt, self.opts.g_order)
    }

    /// Frame providing Gⁱ partials up to `g_order` (≤ the engine's).
    pub fn frame_with_order(&self, pt: &TangentPoint, g_order: usize) -> Result<Frame, Error> {
        assert!(g_order <= self.opts.g_order, "engine prepared for G order {}", self.opts.g_order);
        let n = self.n;
        match &self.inner {
            Inner::Finsler { f, table } => {
                let e_order = g_order + 2;
                let sp = self.space(e_order);
                let e = Jet::from_partials(&sp, e_order, &self.energy_partials(table, e_order, pt)?);
                let f0 = evaluate(f, &pt.x, &pt.y).map_err(|source| Error::Eval { point: pt.clone(), source })?;
                if f0 == 0.0 {
                    return Err(Error::Unsupported(format!("F vanishes at {pt}")));
                }
                let fj = e.scale(2.0).sqrt().scale(f0.signum());
                let ys: Vec<Jet> = (0..n).map(|i| Jet::variable(&sp, n + i, pt.y[i])).collect();
                let de_y: Vec<Jet> = (0..n).map(|j| e.deriv(n + j)).collect();
                let g = JetTensor::from_fn(n, 2, 0, |ix| de_y[ix[1]].deriv(n + ix[0]));
                let ginv = inverse(&g, pt)?;
                // Gⁱ = ½ gⁱʲ (yʳ ∂²E/∂xʳ∂yʲ − ∂E/∂xʲ)
                let w: Vec<Jet> = (0..n)
                    .map(|j| {
                        let mut acc = -&e.deriv(j);
                        for (r, y) in ys.iter().enumerate() {
                            acc = acc + y * &de_y[j].deriv(r);
                        }
                        acc
                    })
                    .collect();
                let spray = JetTensor::from_fn(n, 1, 1, |ix| {
                    let mut acc = ginv.at(&[ix[0], 0]) * &w[0];
                    for (j, wj) in w.iter().enumerate().skip(1) {
                        acc = acc + ginv.at(&[ix[0], j]) * wj;
                    }
                    acc.scale(0.5)
                });
                let exact = self.exact_g_order().min(g_order);
                Ok(Frame::assemble(pt, sp, spray, Some(Metric { e, f: fj, g, ginv }), g_order, exact))
            }
            Inner::Spray { table } => {
                let sp = self.space(g_order);
                let vals = Self::eval_table(table, g_order, pt)?;
                let spray = JetTensor::from_fn(n, 1, 1, |ix| Jet::from_partials(&sp, g_order, &vals[ix[0]]));
                Ok(Frame::assemble(pt, sp, spray, None, g_order, g_order))
            }
            Inner::Projective { base, factor } => {
                let bf = base.frame_with_order(pt, g_order)?;
                let vals = Self::eval_table(factor, g_order, pt)?.remove(0);
                let p = Jet::from_partials(&bf.space, g_order, &vals);
                let spray = JetTensor::from_fn(n, 1, 1, |ix| bf.spray.data[ix[0]].truncate(g_order) + &p * &bf.ys[ix[0]]);
                Ok(Frame::assemble(pt, bf.space.clone(), spray, None, g_order, bf.exact_g_order))
            }
        }
    }

    /// Gⁱ at a point (cheapest frame).
    pub fn spray_values(&self, pt: &TangentPoint) -> Result<Vec<f64>, Error> {
        Ok(self.frame_with_order(pt, 0)?.spray.data.iter().map(Jet::value).collect())
    }
}

/// Inverse of a symmetric jet matrix: `Σ_k (−g₀⁻¹N)^k g₀⁻¹` with `N = g − g₀`,
/// exact on the retained orders because N has no constant term.
fn inverse(g: &JetTensor, pt: &TangentPoint) -> Result<JetTensor, Error> {
    let n = g.n;
    let g0 = DMatrix::from_fn(n, n, |i, j| g.at(&[i, j]).value());
    let det = g0.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::SingularMetric { det, point: pt.clone() });
    }
    let inv0 = g0.clone().try_inverse().ok_or_else(|| Error::SingularMetric { det, point: pt.clone() })?;
    let order = g.order();
    let base = &g.data[0];
    let constant = |v: f64| base.zero_like().add_const(v);
    // A = g₀⁻¹ N
    let a = JetTensor::from_fn(n, 2, 0, |ix| {
        let mut acc = base.zero_like();
        for j in 0..n {
            let mut nj = g.at(&[j, ix[1]]).clone();
            nj = nj.add_const(-g0[(j, ix[1])]);
            acc.axpy(inv0[(ix[0], j)], &nj);
        }
        acc
    });
    let mut term = JetTensor::from_fn(n, 2, 0, |ix| constant(inv0[(ix[0], ix[1])]));
    let mut sum = term.clone();
    for _ in 0..order {
        term = JetTensor::from_fn(n, 2, 0, |ix| {
            let mut acc = base.zero_like();
            for k in 0..n {
                acc = acc - a.at(&[ix[0], k]) * term.at(&[k, ix[1]]);
            }
            acc
        });
        sum = sum.zip(&term, |s, t| s + t);
    }
    Ok(sum)
}

/// Jets that exist only for Finsler functions.
pub struct Metric {
    pub e: Jet,
    pub f: Jet,
    pub g: JetTensor,
    pub ginv: JetTensor,
}

/// Everything known at one point of the slit tangent bundle.
pub struct Frame {
    pub n: usize,
    pub pt: TangentPoint,
    pub space: Arc<JetSpace>,
    pub xs: Vec<Jet>,
    pub ys: Vec<Jet>,
    /// Gⁱ
    pub spray: JetTensor,
    pub metric: Option<Metric>,
    pub g_order: usize,
    /// Gⁱ partials above this order involve finite differences.
    pub exact_g_order: usize,
    conn: OnceCell<JetTensor>,
    gamma: OnceCell<JetTensor>,
}

impl Frame {
    fn assemble(pt: &TangentPoint, space: Arc<JetSpace>, spray: JetTensor, metric: Option<Metric>, g_order: usize, exact: usize) -> Frame {
        let n = pt.n();
        let xs = (0..n).map(|i| Jet::variable(&space, i, pt.x[i])).collect();
        let ys = (0..n).map(|i| Jet::variable(&space, n + i, pt.y[i])).collect();
        Frame { n, pt: pt.clone(), space, xs, ys, spray, metric, g_order, exact_g_order: exact, conn: OnceCell::new(), gamma: OnceCell::new() }
    }

    pub fn kind(&self) -> Kind {
        if self.metric.is_some() {
            Kind::Finsler
        } else {
            Kind::Spray
        }
    }

    pub fn metric(&self) -> Result<&Metric, Error> {
        self.metric.as_ref().ok_or(Error::NotFinsler("metric"))
    }

    /// Connection coefficients `Gⁱ_j = ∂Gⁱ/∂yʲ`, stored `[i][j]`.
    pub fn conn(&self) -> &JetTensor {
        self.conn.get_or_init(|| self.dy(&self.spray))
    }

    /// `Gⁱ_{jk} = ∂²Gⁱ/∂yʲ∂yᵏ`, stored `[i][j][k]`.
    pub fn gamma(&self) -> &JetTensor {
        self.gamma.get_or_init(|| self.dy(self.conn()))
    }

    pub fn dy(&self, t: &JetTensor) -> JetTensor {
        t.dy(self.n)
    }

    pub fn dx(&self, t: &JetTensor) -> JetTensor {
        t.dx()
    }

    /// `δ_a t = ∂t/∂xᵃ − Gʳ_a ∂t/∂yʳ`, new slot first among the covariant ones.
    pub fn delta(&self, t: &JetTensor) -> JetTensor {
        let dyt = self.dy(t);
        let conn = self.conn();
        let up = t.up;
        t.new_slot(|a, rest| {
            let mut acc = t.at(rest).deriv(a);
            let mut idx = rest[..up].to_vec();
            idx.push(0);
            idx.extend_from_slice(&rest[up..]);
            for r in 0..self.n {
                idx[up] = r;
                acc = acc - conn.at(&[r, a]) * dyt.at(&idx);
            }
            acc
        })
    }

    /// Berwald h-derivative: δ plus +Γ per upper and −Γ per lower index.
    pub fn hnabla(&self, t: &JetTensor) -> JetTensor {
        let d = self.delta(t);
        let gamma = self.gamma();
        let (n, up) = (self.n, t.up);
        JetTensor::from_fn(n, t.rank + 1, up, |idx| {
            let a = idx[up];
            let mut rest: Vec<usize> = idx[..up].to_vec();
            rest.extend_from_slice(&idx[up + 1..]);
            let mut acc = d.at(idx).clone();
            let mut probe = rest.clone();
            for s in 0..rest.len() {
                let orig = rest[s];
                for r in 0..n {
                    probe[s] = r;
                    if s < up {
                        acc = acc + gamma.at(&[orig, a, r]) * t.at(&probe);
                    } else {
                        acc = acc - gamma.at(&[r, a, orig]) * t.at(&probe);
                    }
                }
                probe[s] = orig;
            }
            acc
        })
    }

    pub fn scalar(&self, j: &Jet) -> JetTensor {
        JetTensor { n: self.n, rank: 0, up: 0, data: vec![j.clone()] }
    }

    pub fn y_vector(&self) -> JetTensor {
        JetTensor { n: self.n, rank: 1, up: 1, data: self.ys.clone() }
    }

    /// `g` and `g⁻¹` as numbers.
    pub fn metric_values(&self) -> Result<(ComponentTensor, ComponentTensor), Error> {
        let m = self.metric()?;
        let mut gi = m.ginv.values("g_inv");
        gi.roles = vec![Role::Up, Role::Up];
        Ok((m.g.values("g"), gi))
    }

    /// `∂^a_x ∂^b_y Gⁱ`, indices `[i][x-slots][y-slots]`.
    pub fn spray_partials(&self, x_order: usize, y_order: usize) -> Result<ComponentTensor, Error> {
        if x_order + y_order > self.g_order {
            return Err(Error::Unsupported(format!(
                "G partials of order {} requested from a frame prepared for order {}",
                x_order + y_order,
                self.g_order
            )));
        }
        let mut t = self.spray.clone();
        for _ in 0..y_order {
            t = self.dy(&t);
        }
        for _ in 0..x_order {
            t = self.dx(&t);
        }
        // Partials commute, so the slot order within each block is immaterial.
        let mut out = t.values("G partials");
        out.roles[0] = Role::Up;
        Ok(out)
    }

    /// `(δ_i f)(pt)` for a formula `f`.
    pub fn horizontal_partial(&self, f: &Expr) -> Result<ComponentTensor, Error> {
        let n = self.n;
        let conn = self.conn();
        let ev = |e: &Expr| evaluate(e, &self.pt.x, &self.pt.y).map_err(|source| Error::Eval { point: self.pt.clone(), source });
        let dys: Vec<f64> = (0..n).map(|r| ev(&differentiate(f, Var::y(r)))).collect::<Result<_, _>>()?;
        let data = (0..n)
            .map(|i| {
                let dx = ev(&differentiate(f, Var::x(i)))?;
                Ok(dx - (0..n).map(|r| conn.at(&[r, i]).value() * dys[r]).sum::<f64>())
            })
            .collect::<Result<_, Error>>()?;
        Ok(ComponentTensor::new("delta f", n, vec![Role::Down], data))
    }
}

impl JetTensor {
    /// Exchange two covariant slots (absolute positions).
    pub fn swap_down(&self, s: usize, t: usize) -> JetTensor {
        JetTensor::from_fn(self.n, self.rank, self.up, |idx| {
            let mut src = idx.to_vec();
            src.swap(s, t);
            self.at(&src).clone()
        })
    }
}

/// Convenience: metric and inverse at one point.
pub fn metric_at(spec: &GeometrySpec, pt: &TangentPoint) -> Result<(ComponentTensor, ComponentTensor), Error> {
    Engine::new(spec, EngineOptions { g_order: 0, ..Default::default() })?.frame(pt)?.metric_values()
}

/// Convenience: Gⁱ at one point.
pub fn spray_coefficients(spec: &GeometrySpec, pt: &TangentPoint) -> Result<ComponentTensor, Error> {
    let g = Engine::new(spec, EngineOptions { g_order: 0, ..Default::default() })?.spray_values(pt)?;
    Ok(ComponentTensor::new("G", spec.n, vec![Role::Up], g))
}

/// An auxiliary function on TM, turned into jets on any frame's space.
pub struct ScalarField {
    table: PartialTable,
}

impl ScalarField {
    pub fn new(e: &Expr, n: usize, order: usize, node_cap: usize) -> Result<ScalarField, Error> {
        Ok(ScalarField { table: PartialTable::build(std::slice::from_ref(e), &chart_vars(n), order, node_cap)? })
    }

    /// Jet of the highest order both the table and the frame allow.
    pub fn jet(&self, fr: &Frame) -> Result<Jet, Error> {
        let order = self.table.max_order().min(fr.space.order());
        let vals = Engine::eval_table(&self.table, order, &fr.pt)?.remove(0);
        Ok(Jet::from_partials(&fr.space, order, &vals))
    }
}

impl Frame {
    /// `S f = yʳ ∂f/∂xʳ − 2Gʳ ∂f/∂yʳ`.
    pub fn spray_derivative(&self, f: &Jet) -> Jet {
        let n = self.n;
        let mut acc = f.deriv(0) * &self.ys[0];
        for r in 0..n {
            if r > 0 {
                acc = acc + f.deriv(r) * &self.ys[r];
            }
            acc = acc - (f.deriv(n + r) * &self.spray.data[r]).scale(2.0);
        }
        acc
    }
}

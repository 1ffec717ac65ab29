//! Hash-consed expression DAG.
//!
//! Normal form:
//! * `Sum(c, terms)`: `c + Σ k·t`. Terms are sorted by id, merged, and have
//!   non-zero coefficients. A term is never a constant, a sum, or a product
//!   with a coefficient other than 1.
//! * `Prod(c, factors)`: `c·Π b^e`. Bases are sorted, merged, and never
//!   constants. A scalar multiple of a sum is distributed into the sum.
//! * Constant exponents stay exponents (power rule). Variable exponents
//!   become `exp(b·log a)`.
//!
//! Under this normal form, mixed partials taken in either order produce the
//! same node.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::ast::{BinOp, Expr, Func, Node, Var, VarKind};
use crate::eval::{apply, real_pow};

pub type NodeId = u32;

#[derive(Clone, Debug)]
pub enum GNode {
    Const(f64),
    Var(Var),
    Sum(f64, Box<[(NodeId, f64)]>),
    Prod(f64, Box<[(NodeId, f64)]>),
    Func(Func, NodeId),
}

fn bits(v: f64) -> u64 {
    // Treat -0.0 and 0.0 as the same key.
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

impl PartialEq for GNode {
    fn eq(&self, other: &Self) -> bool {
        let same = |a: &[(NodeId, f64)], b: &[(NodeId, f64)]| {
            a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.0 == q.0 && bits(p.1) == bits(q.1))
        };
        match (self, other) {
            (GNode::Const(a), GNode::Const(b)) => bits(*a) == bits(*b),
            (GNode::Var(a), GNode::Var(b)) => a == b,
            (GNode::Sum(c, a), GNode::Sum(d, b)) | (GNode::Prod(c, a), GNode::Prod(d, b)) => {
                bits(*c) == bits(*d) && same(a, b)
            }
            (GNode::Func(f, a), GNode::Func(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}
impl Eq for GNode {}

impl Hash for GNode {
    fn hash<H: Hasher>(&self, h: &mut H) {
        match self {
            GNode::Const(v) => (0u8, bits(*v)).hash(h),
            GNode::Var(v) => (1u8, v).hash(h),
            GNode::Sum(c, t) | GNode::Prod(c, t) => {
                (if matches!(self, GNode::Sum(..)) { 2u8 } else { 3u8 }, bits(*c)).hash(h);
                for (id, k) in t.iter() {
                    (id, bits(*k)).hash(h);
                }
            }
            GNode::Func(f, a) => (4u8, f, a).hash(h),
        }
    }
}

fn var_bit(v: Var) -> u64 {
    let flat = 2 * v.index + usize::from(v.kind == VarKind::Y);
    1u64 << flat.min(63)
}

/// Arena of canonical nodes; children always precede parents.
#[derive(Default, Clone)]
pub struct Graph {
    nodes: Vec<GNode>,
    deps: Vec<u64>,
    intern: HashMap<GNode, NodeId>,
    dmemo: HashMap<(NodeId, Var), NodeId>,
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &GNode {
        &self.nodes[id as usize]
    }

    pub fn depends_on(&self, id: NodeId, v: Var) -> bool {
        self.deps[id as usize] & var_bit(v) != 0
    }

    fn intern(&mut self, n: GNode) -> NodeId {
        if let Some(&id) = self.intern.get(&n) {
            return id;
        }
        let dep = match &n {
            GNode::Const(_) => 0,
            GNode::Var(v) => var_bit(*v),
            GNode::Sum(_, t) | GNode::Prod(_, t) => t.iter().fold(0, |m, (c, _)| m | self.deps[*c as usize]),
            GNode::Func(_, a) => self.deps[*a as usize],
        };
        let id = NodeId::try_from(self.nodes.len()).expect("graph exceeds u32 ids");
        self.nodes.push(n.clone());
        self.deps.push(dep);
        self.intern.insert(n, id);
        id
    }

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.intern(GNode::Const(if v == 0.0 { 0.0 } else { v }))
    }

    pub fn var(&mut self, v: Var) -> NodeId {
        self.intern(GNode::Var(v))
    }

    fn as_const(&self, id: NodeId) -> Option<f64> {
        match self.node(id) {
            GNode::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// `c + Σ k·t`, normalised.
    pub fn sum(&mut self, mut c: f64, terms: &[(NodeId, f64)]) -> NodeId {
        let mut flat: Vec<(NodeId, f64)> = Vec::with_capacity(terms.len());
        for &(t, k) in terms {
            if k == 0.0 {
                continue;
            }
            match self.node(t).clone() {
                GNode::Const(v) => c += k * v,
                GNode::Sum(c0, ts) => {
                    c += k * c0;
                    flat.extend(ts.iter().map(|&(ti, ki)| (ti, k * ki)));
                }
                GNode::Prod(pc, fs) if pc != 1.0 => {
                    let unit = self.prod(1.0, &fs);
                    flat.push((unit, k * pc));
                }
                _ => flat.push((t, k)),
            }
        }
        flat.sort_by_key(|p| p.0);
        let mut merged: Vec<(NodeId, f64)> = Vec::with_capacity(flat.len());
        for (t, k) in flat {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += k,
                _ => merged.push((t, k)),
            }
        }
        merged.retain(|p| p.1 != 0.0);
        match merged.as_slice() {
            [] => self.constant(c),
            [(t, k)] if c == 0.0 => {
                if *k == 1.0 {
                    *t
                } else {
                    let (t, k) = (*t, *k);
                    self.prod(k, &[(t, 1.0)])
                }
            }
            _ => self.intern(GNode::Sum(if c == 0.0 { 0.0 } else { c }, merged.into_boxed_slice())),
        }
    }

    /// `c·Π b^e`, normalised.
    pub fn prod(&mut self, mut c: f64, factors: &[(NodeId, f64)]) -> NodeId {
        let mut flat: Vec<(NodeId, f64)> = Vec::with_capacity(factors.len());
        let mut stack: Vec<(NodeId, f64)> = factors.iter().rev().copied().collect();
        while let Some((b, e)) = stack.pop() {
            if e == 0.0 {
                continue;
            }
            match self.node(b).clone() {
                GNode::Const(v) => match real_pow(v, e) {
                    Ok(p) if p.is_finite() => c *= p,
                    _ => flat.push((b, e)),
                },
                GNode::Prod(pc, fs) if e.fract() == 0.0 => {
                    c *= pc.powi(e as i32);
                    stack.extend(fs.iter().rev().map(|&(fb, fe)| (fb, fe * e)));
                }
                _ => flat.push((b, e)),
            }
        }
        if c == 0.0 {
            return self.constant(0.0);
        }
        flat.sort_by_key(|p| p.0);
        let mut merged: Vec<(NodeId, f64)> = Vec::with_capacity(flat.len());
        for (b, e) in flat {
            match merged.last_mut() {
                Some(last) if last.0 == b => last.1 += e,
                _ => merged.push((b, e)),
            }
        }
        merged.retain(|p| p.1 != 0.0);
        match merged.as_slice() {
            [] => self.constant(c),
            [(b, e)] if *e == 1.0 => {
                let b = *b;
                if c == 1.0 {
                    return b;
                }
                if let GNode::Sum(c0, ts) = self.node(b).clone() {
                    let scaled: Vec<_> = ts.iter().map(|&(t, k)| (t, k * c)).collect();
                    return self.sum(c0 * c, &scaled);
                }
                self.intern(GNode::Prod(c, merged.into_boxed_slice()))
            }
            _ => self.intern(GNode::Prod(c, merged.into_boxed_slice())),
        }
    }

    pub fn func(&mut self, f: Func, a: NodeId) -> NodeId {
        if f == Func::Sqrt {
            return self.prod(1.0, &[(a, 0.5)]);
        }
        if let Some(v) = self.as_const(a) {
            if let Ok(r) = apply(f, v) {
                if r.is_finite() {
                    return self.constant(r);
                }
            }
        }
        self.intern(GNode::Func(f, a))
    }

    pub fn import(&mut self, e: &Expr) -> NodeId {
        match e.node() {
            Node::Num(v) => self.constant(*v),
            Node::Pi => self.constant(std::f64::consts::PI),
            Node::Var(v) => self.var(*v),
            Node::Neg(a) => {
                let a = self.import(a);
                self.prod(-1.0, &[(a, 1.0)])
            }
            Node::Call(f, a) => {
                let a = self.import(a);
                self.func(*f, a)
            }
            Node::Bin(op, a, b) => {
                let (a, b) = (self.import(a), self.import(b));
                match op {
                    BinOp::Add => self.sum(0.0, &[(a, 1.0), (b, 1.0)]),
                    BinOp::Sub => self.sum(0.0, &[(a, 1.0), (b, -1.0)]),
                    BinOp::Mul => self.prod(1.0, &[(a, 1.0), (b, 1.0)]),
                    BinOp::Div => self.prod(1.0, &[(a, 1.0), (b, -1.0)]),
                    BinOp::Pow => match self.as_const(b) {
                        Some(k) => self.prod(1.0, &[(a, k)]),
                        None => {
                            let l = self.func(Func::Log, a);
                            let arg = self.prod(1.0, &[(b, 1.0), (l, 1.0)]);
                            self.func(Func::Exp, arg)
                        }
                    },
                }
            }
        }
    }

    /// Exact partial derivative, memoised per (node, variable).
    pub fn diff(&mut self, id: NodeId, v: Var) -> NodeId {
        if !self.depends_on(id, v) {
            return self.constant(0.0);
        }
        if let Some(&d) = self.dmemo.get(&(id, v)) {
            return d;
        }
        let d = match self.node(id).clone() {
            GNode::Const(_) => self.constant(0.0),
            GNode::Var(w) => self.constant(if w == v { 1.0 } else { 0.0 }),
            GNode::Sum(_, ts) => {
                let parts: Vec<_> = ts.iter().map(|&(t, k)| (self.diff(t, v), k)).collect();
                self.sum(0.0, &parts)
            }
            GNode::Prod(c, fs) => {
                let mut parts = Vec::new();
                for i in 0..fs.len() {
                    let (b, e) = fs[i];
                    if !self.depends_on(b, v) {
                        continue;
                    }
                    let db = self.diff(b, v);
                    let mut f: Vec<(NodeId, f64)> = fs.to_vec();
                    f[i].1 = e - 1.0;
                    f.push((db, 1.0));
                    parts.push((self.prod(c * e, &f), 1.0));
                }
                self.sum(0.0, &parts)
            }
            GNode::Func(f, a) => {
                let da = self.diff(a, v);
                let outer = match f {
                    Func::Exp => id,
                    Func::Log => self.prod(1.0, &[(a, -1.0)]),
                    Func::Sin => self.func(Func::Cos, a),
                    Func::Cos => {
                        let s = self.func(Func::Sin, a);
                        self.prod(-1.0, &[(s, 1.0)])
                    }
                    Func::Tan => {
                        let t2 = self.prod(1.0, &[(id, 2.0)]);
                        self.sum(1.0, &[(t2, 1.0)])
                    }
                    Func::Atan => {
                        let a2 = self.prod(1.0, &[(a, 2.0)]);
                        let s = self.sum(1.0, &[(a2, 1.0)]);
                        self.prod(1.0, &[(s, -1.0)])
                    }
                    Func::Sqrt => unreachable!("sqrt is stored as a power"),
                };
                self.prod(1.0, &[(outer, 1.0), (da, 1.0)])
            }
        };
        self.dmemo.insert((id, v), d);
        d
    }

    /// Convert back to a tree (shared subtrees become shared `Arc`s).
    pub fn export(&self, id: NodeId) -> Expr {
        let mut memo = HashMap::new();
        self.export_memo(id, &mut memo)
    }

    fn export_memo(&self, id: NodeId, memo: &mut HashMap<NodeId, Expr>) -> Expr {
        if let Some(e) = memo.get(&id) {
            return e.clone();
        }
        let e = match self.node(id) {
            GNode::Const(v) => num_expr(*v),
            GNode::Var(v) => Expr::var(*v),
            GNode::Func(f, a) => Expr::call(*f, self.export_memo(*a, memo)),
            GNode::Prod(c, fs) => self.export_prod(*c, fs, memo),
            GNode::Sum(c, ts) => {
                let mut acc: Option<Expr> = None;
                for &(t, k) in ts.iter() {
                    let (neg, term) = self.export_scaled(t, k, memo);
                    acc = Some(match acc {
                        None if neg => Expr::negate(term),
                        None => term,
                        Some(a) if neg => a - term,
                        Some(a) => a + term,
                    });
                }
                let acc = acc.expect("sum has terms");
                if *c > 0.0 {
                    acc + Expr::num(*c)
                } else if *c < 0.0 {
                    acc - Expr::num(-c)
                } else {
                    acc
                }
            }
        };
        memo.insert(id, e.clone());
        e
    }

    /// Export `k·t` as (is_negative, |k|·t).
    fn export_scaled(&self, t: NodeId, k: f64, memo: &mut HashMap<NodeId, Expr>) -> (bool, Expr) {
        let e = if k.abs() == 1.0 {
            self.export_memo(t, memo)
        } else {
            match self.node(t) {
                GNode::Prod(c, fs) => self.export_prod(c * k.abs(), fs, memo),
                _ => self.export_prod(k.abs(), &[(t, 1.0)], memo),
            }
        };
        (k < 0.0, e)
    }

    fn export_prod(&self, c: f64, fs: &[(NodeId, f64)], memo: &mut HashMap<NodeId, Expr>) -> Expr {
        let powered = |g: &Graph, b: NodeId, e: f64, memo: &mut HashMap<NodeId, Expr>| {
            let base = g.export_memo(b, memo);
            if e == 1.0 {
                base
            } else if e == 0.5 {
                Expr::call(Func::Sqrt, base)
            } else {
                Expr::bin(BinOp::Pow, base, num_expr(e))
            }
        };
        let mut num: Vec<Expr> = Vec::new();
        let mut den: Vec<Expr> = Vec::new();
        if c.abs() != 1.0 {
            num.push(Expr::num(c.abs()));
        }
        for &(b, e) in fs {
            if e > 0.0 {
                num.push(powered(self, b, e, memo));
            } else {
                den.push(powered(self, b, -e, memo));
            }
        }
        let mut it = num.into_iter();
        let mut out = match it.next() {
            Some(first) if c < 0.0 => Expr::negate(first),
            Some(first) => first,
            None => num_expr(c.signum()),
        };
        for f in it {
            out = out * f;
        }
        if let Some(d) = den.into_iter().reduce(|a, b| a * b) {
            out = out / d;
        }
        out
    }

    /// Evaluate the listed nodes (ascending ids) into `vals`.
    pub fn eval_plan(&self, plan: &[NodeId], x: &[f64], y: &[f64], vals: &mut [f64]) -> Result<(), (NodeId, &'static str)> {
        for &id in plan {
            let v = match self.node(id) {
                GNode::Const(c) => *c,
                GNode::Var(v) => {
                    let src = if v.kind == VarKind::X { x } else { y };
                    src[v.index]
                }
                GNode::Sum(c, ts) => ts.iter().fold(*c, |acc, &(t, k)| acc + k * vals[t as usize]),
                GNode::Prod(c, fs) => {
                    let mut acc = *c;
                    for &(b, e) in fs.iter() {
                        acc *= real_pow(vals[b as usize], e).map_err(|r| (id, r))?;
                    }
                    acc
                }
                GNode::Func(f, a) => apply(*f, vals[*a as usize]).map_err(|r| (id, r))?,
            };
            if !v.is_finite() {
                return Err((id, "non-finite value"));
            }
            vals[id as usize] = v;
        }
        Ok(())
    }

    /// All nodes reachable from `roots`, ascending (a valid evaluation order).
    pub fn plan(&self, roots: &[NodeId]) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = roots.to_vec();
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id as usize], true) {
                continue;
            }
            match self.node(id) {
                GNode::Sum(_, t) | GNode::Prod(_, t) => stack.extend(t.iter().map(|p| p.0)),
                GNode::Func(_, a) => stack.push(*a),
                _ => {}
            }
        }
        (0..self.nodes.len() as NodeId).filter(|&i| seen[i as usize]).collect()
    }
}

fn num_expr(v: f64) -> Expr {
    if v < 0.0 {
        Expr::negate(Expr::num(-v))
    } else {
        Expr::num(v)
    }
}

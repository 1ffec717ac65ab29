use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    X,
    Y,
}

/// A chart variable; `index` is zero-based (`x1` has index 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub kind: VarKind,
    pub index: usize,
}

impl Var {
    pub fn x(index: usize) -> Var {
        Var { kind: VarKind::X, index }
    }
    pub fn y(index: usize) -> Var {
        Var { kind: VarKind::Y, index }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.kind {
            VarKind::X => 'x',
            VarKind::Y => 'y',
        };
        write!(f, "{c}{}", self.index + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Atan,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sqrt,
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Pi,
    Neg(Expr),
    Bin(BinOp, Expr, Expr),
    Call(Func, Expr),
}

/// Immutable, cheaply clonable expression tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }
    pub fn node(&self) -> &Node {
        &self.0
    }
    pub fn num(v: f64) -> Expr {
        Expr::new(Node::Num(v))
    }
    pub fn var(v: Var) -> Expr {
        Expr::new(Node::Var(v))
    }
    pub fn negate(a: Expr) -> Expr {
        Expr::new(Node::Neg(a))
    }
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::new(Node::Bin(op, a, b))
    }
    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::new(Node::Call(f, a))
    }

    /// Largest variable index used per kind, as a count (`x3` gives 3).
    pub fn max_index(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Pi => 0,
            Node::Var(v) => v.index + 1,
            Node::Neg(a) | Node::Call(_, a) => a.max_index(),
            Node::Bin(_, a, b) => a.max_index().max(b.max_index()),
        }
    }

    /// Does the expression mention variables of the given kind?
    pub fn mentions(&self, kind: VarKind) -> bool {
        match self.node() {
            Node::Num(_) | Node::Pi => false,
            Node::Var(v) => v.kind == kind,
            Node::Neg(a) | Node::Call(_, a) => a.mentions(kind),
            Node::Bin(_, a, b) => a.mentions(kind) || b.mentions(kind),
        }
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::negate(self)
    }
}
impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Add, self, rhs)
    }
}
impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Sub, self, rhs)
    }
}
impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Mul, self, rhs)
    }
}
impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Div, self, rhs)
    }
}

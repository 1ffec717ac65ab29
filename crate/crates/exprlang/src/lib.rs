//! Scalar expressions in the chart variables `x1..xn`, `y1..yn`.
//!
//! [`Expr`] is the immutable tree users write down. Differentiation and
//! mixed-partial tables go through a hash-consed DAG ([`graph`]) in which
//! sums and products are kept in a sorted, merged normal form, so that
//! `∂u∂v e` and `∂v∂u e` end up as the very same node.

mod ast;
mod eval;
pub mod graph;
mod parse;
mod print;
mod table;

pub use ast::{BinOp, Expr, Func, Node, Var, VarKind};
pub use eval::{evaluate, EvalError};
pub use parse::{parse, ParseError};
pub use table::{multi_indices, partial_table, MultiIndex, PartialTable, TableError, DEFAULT_NODE_CAP};

/// Exact symbolic derivative of `e` with respect to `v`.
pub fn differentiate(e: &Expr, v: Var) -> Expr {
    let mut g = graph::Graph::new();
    let root = g.import(e);
    let d = g.diff(root, v);
    g.export(d)
}

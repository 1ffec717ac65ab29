//! Minimal-parenthesis printer; the output reparses to the same tree.

use std::fmt;

use crate::ast::{BinOp, Expr, Node};

// Binding strength of the grammar productions: expr < term < unary < power < atom.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e.node() {
        Node::Num(v) if *v < 0.0 || v.is_sign_negative() => UNARY,
        Node::Num(_) | Node::Var(_) | Node::Pi | Node::Call(..) => ATOM,
        Node::Neg(_) => UNARY,
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => SUM,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => PRODUCT,
        Node::Bin(BinOp::Pow, ..) => POWER,
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if level(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Num(v) if v.is_sign_negative() => write!(f, "-{}", fmt_num(-v)),
        Node::Num(v) => write!(f, "{}", fmt_num(*v)),
        Node::Var(v) => write!(f, "{v}"),
        Node::Pi => write!(f, "pi"),
        Node::Neg(a) => {
            write!(f, "-")?;
            write_at(f, a, UNARY)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
        Node::Bin(op, a, b) => {
            let (sym, lmin, rmin) = match op {
                BinOp::Add => (" + ", SUM, PRODUCT),
                BinOp::Sub => (" - ", SUM, PRODUCT),
                BinOp::Mul => ("*", PRODUCT, UNARY),
                BinOp::Div => ("/", PRODUCT, UNARY),
                BinOp::Pow => ("^", ATOM, UNARY),
            };
            write_at(f, a, lmin)?;
            write!(f, "{sym}")?;
            write_at(f, b, rmin)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

use thiserror::Error;

use crate::ast::{BinOp, Expr, Func, Node, VarKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain violation in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("non-finite value {value} from `{subexpr}`")]
    NonFinite { subexpr: String, value: f64 },
    #[error("variable `{0}` has no value")]
    Unassigned(String),
}

fn domain(e: &Expr, reason: impl Into<String>) -> EvalError {
    EvalError::Domain { subexpr: e.to_string(), reason: reason.into() }
}

/// `a^b` with the real-power domain rules used throughout the crate.
pub(crate) fn real_pow(a: f64, b: f64) -> Result<f64, &'static str> {
    if a == 0.0 && b < 0.0 {
        return Err("division by zero");
    }
    if a < 0.0 && b.fract() != 0.0 {
        return Err("negative base with non-integer exponent");
    }
    Ok(if b == 2.0 {
        a * a
    } else if b == 1.0 {
        a
    } else if b == 0.5 {
        a.sqrt()
    } else if b.fract() == 0.0 && b.abs() < 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    })
}

pub(crate) fn apply(func: Func, a: f64) -> Result<f64, &'static str> {
    match func {
        Func::Sqrt if a < 0.0 => Err("sqrt of a negative number"),
        Func::Log if a <= 0.0 => Err("log of a non-positive number"),
        Func::Sqrt => Ok(a.sqrt()),
        Func::Log => Ok(a.ln()),
        Func::Exp => Ok(a.exp()),
        Func::Sin => Ok(a.sin()),
        Func::Cos => Ok(a.cos()),
        Func::Tan => Ok(a.tan()),
        Func::Atan => Ok(a.atan()),
    }
}

/// Evaluate by walking the tree. `x` and `y` hold the chart coordinates.
pub fn evaluate(e: &Expr, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    let v = match e.node() {
        Node::Num(v) => *v,
        Node::Pi => std::f64::consts::PI,
        Node::Var(v) => {
            let src = if v.kind == VarKind::X { x } else { y };
            *src.get(v.index).ok_or_else(|| EvalError::Unassigned(v.to_string()))?
        }
        Node::Neg(a) => -evaluate(a, x, y)?,
        Node::Call(func, a) => apply(*func, evaluate(a, x, y)?).map_err(|r| domain(e, r))?,
        Node::Bin(op, a, b) => {
            let (a, b) = (evaluate(a, x, y)?, evaluate(b, x, y)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div if b == 0.0 => return Err(domain(e, "division by zero")),
                BinOp::Div => a / b,
                BinOp::Pow => real_pow(a, b).map_err(|r| domain(e, r))?,
            }
        }
    };
    if !v.is_finite() {
        return Err(EvalError::NonFinite { subexpr: e.to_string(), value: v });
    }
    Ok(v)
}

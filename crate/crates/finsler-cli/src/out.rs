//! JSON values and plain-text tables.

use std::str::FromStr;

use finsler::report::ResidualEntry;
use finsler::TangentPoint;
use serde_json::{json, Map, Number, Value};

/// 17 significant digits; NaN and infinities become `null`.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&format!("{v:.16e}")).expect("valid float literal"))
}

pub fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().copied().map(num).collect())
}

pub fn point(p: Option<&TangentPoint>) -> Value {
    p.map_or(Value::Null, |p| json!({ "x": nums(&p.x), "y": nums(&p.y) }))
}

/// `{id, paper_anchor, residual, tolerance, pass, witness_point}` plus optional flags.
pub fn entry(e: &ResidualEntry) -> Value {
    let mut m = Map::new();
    m.insert("id".into(), json!(e.id));
    let anchor = if e.anchor == e.name { e.anchor.clone() } else { format!("{}: {}", e.anchor, e.name) };
    m.insert("paper_anchor".into(), json!(anchor));
    m.insert("residual".into(), opt(e.residual));
    m.insert("tolerance".into(), num(e.tolerance));
    m.insert("pass".into(), json!(e.pass));
    m.insert("witness_point".into(), point(e.witness.as_ref()));
    if e.fd {
        m.insert("fd".into(), json!(true));
    }
    if let Some(s) = &e.skipped {
        m.insert("skipped".into(), json!(s));
    }
    if let Some(s) = &e.error {
        m.insert("error".into(), json!(s));
    }
    Value::Object(m)
}

pub fn entries(es: &[ResidualEntry]) -> Value {
    Value::Array(es.iter().map(entry).collect())
}

pub fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

pub fn coords(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}

/// Left-aligned columns separated by two spaces.
pub fn table(head: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(head.to_vec());
    out += &line(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

pub fn entry_table(es: &[ResidualEntry]) -> String {
    let rows: Vec<Vec<String>> = es
        .iter()
        .map(|e| {
            let status = if e.skipped.is_some() {
                "skip"
            } else if e.pass {
                "pass"
            } else {
                "FAIL"
            };
            let residual = match (&e.residual, &e.error) {
                (_, Some(err)) => format!("error: {err}"),
                (Some(r), None) => sci(*r),
                (None, None) => e.skipped.clone().map_or("-".into(), |s| format!("({s})")),
            };
            vec![e.id.clone(), status.into(), residual, sci(e.tolerance), if e.fd { "fd".into() } else { String::new() }, e.name.clone()]
        })
        .collect();
    table(&["id", "status", "residual", "tolerance", "route", "relation"], &rows)
}

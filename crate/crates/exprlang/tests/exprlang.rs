use exprlang::graph::Graph;
use exprlang::{differentiate, evaluate, parse, partial_table, EvalError, Expr, Func, Var};
use proptest::prelude::*;

fn p(s: &str) -> Expr {
    parse(s, 3).unwrap()
}

#[test]
fn derivative_examples() {
    assert_eq!(differentiate(&p("y1^2"), Var::y(0)).to_string(), "2*y1");
    assert_eq!(differentiate(&p("sqrt(y1^2+y2^2)"), Var::x(0)).to_string(), "0");
    let d = differentiate(&p("sqrt(y1^2+y2^2)"), Var::y(0));
    assert_eq!(d.to_string(), "y1/sqrt(y1^2 + y2^2)");
}

#[test]
fn evaluation_examples() {
    assert_eq!(evaluate(&p("y1^2+y2^2"), &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
    assert_eq!(evaluate(&p("sqrt(y1^2+y2^2)/x2"), &[0.0, 2.0], &[3.0, 4.0]).unwrap(), 2.5);
    match evaluate(&p("1 + log(x1)"), &[-1.0], &[]) {
        Err(EvalError::Domain { subexpr, .. }) => assert_eq!(subexpr, "log(x1)"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(evaluate(&p("1/(x1-1)"), &[1.0], &[]), Err(EvalError::Domain { .. })));
    assert!(matches!(evaluate(&p("exp(x1)"), &[1e3], &[]), Err(EvalError::NonFinite { .. })));
}

#[test]
fn small_tables() {
    let t = partial_table(&parse("y1*y2", 2).unwrap(), 2, 2).unwrap();
    let v = t.evaluate(2, &[0.3, 0.4], &[1.5, -2.0]).unwrap();
    assert_eq!(v[0][t.position(&[0, 0, 1, 1]).unwrap()], 1.0);
    assert_eq!(t.entry(0, &[0, 0, 1, 1]).unwrap().to_string(), "1");
    assert_eq!(t.entry(0, &[0, 0, 0, 0]).unwrap().to_string(), "y1*y2");

    let t = partial_table(&parse("y1^2+y2^2", 2).unwrap(), 2, 3).unwrap();
    let v = t.evaluate(3, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
    for (m, val) in t.indices().iter().zip(&v[0]) {
        if m.iter().map(|&c| c as usize).sum::<usize>() == 3 {
            assert_eq!(*val, 0.0);
        }
    }
}

/// Central differences of `f` along `dir`, Richardson-extrapolated.
fn richardson(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[test]
fn randers_table_matches_finite_differences() {
    let e = parse("0.5*(sqrt(y1^2+y2^2) + 0.3*sin(x2)*y1)^2", 2).unwrap();
    let t = partial_table(&e, 2, 5).unwrap();
    let (x, y) = ([0.2, 0.7], [1.1, -0.6]);
    let vals = t.evaluate(5, &x, &y).unwrap();
    // Each entry of order k ≥ 1 against an FD of the matching order-(k-1) entry.
    for (i, m) in t.indices().iter().enumerate().skip(1) {
        let last = m.iter().rposition(|&c| c > 0).unwrap();
        let mut parent = m.clone();
        parent[last] -= 1;
        let pi = t.position(&parent).unwrap();
        let f = |s: f64| {
            let (mut xs, mut ys) = (x, y);
            if last < 2 {
                xs[last] += s;
            } else {
                ys[last - 2] += s;
            }
            t.evaluate(4, &xs, &ys).unwrap()[0][pi]
        };
        let fd = richardson(&f, 1e-3);
        let exact = vals[0][i];
        assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{m:?}: {fd} vs {exact}");
    }
}

#[test]
fn node_cap_is_enforced() {
    let e = parse("exp(sin(x1*y1)/(1+y2^2))", 2).unwrap();
    let r = exprlang::PartialTable::build(&[e], &[Var::x(0), Var::y(0), Var::y(1)], 6, 200);
    assert!(matches!(r, Err(exprlang::TableError::NodeCap { cap: 200, .. })));
}

// Random expressions in x1, x2, y1, y2 whose domains are the whole plane.
fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        Just("y1".to_string()),
        Just("y2".to_string()),
        (1u32..5).prop_map(|k| format!("{k}")),
        Just("0.5".to_string()),
        Just("pi".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})/(2 + sin({b}))")),
            (inner.clone(), 2u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("(1 + ({a})^2)^0.25")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("log(2 + cos({a}))")),
            inner.clone().prop_map(|a| format!("tan(0.5*sin({a}))")),
            inner.clone().prop_map(|a| format!("atan({a})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("(2 + sin({a}))^(cos({b}))")),
        ]
    })
}

const VARS: [Var; 4] = [Var { kind: exprlang::VarKind::X, index: 0 }, Var { kind: exprlang::VarKind::X, index: 1 }, Var { kind: exprlang::VarKind::Y, index: 0 }, Var { kind: exprlang::VarKind::Y, index: 1 }];

fn point() -> impl Strategy<Value = ([f64; 2], [f64; 2])> {
    ([-1.0..1.0f64, -1.0..1.0f64], [-1.0..1.0f64, -1.0..1.0f64])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(src in arb_expr()) {
        let e = parse(&src, 2).unwrap();
        let printed = e.to_string();
        prop_assert_eq!(parse(&printed, 2).unwrap(), e);
        // Exported derivative trees round-trip too.
        let d = differentiate(&parse(&src, 2).unwrap(), Var::y(0));
        prop_assert_eq!(parse(&d.to_string(), 2).unwrap(), d);
    }

    #[test]
    fn clairaut_symmetry(src in arb_expr(), u in 0usize..4, v in 0usize..4, (x, y) in point()) {
        let e = parse(&src, 2).unwrap();
        let mut g = Graph::new();
        let r = g.import(&e);
        let (du, dv) = (g.diff(r, VARS[u]), g.diff(r, VARS[v]));
        let (uv, vu) = (g.diff(du, VARS[v]), g.diff(dv, VARS[u]));
        prop_assert_eq!(uv, vu);
        let a = evaluate(&g.export(uv), &x, &y);
        let b = evaluate(&g.export(vu), &x, &y);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn derivative_matches_finite_differences(src in arb_expr(), v in 0usize..4, (x, y) in point()) {
        let e = parse(&src, 2).unwrap();
        let d = differentiate(&e, VARS[v]);
        let f = |s: f64| {
            let (mut xs, mut ys) = (x, y);
            if v < 2 { xs[v] += s } else { ys[v - 2] += s }
            evaluate(&e, &xs, &ys).unwrap()
        };
        let fd = richardson(&f, 1e-5);
        let exact = evaluate(&d, &x, &y).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "{} vs {}", fd, exact);
    }

    #[test]
    fn graph_evaluation_agrees_with_tree(src in arb_expr(), (x, y) in point()) {
        let e = parse(&src, 2).unwrap();
        let t = exprlang::PartialTable::build(std::slice::from_ref(&e), &VARS, 0, 1 << 20).unwrap();
        let a = t.evaluate(0, &x, &y).unwrap()[0][0];
        let b = evaluate(&e, &x, &y).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn every_function_differentiates() {
    for f in Func::ALL {
        let e = parse(&format!("{}(0.5 + 0.25*y1)", f.name()), 1).unwrap();
        let d = differentiate(&e, Var::y(0));
        let fd = richardson(&|s| evaluate(&e, &[], &[0.3 + s]).unwrap(), 1e-5);
        let exact = evaluate(&d, &[], &[0.3]).unwrap();
        assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{}", f.name());
    }
}

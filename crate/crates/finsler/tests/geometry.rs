#![allow(clippy::needless_range_loop)]

//! Manifests, sampling, the metric and the canonical spray.

use exprlang::{evaluate, parse};
use finsler::manifold::{validate_finsler, validate_spray};
use finsler::spraycore::{metric_at, spray_coefficients, Engine, EngineOptions};
use finsler::{gallery, load_manifest, sample_points, Error, GeometrySpec, Kind, TangentPoint};
use proptest::prelude::*;

fn manifest(geometry: &str, domain: &str) -> String {
    format!("[geometry]\n{geometry}\n\n[domain]\n{domain}\n")
}

const BOX: &str = "x1 = [-1.0, 1.0]\nx2 = [-1.0, 1.0]\ny_annulus = [0.5, 2.0]";

fn pt(x: [f64; 2], y: [f64; 2]) -> TangentPoint {
    TangentPoint::new(x.to_vec(), y.to_vec())
}

#[test]
fn gallery_loads_and_validates() {
    for name in gallery::names() {
        let spec = gallery::load(name);
        let samples = sample_points(&spec, 20, 3).unwrap();
        let rep = match spec.kind() {
            Kind::Finsler => validate_finsler(&spec, &samples, 1e-9).unwrap(),
            Kind::Spray => validate_spray(&spec, &samples, 1e-9).unwrap(),
        };
        assert!(rep.pass(), "{name}: {:?}", rep.checks);
    }
}

#[test]
fn degenerate_finsler_function_fails_nondegeneracy() {
    let spec = load_manifest(&manifest("name = \"bad\"\ndim = 2\nkind = \"finsler\"\nF = \"y1\"", BOX)).unwrap();
    let rep = validate_finsler(&spec, &sample_points(&spec, 10, 1).unwrap(), 1e-9).unwrap();
    assert!(!rep.pass());
    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    assert!(failed.contains(&"F3-NONDEGENERATE"), "{failed:?}");
}

#[test]
fn manifest_errors_are_specific() {
    let syntax = load_manifest("[geometry]\nname = \n").unwrap_err();
    assert!(matches!(syntax, Error::ManifestSyntax { line: 2, .. }), "{syntax}");

    let missing = load_manifest("[geometry]\nname = \"a\"\ndim = 2\nkind = \"finsler\"\nF = \"y1\"\n").unwrap_err();
    assert!(matches!(missing, Error::MissingField(_)), "{missing}");

    let dim = load_manifest(&manifest("name = \"a\"\ndim = 1\nkind = \"finsler\"\nF = \"y1\"", "x1 = [0.0, 1.0]\ny_annulus = [0.5, 2.0]")).unwrap_err();
    assert!(matches!(dim, Error::Dimension(1)), "{dim}");

    let expr = load_manifest(&manifest("name = \"a\"\ndim = 2\nkind = \"finsler\"\nF = \"sqrt(y1^2 + \"", BOX)).unwrap_err();
    assert!(matches!(expr, Error::Expr { .. }), "{expr}");
}

#[test]
fn metric_examples() {
    let (g, gi) = metric_at(&gallery::load("euclidean"), &pt([0.3, -0.2], [0.7, 1.1])).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let d = if i == j { 1.0 } else { 0.0 };
            assert!((g.get(&[i, j]) - d).abs() < 1e-14 && (gi.get(&[i, j]) - d).abs() < 1e-14);
        }
    }
    let (g, _) = metric_at(&gallery::load("poincare-half-plane"), &pt([0.0, 2.0], [2.0, 0.0])).unwrap();
    assert!((g.get(&[0, 0]) - 0.25).abs() < 1e-14 && (g.get(&[1, 1]) - 0.25).abs() < 1e-14 && g.get(&[0, 1]).abs() < 1e-14);
}

/// Second central differences of E = F²/2.
fn fd_hessian(spec: &GeometrySpec, p: &TangentPoint) -> [[f64; 2]; 2] {
    let f = spec.finsler_function().unwrap();
    let e = |y: [f64; 2]| 0.5 * evaluate(f, &p.x, &y).unwrap().powi(2);
    let h = 1e-4;
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let at = |si: f64, sj: f64| {
                let mut y = [p.y[0], p.y[1]];
                y[i] += si * h;
                y[j] += sj * h;
                e(y)
            };
            out[i][j] = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
        }
    }
    out
}

#[test]
fn randers_metric_matches_finite_difference_hessian() {
    let spec = gallery::load("randers-variable");
    for p in sample_points(&spec, 20, 5).unwrap() {
        let (g, gi) = metric_at(&spec, &p).unwrap();
        let fd = fd_hessian(&spec, &p);
        for i in 0..2 {
            for j in 0..2 {
                assert!((g.get(&[i, j]) - fd[i][j]).abs() < 1e-6, "g[{i}{j}] at {p}");
                let id: f64 = (0..2).map(|k| g.get(&[i, k]) * gi.get(&[k, j])).sum();
                assert!((id - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn x_independent_functions_have_zero_spray() {
    for name in ["euclidean", "minkowski-quartic"] {
        let spec = gallery::load(name);
        for p in sample_points(&spec, 10, 2).unwrap() {
            let g = spray_coefficients(&spec, &p).unwrap();
            assert!(g.max_abs() < 1e-14, "{name}: {:?}", g.data);
        }
    }
}

#[test]
fn funk_spray_is_proportional_to_y() {
    // the flat spray is G = 0, so Ḡ − P y = 0 forces Ḡ ∥ y
    let spec = gallery::load("funk-disk");
    for p in sample_points(&spec, 20, 4).unwrap() {
        let g = spray_coefficients(&spec, &p).unwrap();
        let ratio = g.get(&[0]) / p.y[0];
        assert!((g.get(&[1]) - ratio * p.y[1]).abs() < 1e-12, "at {p}");
        let f = evaluate(spec.finsler_function().unwrap(), &p.x, &p.y).unwrap();
        assert!((ratio - 0.5 * f).abs() < 1e-12, "factor {ratio} vs F/2 = {}", 0.5 * f);
    }
}

#[test]
fn connection_and_horizontal_partials() {
    let spec = gallery::load("randers-variable");
    let engine = Engine::new(&spec, EngineOptions::default()).unwrap();
    let f = spec.finsler_function().unwrap().clone();
    for p in sample_points(&spec, 15, 6).unwrap() {
        let fr = engine.frame(&p).unwrap();
        let g = spray_coefficients(&spec, &p).unwrap();
        let g1 = fr.spray_partials(0, 1).unwrap();
        let g2 = fr.spray_partials(0, 2).unwrap();
        for i in 0..2 {
            let tension: f64 = (0..2).map(|j| g1.get(&[i, j]) * p.y[j]).sum();
            assert!((tension - 2.0 * g.get(&[i])).abs() < 1e-12);
            assert!((g2.get(&[i, 0, 1]) - g2.get(&[i, 1, 0])).abs() < 1e-13);
        }
        assert!(fr.horizontal_partial(&f).unwrap().max_abs() < 1e-13, "F is not conserved at {p}");
    }
    let flat = gallery::load("flat-spray");
    let fr = Engine::new(&flat, EngineOptions::default()).unwrap().frame(&pt([0.1, 0.2], [1.0, 0.5])).unwrap();
    let d = fr.horizontal_partial(&parse("x1", 2).unwrap()).unwrap();
    assert_eq!(d.data, vec![1.0, 0.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn samples_stay_in_the_domain(seed in any::<u64>(), count in 1usize..40) {
        let spec = gallery::load("funk-disk");
        let pts = sample_points(&spec, count, seed).unwrap();
        prop_assert_eq!(pts.len(), count);
        let (lo, hi) = spec.domain.y_annulus;
        for p in &pts {
            prop_assert!(spec.domain.contains(&p.x));
            prop_assert!(p.y_norm() >= lo - 1e-12 && p.y_norm() <= hi + 1e-12);
        }
        prop_assert_eq!(pts, sample_points(&spec, count, seed).unwrap());
    }

    #[test]
    fn spray_is_two_homogeneous(x1 in -0.9f64..0.9, x2 in -0.9f64..0.9, a in -2.0f64..2.0, b in 0.3f64..2.0, lam in 0.05f64..20.0) {
        let spec = gallery::load("randers-variable");
        let engine = Engine::new(&spec, EngineOptions { g_order: 0, ..Default::default() }).unwrap();
        let g = engine.spray_values(&pt([x1, x2], [a, b])).unwrap();
        let gl = engine.spray_values(&pt([x1, x2], [lam * a, lam * b])).unwrap();
        for i in 0..2 {
            prop_assert!((gl[i] - lam * lam * g[i]).abs() <= 1e-12 * (1.0 + (lam * lam * g[i]).abs()));
        }
    }
}

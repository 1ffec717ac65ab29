//! The identity catalogue run over the gallery.

use std::collections::{BTreeMap, HashSet};

use finsler::identities::{catalogue, run_identity_suite, SuiteOptions};
use finsler::spraycore::EngineOptions;
use finsler::{gallery, sample_points, GeometrySpec};

fn run(spec: &GeometrySpec, samples: usize, seed: u64, opts: &SuiteOptions) -> finsler::report::ResidualReport {
    run_identity_suite(spec, &sample_points(spec, samples, seed).unwrap(), opts).unwrap()
}

#[test]
fn catalogue_ids_are_unique() {
    let ids: Vec<&str> = catalogue().iter().map(|i| i.id).collect();
    assert_eq!(ids.iter().collect::<HashSet<_>>().len(), ids.len());
}

#[test]
fn euclidean_residuals_vanish() {
    let rep = run(&gallery::load("euclidean"), 50, 1, &SuiteOptions::default());
    for e in &rep.entries {
        assert!(e.skipped.is_none() && e.error.is_none(), "{}", e.id);
        assert!(e.residual.unwrap() < 1e-12, "{}: {:?}", e.id, e.residual);
    }
}

#[test]
fn randers_passes_every_identity_for_two_seeds() {
    let spec = gallery::load("randers-variable");
    for seed in [1, 2] {
        let rep = run(&spec, 50, seed, &SuiteOptions::default());
        assert_eq!(rep.entries.len(), catalogue().len());
        for e in &rep.entries {
            assert!(e.pass && e.skipped.is_none() && !e.fd, "{}: {:?} {:?}", e.id, e.residual, e.error);
            assert!(e.residual.unwrap() < 1e-7);
        }
    }
}

#[test]
fn every_gallery_geometry_passes() {
    for name in gallery::names() {
        let rep = run(&gallery::load(name), 12, 4, &SuiteOptions::default());
        assert!(rep.pass(), "{name}: {:?}", rep.entries.iter().filter(|e| !e.pass).collect::<Vec<_>>());
    }
}

#[test]
fn fd_fallback_flags_deep_identities() {
    let opts = SuiteOptions { engine: EngineOptions { fd_fallback: true, ..Default::default() }, ..Default::default() };
    let rep = run(&gallery::load("randers-variable"), 10, 1, &opts);
    let flagged: Vec<&str> = rep.entries.iter().filter(|e| e.fd).map(|e| e.id.as_str()).collect();
    assert!(flagged.contains(&"BIANCHI-DIFF") && flagged.contains(&"STRETCH-H"), "{flagged:?}");
    assert!(!flagged.contains(&"HOM-F"));
    for e in &rep.entries {
        assert!(e.pass, "{}: {:?}", e.id, e.residual);
        assert_eq!(e.tolerance, if e.fd { opts.fd_tol } else { opts.tol }, "{}", e.id);
    }
}

#[test]
fn finsler_only_identities_are_skipped_for_sprays() {
    let rep = run(&gallery::load("flat-spray"), 5, 1, &SuiteOptions::default());
    for (e, id) in rep.entries.iter().zip(catalogue()) {
        assert_eq!(e.skipped.is_some(), id.finsler_only, "{}", e.id);
    }
}

#[test]
fn reports_are_deterministic_and_overrides_apply() {
    let spec = gallery::load("funk-disk");
    let mut overrides = BTreeMap::new();
    overrides.insert("B-HOM".to_string(), 0.0);
    let opts = SuiteOptions { overrides, ..Default::default() };
    let a = run(&spec, 8, 3, &opts);
    assert_eq!(a, run(&spec, 8, 3, &opts));
    let b_hom = a.get("B-HOM").unwrap();
    assert_eq!(b_hom.tolerance, 0.0);
    assert!(!b_hom.pass, "a zero tolerance cannot be met by roundoff");
}

#[test]
fn projection_trace_is_n_minus_one() {
    let rep = run(&gallery::load("sphere-stereographic"), 20, 5, &SuiteOptions::default());
    assert!(rep.get("PROJ-TRACE").unwrap().residual.unwrap() < 1e-14);
}

const RANDERS_3D: &str = r#"
[geometry]
name = "randers-3d"
dim = 3
kind = "finsler"
F = "sqrt(y1^2 + y2^2 + y3^2) + 0.2*sin(x2)*y1 + 0.1*x1*y3"

[domain]
x1 = [-1.0, 1.0]
x2 = [-1.0, 1.0]
x3 = [-1.0, 1.0]
y_annulus = [0.5, 2.0]
"#;

const HALF_SPACE: &str = r#"
[geometry]
name = "half-space"
dim = 3
kind = "finsler"
F = "sqrt(y1^2 + y2^2 + y3^2)/x3"

[domain]
x1 = [-1.0, 1.0]
x2 = [-1.0, 1.0]
x3 = [0.2, 2.0]
y_annulus = [0.5, 2.0]
"#;

#[test]
fn three_dimensional_randers_passes() {
    let spec = finsler::load_manifest(RANDERS_3D).unwrap();
    let rep = run(&spec, 10, 1, &SuiteOptions::default());
    for e in &rep.entries {
        assert!(e.error.is_none(), "{}: {:?}", e.id, e.error);
        if e.skipped.is_none() {
            assert!(e.pass, "{}: {:?}", e.id, e.residual);
        }
    }
    // not of scalar curvature: the isotropy-conditional identities must be skipped
    let skipped: Vec<&str> = rep.entries.iter().filter(|e| e.skipped.is_some()).map(|e| e.id.as_str()).collect();
    assert!(skipped.contains(&"ISO-FORM") && skipped.contains(&"W-ZERO-2D"), "{skipped:?}");
}

#[test]
fn hyperbolic_half_space_is_isotropic() {
    let spec = finsler::load_manifest(HALF_SPACE).unwrap();
    let rep = run(&spec, 10, 1, &SuiteOptions::default());
    for e in &rep.entries {
        assert!(e.error.is_none(), "{}: {:?}", e.id, e.error);
        if e.id != "W-ZERO-2D" {
            assert!(e.skipped.is_none() && e.pass, "{}: {:?} {:?}", e.id, e.residual, e.skipped);
        }
    }
    let c = finsler::classify::classify(&spec, &sample_points(&spec, 10, 1).unwrap(), &Default::default()).unwrap();
    assert!(c.isotropic.holds && c.constant_curvature.as_ref().unwrap().holds);
    assert!((c.scalar_curvature.unwrap().0 + 1.0).abs() < 1e-9);
}

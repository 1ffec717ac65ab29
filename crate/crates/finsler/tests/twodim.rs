use finsler::spraycore::EngineOptions;
use finsler::twodim::{berwald_frame, main_scalar, two_dim_report, CHECKS};
use finsler::{gallery, sample_points, Error, TangentPoint};

#[test]
fn frame_examples() {
    let f = berwald_frame(&gallery::load("euclidean"), &TangentPoint::new(vec![0.0, 0.0], vec![1.0, 0.0])).unwrap();
    assert_eq!((f.ell, f.m), ([1.0, 0.0], [0.0, 1.0]));
    // F = |y|/x2 = 1 here, and g = ¼·1
    let f = berwald_frame(&gallery::load("poincare-half-plane"), &TangentPoint::new(vec![0.0, 2.0], vec![2.0, 0.0])).unwrap();
    assert!((f.ell[0] - 2.0).abs() < 1e-14 && f.ell[1].abs() < 1e-14);
    assert!(f.m[0].abs() < 1e-14 && (f.m[1] - 2.0).abs() < 1e-14);
}

#[test]
fn main_scalar_separates_riemannian_from_randers() {
    let hp = gallery::load("poincare-half-plane");
    for p in sample_points(&hp, 10, 1).unwrap() {
        assert!(main_scalar(&hp, &p).unwrap().abs() < 1e-12);
    }
    let rd = gallery::load("randers-variable");
    let big = sample_points(&rd, 10, 1).unwrap().iter().map(|p| main_scalar(&rd, p).unwrap().abs()).fold(0.0, f64::max);
    assert!(big > 1e-3);
}

#[test]
fn every_2d_finsler_example_passes_all_checks() {
    for name in ["euclidean", "poincare-half-plane", "sphere-stereographic", "minkowski-quartic", "randers-variable", "funk-disk"] {
        let spec = gallery::load(name);
        let rep = two_dim_report(&spec, &sample_points(&spec, 50, 1).unwrap(), EngineOptions::default()).unwrap();
        assert_eq!(rep.entries.len(), CHECKS.len());
        for e in &rep.entries {
            assert!(e.pass, "{name} {}: {:?} {:?}", e.id, e.residual, e.skipped);
        }
        let kappa_over_f = rep.records.iter().map(|r| (r.kappa / r.f - r.gauss).abs()).fold(0.0, f64::max);
        assert!(kappa_over_f < 1e-12);
    }
}

#[test]
fn sprays_and_higher_dimensions_are_refused() {
    let spec = gallery::load("flat-spray");
    let p = TangentPoint::new(vec![0.0, 0.0], vec![1.0, 0.0]);
    assert!(matches!(berwald_frame(&spec, &p), Err(Error::NotFinsler(_))));
}

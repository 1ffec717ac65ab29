//! Jet arithmetic against closed-form derivatives.

use finsler::jet::{Jet, JetSpace};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_rule(a in -2.0f64..2.0, b in -2.0f64..2.0, v in 0usize..2) {
        let sp = JetSpace::new(2, 3);
        let (x, y) = (Jet::variable(&sp, 0, a), Jet::variable(&sp, 1, b));
        let f = &(&x * &x) * &y.add_const(1.0);
        let g = &y * &x.scale(3.0).add_const(-0.5);
        let lhs = (&f * &g).deriv(v);
        let rhs = &f.deriv(v) * &g + &f * &g.deriv(v);
        for (p, q) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((p - q).abs() < 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn powers_compose_and_match_calculus(a in 0.2f64..3.0, p in -2.5f64..2.5) {
        let sp = JetSpace::new(1, 4);
        let x = Jet::variable(&sp, 0, a);
        let back = x.powf(p).powf(1.0 / p.max(0.1));
        // d²/dx² x^p = p(p−1)x^(p−2)
        let d2 = x.powf(p).deriv(0).deriv(0).value();
        prop_assert!((d2 - p * (p - 1.0) * a.powf(p - 2.0)).abs() < 1e-10 * (1.0 + d2.abs()));
        if p >= 0.1 {
            prop_assert!((back.value() - a).abs() < 1e-12 * a);
            prop_assert!((back.deriv(0).value() - 1.0).abs() < 1e-10);
        }
    }
}

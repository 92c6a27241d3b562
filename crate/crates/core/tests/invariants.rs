use dnls::functionals::{energy, mass, momentum};
use dnls::gauge::{galilean_frame, gauge_transform};
use dnls::grid::make_grid;
use dnls::solitons::{phi_profile, validate_multi_config};
use dnls::SolitonParams;
use proptest::prelude::*;

fn admissible() -> impl Strategy<Value = (f64, f64)> {
    (0.5f64..2.5, -0.8f64..0.8).prop_map(|(w, s)| (w, s * 2.0 * w.sqrt()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_preserves_mass_and_composes((w, c) in admissible(), a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let g = make_grid(100.0, 2048).unwrap();
        let u = phi_profile(&SolitonParams::centered(w, c).unwrap(), &g).unwrap();
        let ua = gauge_transform(&u, a).unwrap();
        prop_assert!((mass(&ua) - mass(&u)).abs() < 1e-11);
        let uab = gauge_transform(&ua, b).unwrap();
        let direct = gauge_transform(&u, a + b).unwrap();
        prop_assert!((&uab - &direct).max_abs() < 1e-11);
    }

    #[test]
    fn conserved_functionals_are_translation_invariant((w, c) in admissible(), h in -5.0f64..5.0) {
        let g = make_grid(100.0, 2048).unwrap();
        let u = phi_profile(&SolitonParams::new(w, c, 0.3, 0.0).unwrap(), &g).unwrap();
        let v = u.translate(h);
        prop_assert!((energy(&u) - energy(&v)).abs() < 1e-10);
        prop_assert!((mass(&u) - mass(&v)).abs() < 1e-10);
        prop_assert!((momentum(&u) - momentum(&v)).abs() < 1e-10);
    }

    #[test]
    fn galilean_frame_preserves_mass((w, c) in admissible(), sigma in -1.5f64..1.5, t in 0.0f64..2.0) {
        let g = make_grid(100.0, 2048).unwrap();
        let u = phi_profile(&SolitonParams::centered(w, c).unwrap(), &g).unwrap();
        let v = galilean_frame(&u, sigma, 0.0, t).unwrap();
        prop_assert!((mass(&v) - mass(&u)).abs() < 1e-10);
        let expect = momentum(&u) + 0.5 * sigma * mass(&u);
        prop_assert!((momentum(&v) - expect).abs() < 1e-9);
    }

    #[test]
    fn accepted_configs_satisfy_speed_frequency_condition(
        w1 in 0.5f64..3.0, w2 in 0.5f64..3.0, s1 in -0.9f64..0.9, s2 in -0.9f64..0.9
    ) {
        let c1 = s1 * 2.0 * w1.sqrt();
        let c2 = s2 * 2.0 * w2.sqrt();
        let a = SolitonParams::new(w1, c1, 0.0, -20.0).unwrap();
        let b = SolitonParams::new(w2, c2, 0.0, 20.0).unwrap();
        if let Ok(cfg) = validate_multi_config(&[a, b], 30.0) {
            let sigma = cfg.sigmas[0];
            prop_assert!(c1 < sigma && sigma < c2 && sigma > 0.0);
            prop_assert!(cfg.omega_star > 0.0);
        } else {
            let sigma = 2.0 * (w2 - w1) / (c2 - c1);
            prop_assert!(!(c1 < c2 && c1 < sigma && sigma < c2 && sigma > 0.0));
        }
    }
}

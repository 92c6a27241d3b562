use dnls::functionals::{energy, mass, momentum, nehari};
use dnls::grid::make_grid;
use dnls::solitons::{closed_form_invariants, phi_profile, profile_residual};
use dnls::{GridSpec, SolitonParams};
use proptest::prelude::*;

const PAIRS: [(f64, f64); 5] = [(1.0, 0.0), (1.0, 1.0), (1.0, -1.0), (2.0, 1.0), (4.0, -2.0)];

fn grid() -> GridSpec {
    make_grid(80.0, 4096).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn quadrature_matches_closed_forms() {
    let g = grid();
    for &(w, c) in &PAIRS {
        let p = SolitonParams::centered(w, c).unwrap();
        let phi = phi_profile(&p, &g).unwrap();
        let cf = closed_form_invariants(w, c).unwrap();
        let quad = [
            phi.l2_sq(),
            phi.lp(4.0).unwrap().powi(4),
            phi.lp(6.0).unwrap().powi(6),
            phi.derivative().l2_sq(),
            mass(&phi),
            momentum(&phi),
            energy(&phi),
        ];
        let exact = [
            cf.l2sq,
            cf.l4,
            cf.l6,
            cf.grad_l2sq,
            cf.mass,
            cf.momentum,
            cf.energy,
        ];
        for (k, (q, e)) in quad.iter().zip(&exact).enumerate() {
            assert!(
                (q - e).abs() < 1e-7 * e.abs().max(1.0),
                "({w},{c}) item {k}: {q} vs {e}"
            );
        }
    }
}

#[test]
fn parameter_derivatives_match_quadrature() {
    let g = grid();
    let h = 1e-4;
    for &(w, c) in &PAIRS {
        let at = |w: f64, c: f64| {
            let phi = phi_profile(&SolitonParams::centered(w, c).unwrap(), &g).unwrap();
            (mass(&phi), momentum(&phi))
        };
        let (mwp, pwp) = at(w + h, c);
        let (mwm, pwm) = at(w - h, c);
        let (mcp, pcp) = at(w, c + h);
        let (mcm, pcm) = at(w, c - h);
        let cf = closed_form_invariants(w, c).unwrap();
        let fd = [
            (mwp - mwm) / (2.0 * h),
            (mcp - mcm) / (2.0 * h),
            (pwp - pwm) / (2.0 * h),
            (pcp - pcm) / (2.0 * h),
        ];
        let exact = [cf.dmass_domega, cf.dmass_dc, cf.dmom_domega, cf.dmom_dc];
        for (k, (q, e)) in fd.iter().zip(&exact).enumerate() {
            assert!(
                (q - e).abs() < 1e-4 * e.abs().max(1.0),
                "({w},{c}) derivative {k}: {q} vs {e}"
            );
        }
        // the mixed derivatives coincide
        assert!((cf.dmass_dc - cf.dmom_domega).abs() < 1e-14);
    }
}

#[test]
fn profiles_solve_the_profile_equation() {
    let g = grid();
    for &(w, c) in &PAIRS {
        let p = SolitonParams::centered(w, c).unwrap();
        let r = profile_residual(&p, &g).unwrap();
        assert!(r < 1e-8, "({w},{c}) residual {r}");
        let phi = phi_profile(&p, &g).unwrap();
        let i = nehari(&phi, w, c);
        assert!(
            i.direct.abs() < 1e-7 && i.sum_of_squares.abs() < 1e-7,
            "({w},{c}) {i:?}"
        );
    }
}

fn admissible() -> impl Strategy<Value = (f64, f64)> {
    (0.5f64..3.0, -0.9f64..0.9).prop_map(|(w, s)| (w, s * 2.0 * w.sqrt()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn closed_form_mass_is_quadrature_mass((w, c) in admissible()) {
        let p = SolitonParams::centered(w, c).unwrap();
        let g = make_grid(160.0, 8192).unwrap();
        let phi = phi_profile(&p, &g).unwrap();
        let cf = closed_form_invariants(w, c).unwrap();
        prop_assert!(rel(mass(&phi), cf.mass) < 1e-8);
        prop_assert!(rel(momentum(&phi), cf.momentum) < 1e-8);
    }

    #[test]
    fn modulus_is_even((w, c) in admissible(), x in 0.0f64..5.0) {
        let a = dnls::solitons::profile_value(w, c, x).norm();
        let b = dnls::solitons::profile_value(w, c, -x).norm();
        prop_assert!((a - b).abs() <= 1e-14 * a.max(1.0));
    }

    #[test]
    fn momentum_is_positive_energy_has_sign_of_minus_c((w, c) in admissible()) {
        let cf = closed_form_invariants(w, c).unwrap();
        prop_assert!(cf.momentum > 0.0);
        prop_assert!(cf.energy * c <= 0.0);
        prop_assert!(cf.mass > 0.0);
    }
}

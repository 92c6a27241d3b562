//! Gauge transformations, the L²-critical scaling and the Galilean frame
//! change.
//!
//! `β = -1/2` maps the Chen–Liu–Lee form to the Kaup–Newell form,
//! `β = 1/4` and `β = 1/2` give the other two classical forms.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{CumulativeRule, Field, GridSpec, BOUNDARY_TOLERANCE};

/// `exp(iβ ∫_{-∞}^x |u|²) u`, with the left box edge as `-∞`.
pub fn gauge_transform(u: &Field, beta: f64) -> Result<Field> {
    let g = u.grid();
    let run = g.cumulative_integral(&u.abs_sq(), CumulativeRule::Spectral)?;
    if run.boundary_exceeded {
        return Err(Error::BoundaryDecay {
            value: u.edge_abs(),
            tolerance: BOUNDARY_TOLERANCE,
        });
    }
    let values = u
        .values()
        .iter()
        .zip(&run.values)
        .map(|(&v, &s)| v * Complex64::from_polar(1.0, beta * s))
        .collect();
    Ok(Field::from_values_unchecked(*g, values))
}

/// `λ^{-1/2} u(x/λ)` on the grid stretched by `λ`. Sample `m` of the result
/// sits at `λ x_m`, so no interpolation is needed.
pub fn scaling_transform(u: &Field, lambda: f64) -> Result<Field> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Parameter(format!(
            "scaling factor must be positive, got {lambda}"
        )));
    }
    let g = u.grid();
    let scaled = GridSpec::with_offset(lambda * g.length(), g.n(), lambda * g.x0())?;
    let s = lambda.powf(-0.5);
    Ok(Field::from_values_unchecked(
        scaled,
        u.values().iter().map(|v| v * s).collect(),
    ))
}

/// Produces `v` from `u` where
/// `u(x) = e^{iσ/2 (x - x_ref - σt/2)} v(x - x_ref - σt)`.
pub fn galilean_frame(u: &Field, sigma: f64, x_ref: f64, t: f64) -> Result<Field> {
    let shift = x_ref + sigma * t;
    let g = *u.grid();
    // sample at x + shift, i.e. translate by -shift
    let moved = u.translate(-shift);
    moved.check_decay(BOUNDARY_TOLERANCE)?;
    let values = moved
        .values()
        .iter()
        .enumerate()
        .map(|(m, &w)| {
            let xp = g.node(m) + shift;
            w * Complex64::from_polar(1.0, -0.5 * sigma * (xp - x_ref - 0.5 * sigma * t))
        })
        .collect();
    Ok(Field::from_values_unchecked(g, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{mass, momentum};
    use crate::grid::make_grid;
    use crate::solitons::{phi_profile, SolitonParams};

    fn soliton(w: f64, c: f64, x0: f64) -> Field {
        phi_profile(
            &SolitonParams::new(w, c, 0.4, x0).unwrap(),
            &make_grid(80.0, 4096).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_gauge_is_identity() {
        let u = soliton(1.0, 1.0, 0.0);
        assert_eq!(gauge_transform(&u, 0.0).unwrap(), u);
    }

    #[test]
    fn gauge_round_trip_and_modulus() {
        let u = soliton(1.0, 0.5, -2.0);
        let v = gauge_transform(&u, 0.37).unwrap();
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * a.norm().max(1.0));
        }
        let back = gauge_transform(&v, -0.37).unwrap();
        assert!((&back - &u).max_abs() < 1e-12);
        assert!((mass(&v) - mass(&u)).abs() < 1e-12);
    }

    #[test]
    fn gauge_phases_add() {
        let u = soliton(2.0, 1.0, 1.0);
        let a = gauge_transform(&gauge_transform(&u, 0.25).unwrap(), -0.5).unwrap();
        let b = gauge_transform(&u, -0.25).unwrap();
        assert!((&a - &b).max_abs() < 1e-12);
    }

    #[test]
    fn gauge_rejects_undecayed_fields() {
        let g = make_grid(10.0, 64).unwrap();
        let u = Field::from_fn(g, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            gauge_transform(&u, 0.5),
            Err(Error::BoundaryDecay { .. })
        ));
    }

    #[test]
    fn scaling_properties() {
        let u = soliton(1.0, 1.0, 0.0);
        assert_eq!(scaling_transform(&u, 1.0).unwrap(), u);
        let v = scaling_transform(&u, 2.0).unwrap();
        assert_eq!(v.grid().length(), 160.0);
        assert!((mass(&v) - mass(&u)).abs() < 1e-12);
        let ratio = v.derivative().l2_sq() / u.derivative().l2_sq();
        assert!((ratio - 0.25).abs() < 1e-10);
        assert!(scaling_transform(&u, 0.0).is_err());
    }

    #[test]
    fn galilean_identity_and_norms() {
        let u = soliton(1.0, 0.5, 0.0);
        let same = galilean_frame(&u, 0.0, 0.0, 0.0).unwrap();
        assert!((&same - &u).max_abs() < 1e-13);
        let v = galilean_frame(&u, 1.3, 2.0, 0.5).unwrap();
        assert!((v.l2() - u.l2()).abs() < 1e-12);
        let expect = momentum(&u) + 0.5 * 1.3 * mass(&u);
        assert!((momentum(&v) - expect).abs() < 1e-10);
    }

    #[test]
    fn galilean_modulus_is_translated() {
        let u = soliton(1.0, 0.0, 3.0);
        let v = galilean_frame(&u, 2.0, 1.0, 0.5).unwrap();
        // |v(x)| = |u(x + 2)|, so the peak moves from 3 to 1
        let g = v.grid();
        let peak = (0..g.n())
            .max_by(|&a, &b| v.values()[a].norm().total_cmp(&v.values()[b].norm()))
            .unwrap();
        assert!((g.node(peak) - 1.0).abs() < g.dx());
    }
}

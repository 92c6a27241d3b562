//! Initial perturbations normalized to a prescribed `H¹` size.

use dnls::{Complex64, Field, GridSpec, MultiSolitonConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PerturbationKind;

/// Largest wavenumber carried by `random_smooth` noise.
pub const RANDOM_SMOOTH_KMAX: f64 = 2.0;

/// Where the Gaussian bump sits: midway between the first two solitons, or
/// on the soliton when there is only one.
pub fn bump_center(multi: &MultiSolitonConfig) -> f64 {
    match multi.solitons.as_slice() {
        [a, b, ..] => 0.5 * (a.x0 + b.x0),
        [a] => a.x0,
        [] => 0.0,
    }
}

fn normalized(f: Field, size: f64) -> Field {
    let h1 = f.h1();
    if h1 == 0.0 {
        return f;
    }
    &f * (size / h1)
}

pub fn gaussian_bump(g: &GridSpec, center: f64, size: f64) -> Field {
    let f = Field::from_fn(*g, |x| Complex64::new((-(x - center).powi(2)).exp(), 0.0))
        .expect("finite samples");
    normalized(f, size)
}

/// Complex noise on the Fourier modes with `|k| ≤ 2`.
pub fn random_smooth(g: &GridSpec, seed: u64, size: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<Complex64> = g
        .wavenumbers()
        .iter()
        .map(|&k| {
            if k.abs() <= RANDOM_SMOOTH_KMAX {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let f = Field::from_spectrum(*g, coeffs).expect("band-limited noise");
    normalized(f, size)
}

/// The perturbation for `kind`, or `None` when nothing is added.
pub fn build(
    kind: PerturbationKind,
    size: f64,
    seed: u64,
    multi: &MultiSolitonConfig,
    g: &GridSpec,
) -> Option<Field> {
    if size == 0.0 {
        return None;
    }
    match kind {
        PerturbationKind::None => None,
        PerturbationKind::GaussianBump => Some(gaussian_bump(g, bump_center(multi), size)),
        PerturbationKind::RandomSmooth => Some(random_smooth(g, seed, size)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dnls::grid::make_grid;
    use dnls::solitons::validate_multi_config;
    use dnls::SolitonParams;

    #[test]
    fn sizes_and_support() {
        let g = make_grid(100.0, 1024).unwrap();
        let b = gaussian_bump(&g, 3.0, 1e-3);
        assert!((b.h1() - 1e-3).abs() < 1e-15);
        let peak = (0..g.n())
            .max_by(|&i, &j| b.values()[i].norm().total_cmp(&b.values()[j].norm()))
            .unwrap();
        assert!((g.node(peak) - 3.0).abs() <= g.dx());

        let r = random_smooth(&g, 7, 1e-3);
        assert!((r.h1() - 1e-3).abs() < 1e-15);
        let spec = r.spectrum();
        for (c, k) in spec.iter().zip(g.wavenumbers()) {
            if k.abs() > RANDOM_SMOOTH_KMAX {
                assert!(c.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let g = make_grid(50.0, 512).unwrap();
        assert_eq!(
            random_smooth(&g, 1, 1.0).values(),
            random_smooth(&g, 1, 1.0).values()
        );
        assert_ne!(
            random_smooth(&g, 1, 1.0).values(),
            random_smooth(&g, 2, 1.0).values()
        );
    }

    #[test]
    fn bump_between_first_pair() {
        let s = [
            SolitonParams::new(2.0, 2.0, 0.0, -70.0).unwrap(),
            SolitonParams::new(5.0, 4.0, 0.0, -30.0).unwrap(),
        ];
        let m = validate_multi_config(&s, 40.0).unwrap();
        assert_eq!(bump_center(&m), -50.0);
        let g = make_grid(200.0, 1024).unwrap();
        assert!(build(PerturbationKind::GaussianBump, 0.0, 0, &m, &g).is_none());
        assert!(build(PerturbationKind::None, 1.0, 0, &m, &g).is_none());
    }
}

//! Conserved quantities, the action and its relatives, smooth cut-offs and
//! the localized functionals built on them.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

/// `Im ∫ w a conj(b)`.
fn im_integral(a: &Field, b: &Field, w: Option<&[f64]>) -> f64 {
    let dx = a.grid().dx();
    let s: f64 = match w {
        None => a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x * y.conj()).im)
            .sum(),
        Some(w) => a
            .values()
            .iter()
            .zip(b.values())
            .zip(w)
            .map(|((x, y), wi)| (x * y.conj()).im * wi)
            .sum(),
    };
    dx * s
}

fn l4_4(u: &Field) -> f64 {
    u.grid().dx() * u.values().iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>()
}

fn l6_6(u: &Field) -> f64 {
    u.grid().dx() * u.values().iter().map(|v| v.norm_sqr().powi(3)).sum::<f64>()
}

/// `Im ∫ |u|² conj(u) u_x`.
fn cubic_term(u: &Field, ux: &Field) -> f64 {
    let dx = u.grid().dx();
    dx * u
        .values()
        .iter()
        .zip(ux.values())
        .map(|(v, d)| v.norm_sqr() * (v.conj() * d).im)
        .sum::<f64>()
}

pub fn energy(u: &Field) -> f64 {
    let ux = u.derivative();
    0.5 * ux.l2_sq() + 0.25 * cubic_term(u, &ux)
}

pub fn mass(u: &Field) -> f64 {
    0.5 * u.l2_sq()
}

pub fn momentum(u: &Field) -> f64 {
    0.5 * im_integral(u, &u.derivative(), None)
}

/// `S = E + ωM + cP`.
pub fn action(u: &Field, omega: f64, c: f64) -> f64 {
    energy(u) + omega * mass(u) + c * momentum(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NehariValue {
    pub direct: f64,
    pub sum_of_squares: f64,
}

/// The Nehari functional in its defining form and as a completed square.
pub fn nehari(u: &Field, omega: f64, c: f64) -> NehariValue {
    let ux = u.derivative();
    let l2 = u.l2_sq();
    let direct = ux.l2_sq() + cubic_term(u, &ux) + omega * l2 + c * im_integral(u, &ux, None);
    let i = Complex64::new(0.0, 1.0);
    let sq: Vec<Complex64> = u
        .values()
        .iter()
        .zip(ux.values())
        .map(|(&v, &d)| d - i * (0.5 * c) * v + i * (0.5 * v.norm_sqr()) * v)
        .collect();
    let sq = Field::from_values_unchecked(*u.grid(), sq);
    let sum_of_squares =
        sq.l2_sq() + (omega - 0.25 * c * c) * l2 + 0.5 * c * l4_4(u) - 0.25 * l6_6(u);
    NehariValue {
        direct,
        sum_of_squares,
    }
}

/// `L = ‖u_x‖² + ω‖u‖² + c Im ∫ u conj(u_x)`.
pub fn lquad(u: &Field, omega: f64, c: f64) -> f64 {
    let ux = u.derivative();
    ux.l2_sq() + omega * u.l2_sq() + c * im_integral(u, &ux, None)
}

/// `‖u_x - icu/2‖² + (ω - c²/4)‖u‖²`, equal to [`lquad`].
pub fn lquad_completed_square(u: &Field, omega: f64, c: f64) -> f64 {
    let shifted = &u.derivative() - &(u * Complex64::new(0.0, 0.5 * c));
    shifted.l2_sq() + (omega - 0.25 * c * c) * u.l2_sq()
}

/// `Q = M + μP`.
pub fn q_charge(u: &Field, mu: f64) -> f64 {
    mass(u) + mu * momentum(u)
}

/// Quadratic form of the second variation of the action at `phi`,
/// written term by term.
pub fn hessian_form(eps: &Field, phi: &Field, omega: f64, c: f64) -> f64 {
    let ex = eps.derivative();
    let px = phi.derivative();
    let dx = eps.grid().dx();
    let mut potential = 0.0;
    let mut cross = 0.0;
    for m in 0..eps.grid().n() {
        let (e, de, p, dp) = (
            eps.values()[m],
            ex.values()[m],
            phi.values()[m],
            px.values()[m],
        );
        potential += p.norm_sqr() * (e.conj() * de).im;
        cross += 2.0 * (p * e.conj()).re * (dp * e.conj()).im;
    }
    ex.l2_sq() + dx * (potential + cross) + omega * eps.l2_sq() + c * im_integral(eps, &ex, None)
}

const PSI_CELLS: usize = 4096;
const PSI_SUBSTEPS: usize = 32;

struct PsiTable {
    /// ψ at the nodes `-1 + 2m/PSI_CELLS`.
    values: Vec<f64>,
    norm: f64,
    constant: f64,
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_derivative(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - s * s;
        -2.0 * s / (d * d) * bump(s)
    }
}

fn psi_table() -> &'static PsiTable {
    static TABLE: OnceLock<PsiTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 2.0 / PSI_CELLS as f64;
        let mut acc = vec![0.0; PSI_CELLS + 1];
        // composite Simpson inside each cell
        let sub = h / PSI_SUBSTEPS as f64;
        for m in 0..PSI_CELLS {
            let a = -1.0 + m as f64 * h;
            let mut s = bump(a) + bump(a + h);
            for k in 1..PSI_SUBSTEPS {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * bump(a + k as f64 * sub);
            }
            acc[m + 1] = acc[m] + s * sub / 3.0;
        }
        let norm = acc[PSI_CELLS];
        let values: Vec<f64> = acc.iter().map(|v| v / norm).collect();
        let mut constant = 0.0f64;
        for (m, &p) in values.iter().enumerate().take(PSI_CELLS).skip(1) {
            let s = -1.0 + m as f64 * h;
            let d1 = bump(s) / norm;
            let d2 = bump_derivative(s) / norm;
            if p > 0.0 {
                constant = constant.max(d1 * d1 / p);
            }
            if d1 > 0.0 {
                constant = constant.max(d2 * d2 / d1);
            }
        }
        PsiTable {
            values,
            norm,
            constant,
        }
    })
}

/// The smooth step: 0 below -1, 1 above 1, the normalized integral of
/// `exp(-1/(1-s²))` in between.
pub fn psi(x: f64) -> f64 {
    if x <= -1.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let t = psi_table();
    let h = 2.0 / PSI_CELLS as f64;
    let pos = (x + 1.0) / h;
    let m = (pos.floor() as usize).min(PSI_CELLS - 1);
    let s = pos - m as f64;
    let (a, b) = (-1.0 + m as f64 * h, -1.0 + (m + 1) as f64 * h);
    let (f0, f1) = (t.values[m], t.values[m + 1]);
    let (d0, d1) = (bump(a) / t.norm * h, bump(b) / t.norm * h);
    // cubic Hermite basis
    let s2 = s * s;
    let s3 = s2 * s;
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * f0
        + (s3 - 2.0 * s2 + s) * d0
        + (-2.0 * s3 + 3.0 * s2) * f1
        + (s3 - s2) * d1;
    v.clamp(0.0, 1.0)
}

pub fn psi_prime(x: f64) -> f64 {
    bump(x) / psi_table().norm
}

pub fn psi_second(x: f64) -> f64 {
    bump_derivative(x) / psi_table().norm
}

/// Sampled bound `C_ψ` with `(ψ')² ≤ C_ψ ψ` and `(ψ'')² ≤ C_ψ ψ'`.
pub fn psi_constant() -> f64 {
    psi_table().constant
}

/// Moving cut-offs for `N` solitons, anchored by the fitted parameters at
/// time zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffSpec {
    pub omega0: Vec<f64>,
    pub c0: Vec<f64>,
    /// `x_j^σ` for `j = 2..N`.
    pub anchors: Vec<f64>,
    /// `σ̃_j` for `j = 2..N`.
    pub sigmas: Vec<f64>,
    pub a: f64,
    pub c_psi: f64,
}

impl CutoffSpec {
    pub fn new(omega0: &[f64], c0: &[f64], x0: &[f64], separation: f64) -> Result<Self> {
        let n = omega0.len();
        if n == 0 || c0.len() != n || x0.len() != n {
            return Err(Error::Parameter(
                "cut-off parameter lists must be non-empty and of equal length".into(),
            ));
        }
        let mut anchors = Vec::with_capacity(n - 1);
        let mut sigmas = Vec::with_capacity(n - 1);
        for j in 1..n {
            let dc = c0[j] - c0[j - 1];
            if dc == 0.0 {
                return Err(Error::Parameter(format!("equal speeds at index {j}")));
            }
            sigmas.push(2.0 * (omega0[j] - omega0[j - 1]) / dc);
            anchors.push(0.5 * (x0[j - 1] + x0[j]));
        }
        Ok(Self {
            omega0: omega0.to_vec(),
            c0: c0.to_vec(),
            anchors,
            sigmas,
            a: separation * separation / 64.0,
            c_psi: psi_constant(),
        })
    }

    pub fn len(&self) -> usize {
        self.omega0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega0.is_empty()
    }

    /// Samples of `ψ_j` (1-based `j ≥ 2`) moving with `speed`.
    fn sample_psi(&self, j: usize, speed: f64, t: f64, g: &GridSpec) -> Vec<f64> {
        let anchor = self.anchors[j - 2];
        let width = (t + self.a).sqrt();
        (0..g.n())
            .map(|m| psi((g.node(m) - anchor - speed * t) / width))
            .collect()
    }
}

/// `ψ_j` and `χ_j` at one time, stored for `j = 1..N` (index 0 is `j = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub psi: Vec<Vec<f64>>,
    pub chi: Vec<Vec<f64>>,
}

pub fn build_weights(cut: &CutoffSpec, t: f64, g: &GridSpec) -> Result<WeightSet> {
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("cut-offs need t >= 0, got {t}")));
    }
    let n = cut.len();
    let mut psi = vec![vec![1.0; g.n()]];
    for j in 2..=n {
        psi.push(cut.sample_psi(j, cut.sigmas[j - 2], t, g));
    }
    let chi = (0..n)
        .map(|j| match psi.get(j + 1) {
            Some(next) => psi[j].iter().zip(next).map(|(a, b)| a - b).collect(),
            None => psi[j].clone(),
        })
        .collect();
    Ok(WeightSet { psi, chi })
}

/// `½ Σ_j ∫ (ω_j |u|² + c_j Im(u conj(u_x))) χ_j`.
pub fn localized_i(u: &Field, w: &WeightSet, omega0: &[f64], c0: &[f64]) -> Result<f64> {
    if omega0.len() != w.chi.len() || c0.len() != w.chi.len() {
        return Err(Error::Parameter(
            "parameter count does not match the weight set".into(),
        ));
    }
    let ux = u.derivative();
    let mut total = 0.0;
    for (j, chi) in w.chi.iter().enumerate() {
        total += 0.5 * (omega0[j] * u.weighted_l2_sq(chi) + c0[j] * im_integral(u, &ux, Some(chi)));
    }
    Ok(total)
}

/// `½ ∫ (s/2 |u|² + Im(u conj(u_x))) ψ`, where `s` and the cut-off speed are
/// `σ̃_j`, or `τ` when overridden.
pub fn localized_ij(
    u: &Field,
    cut: &CutoffSpec,
    j: usize,
    t: f64,
    tau: Option<f64>,
) -> Result<f64> {
    if j < 2 || j > cut.len() {
        return Err(Error::Parameter(format!(
            "localized functional index {j} outside 2..={}",
            cut.len()
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("cut-offs need t >= 0, got {t}")));
    }
    let speed = match tau {
        Some(tau) => {
            let (lo, hi) = (cut.c0[j - 2], cut.c0[j - 1]);
            if !(lo < tau && tau < hi) {
                return Err(Error::TauWindow { tau, lo, hi });
            }
            tau
        }
        None => cut.sigmas[j - 2],
    };
    let w = cut.sample_psi(j, speed, t, u.grid());
    let ux = u.derivative();
    Ok(0.5 * (0.5 * speed * u.weighted_l2_sq(&w) + im_integral(u, &ux, Some(&w))))
}

/// The localized quadratic form around a sum of modulated profiles.
pub fn linearized_h_global(
    eps: &Field,
    profiles: &[Field],
    omega_t: &[f64],
    c_t: &[f64],
    w: &WeightSet,
) -> Result<f64> {
    let n = profiles.len();
    if omega_t.len() != n || c_t.len() != n || w.chi.len() != n {
        return Err(Error::Parameter(
            "profile, parameter and weight counts differ".into(),
        ));
    }
    let ex = eps.derivative();
    let dx = eps.grid().dx();
    let mut total = ex.l2_sq();
    for (j, r) in profiles.iter().enumerate() {
        if r.grid() != eps.grid() {
            return Err(Error::GridMismatch);
        }
        let rx = r.derivative();
        let mut s = 0.0;
        for m in 0..eps.grid().n() {
            let (e, de, p, dp) = (
                eps.values()[m],
                ex.values()[m],
                r.values()[m],
                rx.values()[m],
            );
            let ec = e.conj();
            s += (p.norm_sqr() * ec * de + p * dp * ec * ec + p.conj() * dp * e.norm_sqr()).im;
        }
        total += dx * s;
        total += omega_t[j] * eps.weighted_l2_sq(&w.chi[j])
            + c_t[j] * im_integral(eps, &ex, Some(&w.chi[j]));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::solitons::{closed_form_invariants, phi_profile, SolitonParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        make_grid(80.0, 4096).unwrap()
    }

    fn phi(w: f64, c: f64) -> Field {
        phi_profile(&SolitonParams::centered(w, c).unwrap(), &grid()).unwrap()
    }

    fn random_field(rng: &mut ChaCha8Rng, g: GridSpec) -> Field {
        let terms: Vec<(f64, f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(-10.0..10.0),
                    rng.gen_range(0.5..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        Field::from_fn(g, |x| {
            terms
                .iter()
                .map(|&(x0, w, k, a, b)| {
                    Complex64::new(a, b)
                        * (-(x - x0).powi(2) / w).exp()
                        * Complex64::from_polar(1.0, k * x)
                })
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn conserved_quantities_on_profiles() {
        let p = phi(1.0, 0.0);
        assert!(energy(&p).abs() < 1e-7);
        assert!((mass(&p) - PI).abs() < 1e-8);
        assert!((momentum(&p) - 2.0).abs() < 1e-8);
        let q = phi(1.0, 1.0);
        assert!((energy(&q) + 3f64.sqrt() / 2.0).abs() < 1e-7);
        assert!((momentum(&q) - 3f64.sqrt()).abs() < 1e-8);
        let z = Field::zeros(grid());
        assert_eq!(energy(&z), 0.0);
        assert_eq!(action(&z, 1.0, 1.0), 0.0);
        let real =
            Field::from_fn(grid(), |x| Complex64::new((-x * x).exp() * (1.0 + x), 0.0)).unwrap();
        assert!(momentum(&real).abs() < 1e-15);
    }

    #[test]
    fn action_values() {
        assert!((action(&phi(1.0, 0.0), 1.0, 0.0) - PI).abs() < 1e-7);
        let expect = -3f64.sqrt() / 2.0 + 4.0 * 3f64.sqrt().atan() + 3f64.sqrt();
        assert!((action(&phi(1.0, 1.0), 1.0, 1.0) - expect).abs() < 1e-6);
    }

    #[test]
    fn nehari_and_l_identities() {
        let p = phi(1.0, 0.0);
        let n = nehari(&p, 1.0, 0.0);
        assert!(n.direct.abs() < 1e-7 && n.sum_of_squares.abs() < 1e-7);
        assert!((lquad(&p, 1.0, 0.0) - 4.0 * PI).abs() < 1e-6);
        let z = Field::zeros(grid());
        assert_eq!(nehari(&z, 1.0, 0.5).direct, 0.0);
        assert_eq!(lquad(&z, 1.0, 0.5), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = random_field(&mut rng, grid());
            let (w, c) = (rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0));
            let n = nehari(&u, w, c);
            assert!((n.direct - n.sum_of_squares).abs() < 1e-9);
            let l = lquad(&u, w, c);
            assert!((action(&u, w, c) - 0.25 * n.direct - 0.25 * l).abs() < 1e-9);
            assert!((lquad_completed_square(&u, w, c) - l).abs() < 1e-9);
        }
    }

    #[test]
    fn cubic_term_equals_minus_l_on_profile() {
        let p = phi(1.0, 0.0);
        assert!((cubic_term(&p, &p.derivative()) + 4.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn q_charge_values() {
        let p = phi(1.0, 0.0);
        assert!((q_charge(&p, 1.0) - (PI + 2.0)).abs() < 1e-7);
        assert_eq!(q_charge(&p, 0.0), mass(&p));
    }

    #[test]
    fn q_charge_frequency_derivative() {
        // Derivative of Q(φ_{ω,0}, 1) at fixed c: ∂_ωM + ∂_ωP = 0 + 1.
        let h = 1e-4;
        let q = |w: f64| q_charge(&phi(w, 0.0), 1.0);
        let fixed_c = (q(1.0 + h) - q(1.0 - h)) / (2.0 * h);
        assert!((fixed_c - 1.0).abs() < 1e-4, "{fixed_c}");
        // Along the slaving line c = μ(ω - 1) the derivative is -⟨S''ψ,ψ⟩ = 2.
        let slaved = |w: f64| q_charge(&phi(w, w - 1.0), 1.0);
        let d = (slaved(1.0 + h) - slaved(1.0 - h)) / (2.0 * h);
        assert!((d - 2.0).abs() < 1e-4, "{d}");
    }

    #[test]
    fn psi_shape() {
        assert_eq!(psi(-1.0), 0.0);
        assert_eq!(psi(1.0), 1.0);
        assert!((psi(0.0) - 0.5).abs() < 1e-13);
        let mut prev = 0.0;
        for m in 1..2000 {
            let x = -1.0 + m as f64 * 1e-3;
            let v = psi(x);
            assert!(v >= prev);
            assert!((v + psi(-x) - 1.0).abs() < 1e-13);
            prev = v;
        }
        assert!(psi(0.5) > psi(0.4));
        let cpsi = psi_constant();
        assert!(cpsi.is_finite() && cpsi > 0.0);
        for m in 1..2000 {
            let x = -1.0 + m as f64 * 1e-3;
            let (p, d1, d2) = (psi(x), psi_prime(x), psi_second(x));
            // far in the left tail the interpolant loses relative accuracy
            if p < 1e-10 {
                continue;
            }
            assert!(d1 * d1 <= cpsi * p * (1.0 + 1e-6) + 1e-300);
            assert!(d2 * d2 <= cpsi * d1 * (1.0 + 1e-6) + 1e-300);
        }
    }

    #[test]
    fn psi_derivative_matches_interpolant() {
        let h = 1e-5;
        for &x in &[-0.9, -0.3, 0.0, 0.25, 0.8] {
            let fd = (psi(x + h) - psi(x - h)) / (2.0 * h);
            assert!((fd - psi_prime(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn weights_partition_unity() {
        let g = make_grid(200.0, 2048).unwrap();
        let cut = CutoffSpec::new(
            &[1.0, 2.0, 5.0],
            &[0.0, 2.0, 4.0],
            &[-50.0, 0.0, 50.0],
            40.0,
        )
        .unwrap();
        for &t in &[0.0, 3.0] {
            let w = build_weights(&cut, t, &g).unwrap();
            for m in 0..g.n() {
                let s: f64 = w.chi.iter().map(|c| c[m]).sum();
                assert_eq!(s, 1.0);
                for p in &w.psi {
                    assert!((0.0..=1.0).contains(&p[m]));
                }
            }
        }
        let w = build_weights(&cut, 0.0, &g).unwrap();
        let root_a = cut.a.sqrt();
        for m in 0..g.n() {
            let x = g.node(m);
            if x >= cut.anchors[0] + root_a {
                assert_eq!(w.psi[1][m], 1.0);
            }
            if x <= cut.anchors[0] - root_a {
                assert_eq!(w.psi[1][m], 0.0);
            }
        }
        assert!(build_weights(&cut, -1.0, &g).is_err());
    }

    #[test]
    fn localized_functional_reductions() {
        let g = make_grid(200.0, 8192).unwrap();
        let one = CutoffSpec::new(&[1.0], &[0.5], &[0.0], 40.0).unwrap();
        let u = phi_profile(&SolitonParams::new(1.0, 0.5, 0.1, 3.0).unwrap(), &g).unwrap();
        let w = build_weights(&one, 2.0, &g).unwrap();
        let val = localized_i(&u, &w, &[1.0], &[0.5]).unwrap();
        assert!((val - (mass(&u) + 0.5 * momentum(&u))).abs() < 1e-12);

        let p1 = SolitonParams::new(2.0, 2.0, 0.0, -30.0).unwrap();
        let p2 = SolitonParams::new(5.0, 4.0, 0.0, 10.0).unwrap();
        let u = &phi_profile(&p1, &g).unwrap() + &phi_profile(&p2, &g).unwrap();
        let cut = CutoffSpec::new(&[2.0, 5.0], &[2.0, 4.0], &[-30.0, 10.0], 40.0).unwrap();
        for &t in &[0.0, 1.5] {
            let w = build_weights(&cut, t, &g).unwrap();
            let total = localized_i(&u, &w, &cut.omega0, &cut.c0).unwrap();
            let i2 = localized_ij(&u, &cut, 2, t, None).unwrap();
            let decomposed = 2.0 * mass(&u) + 2.0 * momentum(&u) + (4.0 - 2.0) * i2;
            assert!((total - decomposed).abs() < 1e-10, "{total} {decomposed}");
        }
        let w = build_weights(&cut, 0.0, &g).unwrap();
        let total = localized_i(&u, &w, &cut.omega0, &cut.c0).unwrap();
        let f1 = closed_form_invariants(2.0, 2.0).unwrap();
        let f2 = closed_form_invariants(5.0, 4.0).unwrap();
        let expect = 2.0 * f1.mass + 2.0 * f1.momentum + 5.0 * f2.mass + 4.0 * f2.momentum;
        assert!((total - expect).abs() < 1e-6, "{total} {expect}");
    }

    #[test]
    fn localized_ij_edge_cases() {
        let g = make_grid(200.0, 2048).unwrap();
        let cut = CutoffSpec::new(&[2.0, 5.0], &[2.0, 4.0], &[-30.0, 10.0], 40.0).unwrap();
        assert_eq!(
            localized_ij(&Field::zeros(g), &cut, 2, 0.0, None).unwrap(),
            0.0
        );
        let left = phi_profile(&SolitonParams::new(2.0, 2.0, 0.0, -50.0).unwrap(), &g).unwrap();
        assert!(localized_ij(&left, &cut, 2, 0.0, None).unwrap().abs() < 1e-12);
        assert!(localized_ij(&left, &cut, 2, 0.0, Some(3.5)).is_ok());
        assert!(matches!(
            localized_ij(&left, &cut, 2, 0.0, Some(4.5)),
            Err(Error::TauWindow { .. })
        ));
        assert!(localized_ij(&left, &cut, 1, 0.0, None).is_err());
    }

    #[test]
    fn global_form_reduces_to_single_form() {
        let g = grid();
        let p = SolitonParams::centered(1.0, 0.6).unwrap();
        let r = phi_profile(&p, &g).unwrap();
        let cut = CutoffSpec::new(&[1.0], &[0.6], &[0.0], 40.0).unwrap();
        let w = build_weights(&cut, 0.0, &g).unwrap();
        assert_eq!(
            linearized_h_global(
                &Field::zeros(g),
                std::slice::from_ref(&r),
                &[1.0],
                &[0.6],
                &w
            )
            .unwrap(),
            0.0
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let e = random_field(&mut rng, g);
            let a = linearized_h_global(&e, std::slice::from_ref(&r), &[1.0], &[0.6], &w).unwrap();
            let b = hessian_form(&e, &r, 1.0, 0.6);
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn translation_invariance() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_field(&mut rng, g);
        let v = u.translate(1.7);
        assert!((energy(&u) - energy(&v)).abs() < 1e-10);
        assert!((mass(&u) - mass(&v)).abs() < 1e-10);
        assert!((momentum(&u) - momentum(&v)).abs() < 1e-10);
        assert!((nehari(&u, 1.0, 0.3).direct - nehari(&v, 1.0, 0.3).direct).abs() < 1e-10);
    }
}

//! Dense discretization of the second variation `S''(φ)` acting on stacked
//! `(Re ε, Im ε)` samples, its low spectrum, the scalar operators `L₊`,
//! `L₋`, and a sampling probe for constrained coercivity.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::solitons::{phi_param_derivatives, phi_profile, SolitonParams};

/// Largest grid for which the dense operator is assembled.
pub const MAX_DENSE_N: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Differentiation {
    #[default]
    Spectral,
    /// Fourth-order centered differences.
    FiniteDifference4,
}

/// `S''(φ)` as a `2n × 2n` real symmetric matrix.
#[derive(Debug, Clone)]
pub struct RealPairOperator {
    pub matrix: Mat<f64>,
    pub grid: GridSpec,
    pub params: SolitonParams,
    /// `‖A - Aᵀ‖_F / ‖A‖_F` before symmetrization.
    pub asymmetry: f64,
}

/// First column of the circulant first and second derivative matrices.
fn derivative_columns(g: &GridSpec, diff: Differentiation) -> (Vec<f64>, Vec<f64>) {
    let n = g.n();
    match diff {
        Differentiation::Spectral => {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[0] = Complex64::new(1.0, 0.0);
            let f = Field::new(*g, e).expect("unit vector");
            let d1 = f.derivative().real_parts();
            let d2 = f.second_derivative().real_parts();
            (d1, d2)
        }
        Differentiation::FiniteDifference4 => {
            let h = g.dx();
            let mut d1 = vec![0.0; n];
            let mut d2 = vec![0.0; n];
            // column 0 holds the weight of f_0 in row m, i.e. offset -m
            d1[1] = -8.0 / (12.0 * h);
            d1[n - 1] = 8.0 / (12.0 * h);
            d1[2] = 1.0 / (12.0 * h);
            d1[n - 2] = -1.0 / (12.0 * h);
            let h2 = 12.0 * h * h;
            d2[0] = -30.0 / h2;
            d2[1] = 16.0 / h2;
            d2[n - 1] = 16.0 / h2;
            d2[2] = -1.0 / h2;
            d2[n - 2] = -1.0 / h2;
            (d1, d2)
        }
    }
}

/// Assembles `S''(φ_{ω,c})` on `g`.
pub fn second_variation(
    p: &SolitonParams,
    g: &GridSpec,
    diff: Differentiation,
) -> Result<RealPairOperator> {
    let n = g.n();
    if n > MAX_DENSE_N {
        return Err(Error::CostGuard(n));
    }
    let phi = phi_profile(p, g)?;
    let px = phi.derivative();
    let (d1, d2) = derivative_columns(g, diff);
    let circ = |col: &[f64], r: usize, c: usize| col[(r + n - c) % n];
    let a: Vec<f64> = phi.real_parts();
    let b: Vec<f64> = phi.imag_parts();
    let ax: Vec<f64> = px.real_parts();
    let bx: Vec<f64> = px.imag_parts();
    let (omega, c) = (p.omega, p.c);
    let mut m = Mat::<f64>::zeros(2 * n, 2 * n);
    for r in 0..n {
        let amp = a[r] * a[r] + b[r] * b[r] - c;
        for col in 0..n {
            let lap = -circ(&d2, r, col);
            let drv = circ(&d1, r, col);
            m[(r, col)] = lap;
            m[(r + n, col + n)] = lap;
            m[(r, col + n)] = amp * drv;
            m[(r + n, col)] = -amp * drv;
        }
        m[(r, r)] += omega + 2.0 * a[r] * bx[r];
        m[(r, r + n)] += 2.0 * b[r] * bx[r];
        m[(r + n, r)] += -2.0 * a[r] * ax[r];
        m[(r + n, r + n)] += omega - 2.0 * b[r] * ax[r];
    }
    let mut skew = 0.0;
    let mut total = 0.0;
    for r in 0..2 * n {
        for col in 0..2 * n {
            let v = m[(r, col)];
            total += v * v;
            if col > r {
                let d = v - m[(col, r)];
                skew += 2.0 * d * d;
            }
        }
    }
    for r in 0..2 * n {
        for col in r + 1..2 * n {
            let s = 0.5 * (m[(r, col)] + m[(col, r)]);
            m[(r, col)] = s;
            m[(col, r)] = s;
        }
    }
    Ok(RealPairOperator {
        matrix: m,
        grid: *g,
        params: *p,
        asymmetry: (skew / total).sqrt(),
    })
}

fn stack(f: &Field) -> Vec<f64> {
    [f.real_parts(), f.imag_parts()].concat()
}

impl RealPairOperator {
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n();
        let v = stack(f);
        let mut out = vec![0.0; 2 * n];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..2 * n).map(|c| self.matrix[(r, c)] * v[c]).sum();
        }
        let values = (0..n).map(|m| Complex64::new(out[m], out[m + n])).collect();
        Field::new(self.grid, values)
    }

    /// `⟨S''(φ)ε, ε⟩ = dx εᵀAε`.
    pub fn quadratic_form(&self, f: &Field) -> Result<f64> {
        let a = self.apply(f)?;
        a.inner_l2(f)
    }

    fn eigen(&self) -> (Vec<f64>, Mat<f64>) {
        let evd = self.matrix.selfadjoint_eigendecomposition(Side::Lower);
        let s = evd.s().column_vector();
        let mut idx: Vec<usize> = (0..s.nrows()).collect();
        idx.sort_by(|&i, &j| s.read(i).total_cmp(&s.read(j)));
        let vals: Vec<f64> = idx.iter().map(|&i| s.read(i)).collect();
        let u = evd.u();
        let vecs = Mat::from_fn(u.nrows(), idx.len(), |r, c| u.read(r, idx[c]));
        (vals, vecs)
    }

    /// Lowest `k` eigenpairs, eigenvectors returned as fields.
    pub fn low_eigenpairs(&self, k: usize) -> Result<Vec<(f64, Field)>> {
        let (vals, vecs) = self.eigen();
        let n = self.grid.n();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigen("non-finite eigenvalue".into()));
        }
        (0..k.min(vals.len()))
            .map(|c| {
                let f = (0..n)
                    .map(|m| Complex64::new(vecs[(m, c)], vecs[(m + n, c)]))
                    .collect();
                Ok((vals[c], Field::new(self.grid, f)?))
            })
            .collect()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut vals = self.matrix.selfadjoint_eigenvalues(Side::Lower);
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigen("non-finite eigenvalue".into()));
        }
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCounts {
    pub n_negative: usize,
    pub n_zero: usize,
    pub lowest: Vec<f64>,
    pub zero_tol: f64,
}

pub fn spectrum_counts(opr: &RealPairOperator, zero_tol: f64) -> Result<SpectrumCounts> {
    let vals = opr.eigenvalues()?;
    Ok(counts_from(&vals, zero_tol))
}

pub(crate) fn counts_from(vals: &[f64], zero_tol: f64) -> SpectrumCounts {
    SpectrumCounts {
        n_negative: vals.iter().filter(|&&v| v < -zero_tol).count(),
        n_zero: vals.iter().filter(|&&v| v.abs() <= zero_tol).count(),
        lowest: vals.iter().take(6).copied().collect(),
        zero_tol,
    }
}

/// `L₊ Re k + i L₋ Im k`.
pub fn lpm_apply(p: &SolitonParams, k: &Field) -> Result<Field> {
    p.validate()?;
    let g = *k.grid();
    let (omega, c) = (p.omega, p.c);
    let shift = omega - 0.25 * c * c;
    let vp = Field::from_fn(g, |x| {
        Complex64::new(
            crate::solitons::varphi_value(omega, c, x - p.x0).unwrap_or(0.0),
            0.0,
        )
    })?;
    let v: Vec<f64> = vp.real_parts();
    let vx: Vec<f64> = vp.derivative().real_parts();
    let re = Field::from_real(g, &k.real_parts())?;
    let im = Field::from_real(g, &k.imag_parts())?;
    let (re_xx, im_x, im_xx) = (
        re.second_derivative(),
        im.derivative(),
        im.second_derivative(),
    );
    let values = (0..g.n())
        .map(|m| {
            let (v2, v4) = (v[m] * v[m], v[m].powi(4));
            let plus = -re_xx.values()[m].re
                + (shift + 1.5 * c * v2 - 15.0 / 16.0 * v4) * re.values()[m].re;
            let minus = -im_xx.values()[m].re
                + (shift + 0.5 * c * v2 - 3.0 / 16.0 * v4 + 0.5 * v[m] * vx[m]) * im.values()[m].re
                - 0.5 * v2 * im_x.values()[m].re;
            Complex64::new(plus, minus)
        })
        .collect();
    Field::new(g, values)
}

/// `(c/ω - 4μ + cμ²)/√(4ω - c²)`.
pub fn negative_direction_value(omega: f64, c: f64, mu: f64) -> Result<f64> {
    if !(omega > 0.0 && 4.0 * omega > c * c) {
        return Err(Error::Admissibility { omega, c });
    }
    Ok((c / omega - 4.0 * mu + c * mu * mu) / (4.0 * omega - c * c).sqrt())
}

/// `⟨S''(φ)ψ, ψ⟩` with `ψ = ∂_ωφ + μ∂_cφ` from finite differences.
pub fn negative_direction_numeric(opr: &RealPairOperator, mu: f64) -> Result<f64> {
    let (dw, dc) = phi_param_derivatives(&opr.params, &opr.grid)?;
    let psi = &dw + &(&dc * mu);
    opr.quadratic_form(&psi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityProbe {
    /// Minimal `H(ε)/‖ε‖²_{H¹}` over the samples.
    pub kappa: f64,
    pub samples: usize,
    pub constrained: bool,
    pub negative_samples: usize,
}

/// Random sum of a few localized wave packets near the soliton center.
pub fn random_packet(rng: &mut ChaCha8Rng, g: &GridSpec, center: f64) -> Field {
    let terms: Vec<(f64, f64, f64, Complex64)> = (0..3)
        .map(|_| {
            let x0 = center + rng.gen_range(-2.0..2.0);
            let width = rng.gen_range(0.3..1.5);
            let k = rng.gen_range(-2.0..2.0);
            let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (x0, width, k, a)
        })
        .collect();
    let values = (0..g.n())
        .map(|m| {
            let x = g.node(m);
            terms
                .iter()
                .map(|&(x0, w, k, a)| {
                    a * (-((x - x0) / w).powi(2)).exp() * Complex64::from_polar(1.0, k * x)
                })
                .sum()
        })
        .collect();
    Field::from_values_unchecked(*g, values)
}

/// Removes from `f` its component in the span of `dirs`, so that the
/// result is orthogonal to each direction in the real inner product.
pub fn project_out(f: &Field, dirs: &[Field]) -> Result<Field> {
    let k = dirs.len();
    let gram = Mat::<f64>::from_fn(k, k, |i, j| dirs[i].inner_l2(&dirs[j]).unwrap_or(0.0));
    let mut rhs = Mat::<f64>::zeros(k, 1);
    for (i, d) in dirs.iter().enumerate() {
        rhs[(i, 0)] = f.inner_l2(d)?;
    }
    let coef = faer::prelude::SpSolver::solve(&gram.partial_piv_lu(), &rhs);
    let mut out = f.clone();
    for (i, d) in dirs.iter().enumerate() {
        out = out - &(d * coef[(i, 0)]);
    }
    Ok(out)
}

/// The three constraint directions `iφ`, `φ_x`, `φ + iμφ_x`.
pub fn constraint_directions(p: &SolitonParams, g: &GridSpec) -> Result<[Field; 3]> {
    let phi = phi_profile(p, g)?;
    let px = phi.derivative();
    let i = Complex64::new(0.0, 1.0);
    let third = &phi + &(&px * (i * p.mu()));
    Ok([&phi * i, px, third])
}

/// Samples `H(ε)/‖ε‖²_{H¹}` over random packets, with or without the
/// orthogonality constraints.
pub fn constrained_coercivity_probe(
    opr: &RealPairOperator,
    n_samples: usize,
    seed: u64,
    constrained: bool,
) -> Result<CoercivityProbe> {
    let dirs = constraint_directions(&opr.params, &opr.grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kappa = f64::INFINITY;
    let mut negative = 0;
    for _ in 0..n_samples {
        let mut eps = random_packet(&mut rng, &opr.grid, opr.params.x0);
        if constrained {
            eps = project_out(&eps, &dirs)?;
        }
        let ratio = opr.quadratic_form(&eps)? / eps.h1_sq();
        if ratio < 0.0 {
            negative += 1;
        }
        kappa = kappa.min(ratio);
    }
    Ok(CoercivityProbe {
        kappa,
        samples: n_samples,
        constrained,
        negative_samples: negative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{hessian_form, lquad};
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn small() -> GridSpec {
        make_grid(60.0, 1024).unwrap()
    }

    #[test]
    fn cost_guard() {
        let g = make_grid(200.0, 8192).unwrap();
        let p = SolitonParams::centered(1.0, 0.0).unwrap();
        assert!(matches!(
            second_variation(&p, &g, Differentiation::Spectral),
            Err(Error::CostGuard(8192))
        ));
    }

    #[test]
    fn profile_direction_and_kernel() {
        let g = small();
        let p = SolitonParams::centered(1.0, 0.0).unwrap();
        let opr = second_variation(&p, &g, Differentiation::Spectral).unwrap();
        // entrywise the commutator [D, |φ|²] is dense, so the matrix is
        // only approximately symmetric even though its action is accurate
        assert!(opr.asymmetry < 5e-2, "{}", opr.asymmetry);
        let phi = phi_profile(&p, &g).unwrap();
        let v = opr.quadratic_form(&phi).unwrap();
        assert!((v + 8.0 * PI).abs() < 1e-4, "{v}");
        assert!((v + 2.0 * lquad(&phi, 1.0, 0.0)).abs() < 1e-4);
        let iphi = &phi * Complex64::new(0.0, 1.0);
        let r = opr.apply(&iphi).unwrap().l2();
        assert!(r < 1e-6, "{r}");
        assert!(opr.apply(&phi.derivative()).unwrap().l2() < 1e-6);
    }

    #[test]
    fn quadratic_form_matches_explicit_h() {
        let g = small();
        let p = SolitonParams::new(1.0, 0.7, 0.3, 0.5).unwrap();
        let opr = second_variation(&p, &g, Differentiation::Spectral).unwrap();
        let phi = phi_profile(&p, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let e = random_packet(&mut rng, &g, 0.0);
            let a = opr.quadratic_form(&e).unwrap();
            let b = hessian_form(&e, &phi, p.omega, p.c);
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn finite_difference_variant_agrees() {
        let g = make_grid(60.0, 1024).unwrap();
        let p = SolitonParams::centered(1.0, 0.5).unwrap();
        let a = second_variation(&p, &g, Differentiation::Spectral).unwrap();
        let b = second_variation(&p, &g, Differentiation::FiniteDifference4).unwrap();
        let phi = phi_profile(&p, &g).unwrap();
        let (qa, qb) = (
            a.quadratic_form(&phi).unwrap(),
            b.quadratic_form(&phi).unwrap(),
        );
        assert!((qa - qb).abs() < 1e-3 * qa.abs(), "{qa} {qb}");
    }

    #[test]
    fn one_negative_two_zero() {
        let g = small();
        for &(w, c) in &[(1.0, 0.0), (1.0, 1.0), (1.0, -1.0)] {
            let p = SolitonParams::centered(w, c).unwrap();
            let opr = second_variation(&p, &g, Differentiation::Spectral).unwrap();
            let s = spectrum_counts(&opr, 1e-6).unwrap();
            assert_eq!((s.n_negative, s.n_zero), (1, 2), "({w},{c}) {:?}", s.lowest);
        }
    }

    #[test]
    fn lpm_kernels() {
        // applying -∂xx to ∂x varphi amplifies the periodic wrap at the box
        // edge, so the tail has to be far below 1e-8 there
        let g = make_grid(80.0, 2048).unwrap();
        for &(w, c) in &[(1.0, 0.0), (1.0, 1.0), (2.0, 1.0)] {
            let p = SolitonParams::centered(w, c).unwrap();
            let v = Field::from_fn(g, |x| {
                Complex64::new(0.0, crate::solitons::varphi_value(w, c, x).unwrap())
            })
            .unwrap();
            let r = lpm_apply(&p, &v).unwrap().l2();
            assert!(r < 1e-8, "({w},{c}) {r}");
            let vx = Field::from_real(g, &v.imag_parts()).unwrap().derivative();
            let r = lpm_apply(&p, &vx).unwrap().l2();
            assert!(r < 1e-8, "({w},{c}) {r}");
        }
        let p = SolitonParams::centered(1.0, 0.0).unwrap();
        let gauss = Field::from_fn(g, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
        assert!(lpm_apply(&p, &gauss).unwrap().l2() > 0.01);
    }

    #[test]
    fn negative_direction_closed_form() {
        assert!((negative_direction_value(1.0, 0.0, 1.0).unwrap() + 2.0).abs() < 1e-15);
        assert!((negative_direction_value(1.0, 1.0, 2.0).unwrap() + 3f64.sqrt()).abs() < 1e-14);
        assert!(
            (negative_direction_value(1.0, -1.0, 0.0).unwrap() + 1.0 / 3f64.sqrt()).abs() < 1e-15
        );
        assert!(negative_direction_value(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn probe_kernel_and_sign() {
        let g = small();
        let p = SolitonParams::centered(1.0, 0.0).unwrap();
        let opr = second_variation(&p, &g, Differentiation::Spectral).unwrap();
        let dirs = constraint_directions(&p, &g).unwrap();
        let k = &(&dirs[0] * 0.6) + &(&dirs[1] * -0.8);
        assert!(opr.quadratic_form(&k).unwrap().abs() < 1e-8 * k.l2_sq());
        let c = constrained_coercivity_probe(&opr, 50, 1, true).unwrap();
        assert!(c.kappa > 0.0);
        let u = constrained_coercivity_probe(&opr, 50, 1, false).unwrap();
        assert!(u.kappa < 0.0);
        let projected = project_out(
            &random_packet(&mut ChaCha8Rng::seed_from_u64(2), &g, 0.0),
            &dirs,
        )
        .unwrap();
        for d in &dirs {
            assert!(projected.inner_l2(d).unwrap().abs() < 1e-12);
        }
    }
}

//! Closed-form solitary waves `R(t, x) = e^{iωt} φ(x - ct)` and their
//! invariants.
//!
//! The profile is `φ(x) = ϕ(x) exp(i c x / 2 - i/4 ∫_{-∞}^x ϕ²)` with the
//! real modulus
//!
//! ```text
//! ϕ(x) = [ √ω / (4ω - c²) · (cosh(x √(4ω - c²)) - c / (2√ω)) ]^{-1/2}
//! ```
//!
//! The phase integral has a closed form, so profiles are exact at every
//! node rather than limited by a running quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::grid::{Field, GridSpec, BOUNDARY_TOLERANCE};

/// One traveling wave. `mu` is not stored; it is a function of `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub omega: f64,
    pub c: f64,
    pub theta0: f64,
    pub x0: f64,
}

impl SolitonParams {
    pub fn new(omega: f64, c: f64, theta0: f64, x0: f64) -> Result<Self> {
        let p = Self {
            omega,
            c,
            theta0,
            x0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Centered, unrotated soliton.
    pub fn centered(omega: f64, c: f64) -> Result<Self> {
        Self::new(omega, c, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        check_domain(self.omega, self.c)?;
        if !(self.theta0.is_finite() && self.x0.is_finite()) {
            return Err(Error::Parameter("phase and position must be finite".into()));
        }
        // The slaving constant must make the negative direction negative.
        let forms = closed_form_invariants(self.omega, self.c)?;
        let mu = self.mu();
        let value = -(forms.dmass_domega
            + mu * (forms.dmass_dc + forms.dmom_domega)
            + mu * mu * forms.dmom_dc);
        if !(value < 0.0) {
            return Err(Error::Parameter(format!(
                "mu = {mu} does not give a negative direction at c = {}",
                self.c
            )));
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        mu_for(self.c)
    }

    /// Exponential decay rate `√(ω - c²/4)`.
    pub fn decay_rate(&self) -> f64 {
        (self.omega - self.c * self.c / 4.0).sqrt()
    }

    pub fn with_omega_c(&self, omega: f64, c: f64) -> Self {
        Self { omega, c, ..*self }
    }
}

fn check_domain(omega: f64, c: f64) -> Result<()> {
    if omega.is_finite() && c.is_finite() && omega > 0.0 && 4.0 * omega - c * c > 0.0 {
        Ok(())
    } else {
        Err(Error::Admissibility { omega, c })
    }
}

/// Slaving constant: `0` for `c < 0`, `1` for `c = 0`, `2/c` for `c > 0`.
pub fn mu_for(c: f64) -> f64 {
    if c < 0.0 {
        0.0
    } else if c == 0.0 {
        1.0
    } else {
        2.0 / c
    }
}

/// `arctan √((2√ω + c) / (2√ω - c))`, the quantity behind every closed form.
pub fn arctan_ratio(omega: f64, c: f64) -> f64 {
    let s = 2.0 * omega.sqrt();
    ((s + c) / (s - c)).sqrt().atan()
}

/// Value of the real modulus profile ϕ at `x`.
pub fn varphi_value(omega: f64, c: f64, x: f64) -> Result<f64> {
    check_domain(omega, c)?;
    Ok(varphi(omega, c, x))
}

fn varphi(omega: f64, c: f64, x: f64) -> f64 {
    let disc = 4.0 * omega - c * c;
    let beta = disc.sqrt();
    let gamma = c / (2.0 * omega.sqrt());
    let ch = (x * beta).cosh();
    if !ch.is_finite() {
        return 0.0;
    }
    (omega.sqrt() / disc * (ch - gamma)).powf(-0.5)
}

/// `∫_{-∞}^x ϕ²`, equal to `4 [arctan(r tanh(βx/2)) + arctan r]`.
fn varphi_sq_integral(omega: f64, c: f64, x: f64) -> f64 {
    let beta = (4.0 * omega - c * c).sqrt();
    let s = 2.0 * omega.sqrt();
    let r = ((s + c) / (s - c)).sqrt();
    4.0 * ((r * (0.5 * beta * x).tanh()).atan() + r.atan())
}

/// φ_{ω,c}(x) without phase rotation or translation.
pub fn profile_value(omega: f64, c: f64, x: f64) -> Complex64 {
    let amp = varphi(omega, c, x);
    let phase = 0.5 * c * x - 0.25 * varphi_sq_integral(omega, c, x);
    Complex64::from_polar(amp, phase)
}

/// Samples of `e^{iθ₀} φ(x - x₀)`; errors when the tail is not contained
/// in the box.
pub fn phi_profile(p: &SolitonParams, g: &GridSpec) -> Result<Field> {
    p.validate()?;
    let f = phi_profile_unchecked(p, g);
    let value = f.edge_abs();
    if value > BOUNDARY_TOLERANCE {
        return Err(Error::TailNotContained {
            value,
            tolerance: BOUNDARY_TOLERANCE,
        });
    }
    Ok(f)
}

/// As [`phi_profile`] without validation or tail check. The caller
/// guarantees `4ω > c²`.
pub fn phi_profile_unchecked(p: &SolitonParams, g: &GridSpec) -> Field {
    let rot = Complex64::from_polar(1.0, p.theta0);
    let values = (0..g.n())
        .map(|m| rot * profile_value(p.omega, p.c, g.node(m) - p.x0))
        .collect();
    Field::from_values_unchecked(*g, values)
}

/// `e^{i(ωt + θ₀)} φ(x - x₀ - ct)`.
pub fn exact_solution(p: &SolitonParams, t: f64, g: &GridSpec) -> Result<Field> {
    let moved = SolitonParams {
        theta0: p.theta0 + p.omega * t,
        x0: p.x0 + p.c * t,
        ..*p
    };
    phi_profile(&moved, g)
}

/// `(∂_ω φ, ∂_c φ)` for the rotated and translated profile, by central
/// differences with one Richardson extrapolation.
pub fn phi_param_derivatives(p: &SolitonParams, g: &GridSpec) -> Result<(Field, Field)> {
    p.validate()?;
    let d_omega = richardson(
        p,
        g,
        |q, h| q.with_omega_c(q.omega + h, q.c),
        1e-6 * p.omega.abs().max(1.0),
    )?;
    let d_c = richardson(
        p,
        g,
        |q, h| q.with_omega_c(q.omega, q.c + h),
        1e-6 * p.c.abs().max(1.0),
    )?;
    Ok((d_omega, d_c))
}

fn richardson(
    p: &SolitonParams,
    g: &GridSpec,
    shift: impl Fn(&SolitonParams, f64) -> SolitonParams,
    h0: f64,
) -> Result<Field> {
    let admissible = |q: &SolitonParams| check_domain(q.omega, q.c).is_ok();
    let mut h = h0;
    let mut tries = 0;
    while !(admissible(&shift(p, h)) && admissible(&shift(p, -h))) {
        h *= 0.1;
        tries += 1;
        if tries > 8 {
            return Err(Error::StepOutsideDomain);
        }
    }
    let central = |h: f64| {
        let plus = phi_profile_unchecked(&shift(p, h), g);
        let minus = phi_profile_unchecked(&shift(p, -h), g);
        &(plus - &minus) * (0.5 / h)
    };
    let coarse = central(h);
    let fine = central(0.5 * h);
    Ok(&(&fine * (4.0 / 3.0)) - &(&coarse * (1.0 / 3.0)))
}

/// Closed-form L^p norms, conserved quantities and parameter derivatives
/// of φ_{ω,c}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    /// `‖φ‖²_{L²}`
    pub l2sq: f64,
    /// `‖φ‖⁴_{L⁴}`
    pub l4: f64,
    /// `‖φ‖⁶_{L⁶}`
    pub l6: f64,
    /// `‖φ_x‖²_{L²}`
    pub grad_l2sq: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    pub dmass_domega: f64,
    pub dmass_dc: f64,
    pub dmom_domega: f64,
    pub dmom_dc: f64,
}

pub fn closed_form_invariants(omega: f64, c: f64) -> Result<ClosedForms> {
    check_domain(omega, c)?;
    let a = arctan_ratio(omega, c);
    let root = (4.0 * omega - c * c).sqrt();
    Ok(ClosedForms {
        l2sq: 8.0 * a,
        l4: 16.0 * c * a + 8.0 * root,
        l6: 32.0 * (c * c + 2.0 * omega) * a + 24.0 * c * root,
        grad_l2sq: 8.0 * omega * a,
        mass: 4.0 * a,
        momentum: root,
        energy: -0.5 * c * root,
        dmass_domega: -c / (omega * root),
        dmass_dc: 2.0 / root,
        dmom_domega: 2.0 / root,
        dmom_dc: -c / root,
    })
}

/// L² norm of `-u_xx - i|u|²u_x + ωu + icu_x` for an arbitrary field.
pub fn profile_equation_residual(u: &Field, omega: f64, c: f64) -> f64 {
    let ux = u.derivative();
    let uxx = u.second_derivative();
    let i = Complex64::new(0.0, 1.0);
    let values: Vec<Complex64> = u
        .values()
        .iter()
        .zip(ux.values())
        .zip(uxx.values())
        .map(|((&v, &dv), &ddv)| -ddv - i * v.norm_sqr() * dv + omega * v + i * c * dv)
        .collect();
    Field::from_values_unchecked(*u.grid(), values).l2()
}

/// Residual of the profile equation on the sampled soliton.
pub fn profile_residual(p: &SolitonParams, g: &GridSpec) -> Result<f64> {
    let phi = phi_profile(p, g)?;
    Ok(profile_equation_residual(&phi, p.omega, p.c))
}

/// Validated, ordered family of solitons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSolitonConfig {
    pub solitons: Vec<SolitonParams>,
    pub separation: f64,
    /// `σ_j = 2(ω_j - ω_{j-1}) / (c_j - c_{j-1})` for `j = 2..N`.
    pub sigmas: Vec<f64>,
    pub omega_star: f64,
    /// Minimal relative speed; `None` for a single soliton.
    pub c_star: Option<f64>,
    /// `min |σ_j - c_k|` over `j ≥ 2` and all `k`; `None` for a single soliton.
    pub c_star_sigma: Option<f64>,
}

impl MultiSolitonConfig {
    pub fn len(&self) -> usize {
        self.solitons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solitons.is_empty()
    }

    /// Sum of the profiles at their initial phases and positions.
    pub fn superposition(&self, g: &GridSpec) -> Result<Field> {
        let mut u = Field::zeros(*g);
        for p in &self.solitons {
            u = u + &phi_profile(p, g)?;
        }
        Ok(u)
    }
}

/// Checks ordering, separation and the speed-frequency condition.
/// Consecutive gaps may equal the separation.
pub fn validate_multi_config(
    solitons: &[SolitonParams],
    separation: f64,
) -> std::result::Result<MultiSolitonConfig, ConfigError> {
    if solitons.is_empty() {
        return Err(ConfigError::Empty);
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(ConfigError::SeparationValue(separation));
    }
    for (index, p) in solitons.iter().enumerate() {
        if p.validate().is_err() {
            return Err(ConfigError::LumpEndpoint { index });
        }
    }
    for (i, w) in solitons.windows(2).enumerate() {
        if !(w[1].c > w[0].c) {
            return Err(ConfigError::UnorderedSpeeds(i + 1));
        }
    }
    for (i, w) in solitons.windows(2).enumerate() {
        if !(w[1].x0 > w[0].x0) {
            return Err(ConfigError::UnorderedPositions(i + 1));
        }
        let gap = w[1].x0 - w[0].x0;
        if gap < separation {
            return Err(ConfigError::Separation {
                index: i,
                gap,
                separation,
            });
        }
    }
    let mut sigmas = Vec::with_capacity(solitons.len().saturating_sub(1));
    for (i, w) in solitons.windows(2).enumerate() {
        let sigma = 2.0 * (w[1].omega - w[0].omega) / (w[1].c - w[0].c);
        if !(sigma > 0.0 && w[0].c < sigma && sigma < w[1].c) {
            return Err(ConfigError::Sigma {
                j: i + 2,
                sigma,
                c_prev: w[0].c,
                c_next: w[1].c,
            });
        }
        sigmas.push(sigma);
    }
    let omega_star = solitons
        .iter()
        .map(|p| p.decay_rate())
        .fold(f64::INFINITY, f64::min);
    let mut c_star = None::<f64>;
    for (j, a) in solitons.iter().enumerate() {
        for b in &solitons[j + 1..] {
            let d = (a.c - b.c).abs();
            c_star = Some(c_star.map_or(d, |m| m.min(d)));
        }
    }
    let c_star_sigma = sigmas
        .iter()
        .flat_map(|s| solitons.iter().map(move |p| (s - p.c).abs()))
        .reduce(f64::min);
    Ok(MultiSolitonConfig {
        solitons: solitons.to_vec(),
        separation,
        sigmas,
        omega_star,
        c_star,
        c_star_sigma,
    })
}

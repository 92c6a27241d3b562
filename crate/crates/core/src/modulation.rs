//! Modulation: fit phases, positions and frequencies so that the remainder
//! `ε = u - Σ R̃_j` satisfies the orthogonality conditions
//!
//! ```text
//! (ε, iR̃_j) = (ε, ∂_x R̃_j) = (ε, R̃_j + iμ_j ∂_x R̃_j) = 0,
//! ```
//!
//! with each speed slaved to its frequency by `c̃_j = c_j⁰ + μ_j(ω̃_j - ω_j⁰)`.

use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::solitons::{arctan_ratio, mu_for, phi_profile_unchecked, SolitonParams};

/// Residual norm accepted as converged.
pub const FIT_TOLERANCE: f64 = 1e-10;
const MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 20;
const JACOBIAN_STEP: f64 = 1e-5;
const SINGULAR_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulationState {
    pub t: f64,
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
    /// Derived from `omega`; see [`ModulationState::set_omega`].
    pub c: Vec<f64>,
    pub omega0: Vec<f64>,
    pub c0: Vec<f64>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl ModulationState {
    /// State at the nominal parameters `(ω_j⁰, c_j⁰)` with the given phases
    /// and positions.
    pub fn nominal(theta: &[f64], x: &[f64], omega0: &[f64], c0: &[f64]) -> Result<Self> {
        Self::new(theta, x, omega0, omega0, c0)
    }

    pub fn new(
        theta: &[f64],
        x: &[f64],
        omega: &[f64],
        omega0: &[f64],
        c0: &[f64],
    ) -> Result<Self> {
        let n = theta.len();
        if n == 0 || x.len() != n || omega.len() != n || omega0.len() != n || c0.len() != n {
            return Err(Error::Parameter(
                "modulation parameter lists must be non-empty and of equal length".into(),
            ));
        }
        let mut s = Self {
            t: 0.0,
            theta: theta.to_vec(),
            x: x.to_vec(),
            omega: omega.to_vec(),
            c: vec![0.0; n],
            omega0: omega0.to_vec(),
            c0: c0.to_vec(),
            residual_norm: f64::INFINITY,
            converged: false,
            iterations: 0,
        };
        s.set_omega(omega);
        Ok(s)
    }

    /// Guess built from nominal soliton parameters.
    pub fn from_solitons(solitons: &[SolitonParams]) -> Result<Self> {
        let f = |g: fn(&SolitonParams) -> f64| solitons.iter().map(g).collect::<Vec<_>>();
        Self::nominal(&f(|p| p.theta0), &f(|p| p.x0), &f(|p| p.omega), &f(|p| p.c))
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn mu(&self, j: usize) -> f64 {
        mu_for(self.c0[j])
    }

    /// Sets the frequencies and recomputes the slaved speeds.
    pub fn set_omega(&mut self, omega: &[f64]) {
        self.omega.copy_from_slice(omega);
        for j in 0..self.len() {
            self.c[j] = self.c0[j] + self.mu(j) * (self.omega[j] - self.omega0[j]);
        }
    }

    pub fn soliton(&self, j: usize) -> SolitonParams {
        SolitonParams {
            omega: self.omega[j],
            c: self.c[j],
            theta0: self.theta[j],
            x0: self.x[j],
        }
    }

    /// `(θ_1..N, x_1..N, ω_1..N)`.
    fn unknowns(&self) -> Vec<f64> {
        [self.theta.as_slice(), &self.x, &self.omega].concat()
    }

    fn with_unknowns(&self, q: &[f64]) -> Self {
        let n = self.len();
        let mut s = self.clone();
        s.theta.copy_from_slice(&q[..n]);
        s.x.copy_from_slice(&q[n..2 * n]);
        s.set_omega(&q[2 * n..]);
        s
    }

    /// `4ω̃ > c̃²` for every soliton and, when `separation` is given,
    /// consecutive positions more than `separation / 2` apart.
    pub fn is_admissible(&self, separation: Option<f64>) -> bool {
        let params = (0..self.len()).all(|j| {
            let (w, c) = (self.omega[j], self.c[j]);
            w.is_finite() && c.is_finite() && w > 0.0 && 4.0 * w > c * c
        });
        let order = separation.is_none_or(|l| self.x.windows(2).all(|p| p[1] - p[0] > 0.5 * l));
        params && order && self.theta.iter().chain(&self.x).all(|v| v.is_finite())
    }

    fn check_admissible(&self) -> Result<()> {
        for j in 0..self.len() {
            let (omega, c) = (self.omega[j], self.c[j]);
            if !(omega > 0.0 && 4.0 * omega > c * c) {
                return Err(Error::Admissibility { omega, c });
            }
        }
        Ok(())
    }

    /// Modulated profiles `R̃_j` on `g`.
    pub fn profiles(&self, g: &GridSpec) -> Vec<Field> {
        (0..self.len())
            .map(|j| phi_profile_unchecked(&self.soliton(j), g))
            .collect()
    }

    /// `ε = u - Σ R̃_j`.
    pub fn remainder(&self, u: &Field) -> Field {
        let mut eps = u.clone();
        for r in self.profiles(u.grid()) {
            eps = eps - &r;
        }
        eps
    }

    /// Modulated distance `‖ε‖_{H¹}` at this state.
    pub fn distance(&self, u: &Field) -> f64 {
        self.remainder(u).h1()
    }
}

fn residuals_unchecked(u: &Field, s: &ModulationState) -> Vec<f64> {
    let n = s.len();
    let profiles = s.profiles(u.grid());
    let mut eps = u.clone();
    for r in &profiles {
        eps = eps - r;
    }
    let i = Complex64::new(0.0, 1.0);
    let mut out = vec![0.0; 3 * n];
    for (j, r) in profiles.iter().enumerate() {
        let rx = r.derivative();
        let ir = r * i;
        let third = r + &(&rx * (i * s.mu(j)));
        out[j] = eps.inner_l2(&ir).expect("same grid");
        out[n + j] = eps.inner_l2(&rx).expect("same grid");
        out[2 * n + j] = eps.inner_l2(&third).expect("same grid");
    }
    out
}

/// The `3N` orthogonality residuals, ordered `(Φ¹_1..N, Φ²_1..N, Φ³_1..N)`.
pub fn residuals(u: &Field, s: &ModulationState) -> Result<Vec<f64>> {
    s.check_admissible()?;
    Ok(residuals_unchecked(u, s))
}

/// Central-difference Jacobian of [`residuals`] with respect to
/// `(θ_1..N, x_1..N, ω_1..N)`, speeds slaved.
pub fn jacobian(u: &Field, s: &ModulationState) -> Result<Mat<f64>> {
    s.check_admissible()?;
    let q = s.unknowns();
    let dim = q.len();
    let mut jac = Mat::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let h = JACOBIAN_STEP * q[k].abs().max(1.0);
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[k] += h;
        qm[k] -= h;
        let (sp, sm) = (s.with_unknowns(&qp), s.with_unknowns(&qm));
        sp.check_admissible()?;
        sm.check_admissible()?;
        let (rp, rm) = (residuals_unchecked(u, &sp), residuals_unchecked(u, &sm));
        for r in 0..dim {
            jac[(r, k)] = (rp[r] - rm[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Options for [`fit_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tolerance: f64,
    pub max_iter: usize,
    /// Minimal gap between consecutive positions is half of this.
    pub separation: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: FIT_TOLERANCE,
            max_iter: MAX_ITER,
            separation: None,
        }
    }
}

/// Newton iteration from `guess` with default options.
pub fn fit(u: &Field, guess: &ModulationState) -> Result<ModulationState> {
    fit_with(u, guess, &FitOptions::default())
}

/// Newton iteration; steps that leave the admissible region are halved.
/// Returns the best iterate with `converged = false` when the iteration
/// budget runs out.
pub fn fit_with(u: &Field, guess: &ModulationState, opts: &FitOptions) -> Result<ModulationState> {
    if !guess.is_admissible(opts.separation) {
        return Err(Error::ModulationAdmissibility(0));
    }
    let mut s = guess.clone();
    let mut r = residuals_unchecked(u, &s);
    s.residual_norm = norm(&r);
    let mut best = s.clone();
    for iter in 0..opts.max_iter {
        if s.residual_norm < opts.tolerance {
            s.converged = true;
            s.iterations = iter;
            return Ok(s);
        }
        let jac = match jacobian(u, &s) {
            Ok(j) => j,
            // the difference stencil straddles the admissible boundary
            Err(Error::Admissibility { .. }) => break,
            Err(e) => return Err(e),
        };
        let sv = jac.singular_values();
        let (smax, smin) = sv
            .iter()
            .fold((0.0f64, f64::INFINITY), |(a, b), &v| (a.max(v), b.min(v)));
        let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
        if !(ratio > SINGULAR_RATIO) {
            return Err(Error::SingularJacobian(ratio));
        }
        let rhs = Mat::<f64>::from_fn(r.len(), 1, |i, _| -r[i]);
        let delta = jac.partial_piv_lu().solve(&rhs);
        let q = s.unknowns();
        let mut step = 1.0;
        let mut halvings = 0;
        let mut fallback = None;
        let (next, next_r) = loop {
            let trial: Vec<f64> = q
                .iter()
                .enumerate()
                .map(|(i, v)| v + step * delta[(i, 0)])
                .collect();
            let cand = s.with_unknowns(&trial);
            if cand.is_admissible(opts.separation) {
                let cr = residuals_unchecked(u, &cand);
                if norm(&cr) < s.residual_norm {
                    break (cand, cr);
                }
                if fallback.is_none() {
                    fallback = Some((cand, cr));
                }
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                match fallback.take() {
                    Some(f) => break f,
                    None => return Err(Error::ModulationAdmissibility(MAX_HALVINGS)),
                }
            }
            step *= 0.5;
        };
        s = next;
        r = next_r;
        s.residual_norm = norm(&r);
        s.iterations = iter + 1;
        if s.residual_norm < best.residual_norm {
            best = s.clone();
        }
    }
    if s.residual_norm < opts.tolerance {
        s.converged = true;
        return Ok(s);
    }
    best.converged = false;
    Ok(best)
}

/// `f(ω, c) = 8√ω arctan √((2√ω + c)/(2√ω - c)) - 2√(4ω - c²)`, extended by
/// zero at `c = -2√ω`.
pub fn f_function(omega: f64, c: f64) -> Result<f64> {
    let s = 2.0 * omega.sqrt();
    if !(omega > 0.0) || !(c >= -s && c < s) {
        return Err(Error::Admissibility { omega, c });
    }
    if c == -s {
        return Ok(0.0);
    }
    Ok(8.0 * omega.sqrt() * arctan_ratio(omega, c) - 2.0 * (4.0 * omega - c * c).sqrt())
}

/// `∂_c f = 2(c + 2√ω)/√(4ω - c²)`.
pub fn f_function_dc(omega: f64, c: f64) -> Result<f64> {
    if !(omega > 0.0 && 4.0 * omega > c * c) {
        return Err(Error::Admissibility { omega, c });
    }
    Ok(2.0 * (c + 2.0 * omega.sqrt()) / (4.0 * omega - c * c).sqrt())
}

/// Centered finite-difference checks of the modulation laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicalReport {
    /// Times of the interior samples.
    pub t: Vec<f64>,
    /// `∂_t θ̃_j - ω̃_j`, indexed `[sample][j]`.
    pub theta_defect: Vec<Vec<f64>>,
    /// `∂_t x̃_j - c̃_j`.
    pub x_defect: Vec<Vec<f64>>,
    /// `∂_t ω̃_j`.
    pub omega_rate: Vec<Vec<f64>>,
    pub max_theta_defect: f64,
    pub max_x_defect: f64,
    pub max_omega_rate: f64,
}

/// Refits along a trajectory, warm-starting each fit from the previous
/// state advanced by `θ += ω̃Δt`, `x += c̃Δt`.
#[derive(Debug, Clone)]
pub struct Tracker {
    opts: FitOptions,
    states: Vec<ModulationState>,
    guess: ModulationState,
}

impl Tracker {
    pub fn new(initial_guess: ModulationState, opts: FitOptions) -> Self {
        Self {
            opts,
            states: Vec::new(),
            guess: initial_guess,
        }
    }

    pub fn states(&self) -> &[ModulationState] {
        &self.states
    }

    pub fn last(&self) -> Option<&ModulationState> {
        self.states.last()
    }

    /// Fits the snapshot `u` at time `t`.
    pub fn push(&mut self, t: f64, u: &Field) -> Result<&ModulationState> {
        let mut guess = self.guess.clone();
        if let Some(prev) = self.states.last() {
            let dt = t - prev.t;
            for j in 0..guess.len() {
                guess.theta[j] = prev.theta[j] + prev.omega[j] * dt;
                guess.x[j] = prev.x[j] + prev.c[j] * dt;
            }
            guess.set_omega(&prev.omega.clone());
        }
        let mut s = fit_with(u, &guess, &self.opts).map_err(|e| Error::FitFailure {
            t,
            reason: e.to_string(),
        })?;
        if !s.converged {
            return Err(Error::FitFailure {
                t,
                reason: format!(
                    "no convergence after {} iterations, residual {:.3e}",
                    s.iterations, s.residual_norm
                ),
            });
        }
        s.t = t;
        self.guess = s.clone();
        self.states.push(s);
        Ok(self.states.last().expect("just pushed"))
    }

    pub fn report(&self) -> DynamicalReport {
        dynamical_report(&self.states)
    }
}

pub fn dynamical_report(states: &[ModulationState]) -> DynamicalReport {
    let mut rep = DynamicalReport {
        t: Vec::new(),
        theta_defect: Vec::new(),
        x_defect: Vec::new(),
        omega_rate: Vec::new(),
        max_theta_defect: 0.0,
        max_x_defect: 0.0,
        max_omega_rate: 0.0,
    };
    for w in states.windows(3) {
        let (a, s, b) = (&w[0], &w[1], &w[2]);
        let span = b.t - a.t;
        let n = s.len();
        let th: Vec<f64> = (0..n)
            .map(|j| (b.theta[j] - a.theta[j]) / span - s.omega[j])
            .collect();
        let xd: Vec<f64> = (0..n).map(|j| (b.x[j] - a.x[j]) / span - s.c[j]).collect();
        let wr: Vec<f64> = (0..n).map(|j| (b.omega[j] - a.omega[j]) / span).collect();
        let amax = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        rep.max_theta_defect = rep.max_theta_defect.max(amax(&th));
        rep.max_x_defect = rep.max_x_defect.max(amax(&xd));
        rep.max_omega_rate = rep.max_omega_rate.max(amax(&wr));
        rep.t.push(s.t);
        rep.theta_defect.push(th);
        rep.x_defect.push(xd);
        rep.omega_rate.push(wr);
    }
    rep
}

/// Fits every snapshot in order.
pub fn track(
    snapshots: &[(f64, Field)],
    initial_guess: &ModulationState,
    opts: &FitOptions,
) -> Result<(Vec<ModulationState>, DynamicalReport)> {
    let mut tracker = Tracker::new(initial_guess.clone(), *opts);
    for (t, u) in snapshots {
        tracker.push(*t, u)?;
    }
    let report = tracker.report();
    Ok((tracker.states, report))
}

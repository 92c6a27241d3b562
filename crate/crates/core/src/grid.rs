//! Periodic uniform grid, complex fields on it, and spectral calculus.
//!
//! Fields stand for functions on the real line that have decayed to
//! negligible size before reaching the box edges. Quadrature is the
//! rectangle rule, which is spectrally accurate for smooth periodic
//! integrands and matches Parseval's identity exactly.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|f|` at the two box edges for operations that treat the
/// left edge as minus infinity.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    length: f64,
    n: usize,
    x0: f64,
}

/// Builds the centered grid `[-length/2, length/2)` with `n` nodes.
pub fn make_grid(length: f64, n: usize) -> Result<GridSpec> {
    GridSpec::new(length, n)
}

impl GridSpec {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        Self::with_offset(length, n, -length / 2.0)
    }

    pub fn with_offset(length: f64, n: usize, x0: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::GridLength(length));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        if !x0.is_finite() {
            return Err(Error::Parameter(format!("grid offset {x0} is not finite")));
        }
        Ok(Self { length, n, x0 })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Left endpoint.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Grid spacing. Exact because `n` is a power of two.
    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        self.x0 + m as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.node(m)).collect()
    }

    /// Angular wavenumbers in FFT order; index `n/2` carries `-n/2`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / self.length;
        let half = self.n / 2;
        (0..self.n)
            .map(|m| {
                if m < half {
                    m as f64 * dk
                } else {
                    (m as f64 - self.n as f64) * dk
                }
            })
            .collect()
    }

    /// Running integral of real samples from the left edge, which stands
    /// in for minus infinity.
    pub fn cumulative_integral(
        &self,
        g: &[f64],
        rule: CumulativeRule,
    ) -> Result<CumulativeIntegral> {
        if g.len() != self.n {
            return Err(Error::SampleCount {
                expected: self.n,
                got: g.len(),
            });
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let dx = self.dx();
        let values = match rule {
            CumulativeRule::Trapezoid => {
                let mut out = Vec::with_capacity(self.n);
                let mut acc = 0.0;
                out.push(0.0);
                for w in g.windows(2) {
                    acc += 0.5 * dx * (w[0] + w[1]);
                    out.push(acc);
                }
                out
            }
            CumulativeRule::Spectral => spectral_antiderivative(self, g),
        };
        let edge = g[0].abs().max(g[self.n - 1].abs());
        Ok(CumulativeIntegral {
            values,
            boundary_exceeded: edge > BOUNDARY_TOLERANCE,
        })
    }
}

/// Quadrature rule for running integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CumulativeRule {
    /// Composite trapezoid; second order at interior nodes.
    Trapezoid,
    /// Integrates the trigonometric interpolant of the non-constant part
    /// exactly; the mean contributes linearly.
    #[default]
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeIntegral {
    pub values: Vec<f64>,
    /// Set when `|g|` at either edge exceeds [`BOUNDARY_TOLERANCE`].
    pub boundary_exceeded: bool,
}

fn spectral_antiderivative(grid: &GridSpec, g: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_forward(&mut buf);
    let mean = buf[0].re / n as f64;
    let k = grid.wavenumbers();
    buf[0] = Complex64::new(0.0, 0.0);
    buf[n / 2] = Complex64::new(0.0, 0.0);
    for (b, &kk) in buf.iter_mut().zip(&k).skip(1) {
        *b /= Complex64::new(0.0, kk);
    }
    // value of the oscillatory part at the left edge
    let offset: Complex64 = buf.iter().sum::<Complex64>() / n as f64;
    fft_inverse(&mut buf);
    let dx = grid.dx();
    let mut out: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(m, b)| mean * m as f64 * dx + (b.re - offset.re))
        .collect();
    out[0] = 0.0;
    out
}

/// Complex samples on a [`GridSpec`].
#[derive(Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .field("l2", &self.l2())
            .finish_non_exhaustive()
    }
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::SampleCount {
                expected: grid.n,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n],
        }
    }

    /// Samples `f` at the grid nodes. Non-finite values are rejected.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.n).map(|m| f(grid.node(m))).collect();
        Self::new(grid, values)
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub(crate) fn from_values_unchecked(grid: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Pointwise product with a real weight.
    pub fn weighted(&self, w: &[f64]) -> Self {
        assert_eq!(w.len(), self.grid.n, "weight length mismatch");
        let values = self.values.iter().zip(w).map(|(&v, &wi)| v * wi).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn abs_sq(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn imag_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus at the two endpoints.
    pub fn edge_abs(&self) -> f64 {
        self.values[0]
            .norm()
            .max(self.values[self.grid.n - 1].norm())
    }

    /// Unnormalized forward transform coefficients.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        fft_forward(&mut buf);
        buf
    }

    /// Builds a field from unnormalized forward coefficients.
    pub fn from_spectrum(grid: GridSpec, mut coeffs: Vec<Complex64>) -> Result<Self> {
        fft_inverse(&mut coeffs);
        Self::new(grid, coeffs)
    }

    fn spectral_multiply(&self, symbol: impl Fn(f64) -> Complex64, zero_nyquist: bool) -> Self {
        let mut buf = self.spectrum();
        let k = self.grid.wavenumbers();
        for (b, &kk) in buf.iter_mut().zip(&k) {
            *b *= symbol(kk);
        }
        if zero_nyquist {
            buf[self.grid.n / 2] = Complex64::new(0.0, 0.0);
        }
        fft_inverse(&mut buf);
        Self {
            grid: self.grid,
            values: buf,
        }
    }

    /// Spectral first derivative with the Nyquist mode removed.
    pub fn derivative(&self) -> Self {
        self.spectral_multiply(|k| Complex64::new(0.0, k), true)
    }

    /// Spectral second derivative, equal to `derivative` applied twice.
    pub fn second_derivative(&self) -> Self {
        self.spectral_multiply(|k| Complex64::new(-k * k, 0.0), true)
    }

    /// Returns `x -> f(x - shift)` via a spectral phase shift. The Nyquist
    /// component is dropped, since a half-sample shift of it is not real.
    pub fn translate(&self, shift: f64) -> Self {
        self.spectral_multiply(|k| Complex64::from_polar(1.0, -k * shift), true)
    }

    /// `dx * Σ Re(a conj(b))`.
    pub fn inner_l2(&self, other: &Field) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.grid.dx()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>())
    }

    /// `∫ w |f|^2` by the rectangle rule.
    pub fn weighted_l2_sq(&self, w: &[f64]) -> f64 {
        self.grid.dx()
            * self
                .values
                .iter()
                .zip(w)
                .map(|(v, wi)| v.norm_sqr() * wi)
                .sum::<f64>()
    }

    pub fn l2_sq(&self) -> f64 {
        self.grid.dx() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    /// `Σ (1 + k^2) |f̂_k|^2` with the normalization that makes it equal to
    /// `‖f‖² + ‖f_x‖²`. The Nyquist mode only enters through `‖f‖²`,
    /// matching [`Field::derivative`].
    pub fn h1_sq(&self) -> f64 {
        let c = self.spectrum();
        let k = self.grid.wavenumbers();
        let n = self.grid.n;
        let scale = self.grid.dx() / n as f64;
        scale
            * c.iter()
                .zip(&k)
                .enumerate()
                .map(|(m, (ck, &kk))| {
                    let kk2 = if m == n / 2 { 0.0 } else { kk * kk };
                    (1.0 + kk2) * ck.norm_sqr()
                })
                .sum::<f64>()
    }

    pub fn h1(&self) -> f64 {
        self.h1_sq().sqrt()
    }

    /// `‖f‖_{L^p}` by direct quadrature.
    pub fn lp(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::LpExponent(p));
        }
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        Ok((self.grid.dx() * s).powf(1.0 / p))
    }

    pub fn norms(&self, p: f64) -> Result<Norms> {
        Ok(Norms {
            l2: self.l2(),
            h1: self.h1(),
            lp: self.lp(p)?,
        })
    }

    /// Errors when `|f|` at an endpoint exceeds `tolerance`.
    pub fn check_decay(&self, tolerance: f64) -> Result<()> {
        let value = self.edge_abs();
        if value > tolerance {
            Err(Error::BoundaryDecay { value, tolerance })
        } else {
            Ok(())
        }
    }

    fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub lp: f64,
}

impl Add<&Field> for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub<&Field> for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Add<&Field> for Field {
    type Output = Field;
    fn add(mut self, rhs: &Field) -> Field {
        assert_eq!(self.grid, rhs.grid, "fields live on different grids");
        self.values
            .iter_mut()
            .zip(&rhs.values)
            .for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub<&Field> for Field {
    type Output = Field;
    fn sub(mut self, rhs: &Field) -> Field {
        assert_eq!(self.grid, rhs.grid, "fields live on different grids");
        self.values
            .iter_mut()
            .zip(&rhs.values)
            .for_each(|(a, b)| *a -= b);
        self
    }
}

impl Mul<Complex64> for &Field {
    type Output = Field;
    fn mul(self, rhs: Complex64) -> Field {
        self.map(|v| v * rhs)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.map(|v| v * rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|v| -v)
    }
}

type PlanCache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>;

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, plans) = &mut *guard;
    plans
        .entry((n, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place unnormalized forward FFT.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// In-place inverse FFT including the `1/n` normalization.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, true).process(buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= s);
}

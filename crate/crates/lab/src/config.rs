//! Experiment configuration: a TOML document with dotted sections such as
//! `evolver.dt = 0.004`. Keys are case-sensitive and unknown keys are
//! rejected.

use std::path::Path;

use dnls::evolver::{Dealias, EquationForm, EvolverConfig, Scheme};
use dnls::linearized::Differentiation;
use dnls::modulation::FitOptions;
use dnls::solitons::{validate_multi_config, MultiSolitonConfig};
use dnls::{GridSpec, SolitonParams};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    CheckFormulas,
    EvolveSingle,
    Stability,
    Monotonicity,
    Spectrum,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::CheckFormulas => "check_formulas",
            Scenario::EvolveSingle => "evolve_single",
            Scenario::Stability => "stability",
            Scenario::Monotonicity => "monotonicity",
            Scenario::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    #[default]
    None,
    GaussianBump,
    RandomSmooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MultiSection {
    pub omega: Vec<f64>,
    pub c: Vec<f64>,
    pub x0: Option<Vec<f64>>,
    pub theta0: Option<Vec<f64>>,
    pub separation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default)]
    pub kind: PerturbationKind,
    #[serde(default)]
    pub h1_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub n: usize,
    /// Left edge; defaults to `-length / 2`.
    pub x0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FormName {
    #[default]
    ChenLiuLee,
    KaupNewell,
    Boosted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolverSection {
    #[serde(default)]
    pub form: FormName,
    /// Boost speed, only for `form = "boosted"`.
    pub sigma: Option<f64>,
    #[serde(default)]
    pub scheme: Scheme,
    /// Defaults to `cfl_safety * dx`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub output_dt: f64,
    #[serde(default)]
    pub dealias: Dealias,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
}

fn default_cfl() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        let d = FitOptions::default();
        Self {
            tolerance: d.tolerance,
            max_iter: d.max_iter,
        }
    }
}

/// Bound `eps0_factor·‖ε(0)‖_{H¹} + delta_factor·δ + offset` on
/// `sup_t ‖ε(t)‖_{H¹}`, and a bound on the frequency drift. The constants
/// of the asymptotic bound are not computable, so these are configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub eps0_factor: f64,
    pub delta_factor: f64,
    pub offset: f64,
    pub omega_drift_max: f64,
    /// For `N = 1` the bound is `single_factor·δ`.
    pub single_factor: f64,
    /// Bound on the drift of `Q_j(R̃_j)` in unperturbed runs.
    pub q_drift_tol: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            eps0_factor: 10.0,
            delta_factor: 0.0,
            offset: 0.05,
            omega_drift_max: 0.02,
            single_factor: 5.0,
            q_drift_tol: 1e-5,
        }
    }
}

/// Checks of the `evolve_single` scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SingleSection {
    /// Repeat the run at `dt/2` and report the error ratio.
    pub order_check: bool,
    pub accuracy_tol: f64,
    pub conservation_tol: f64,
    pub dynamical_tol: f64,
    pub order_range: [f64; 2],
}

impl Default for SingleSection {
    fn default() -> Self {
        Self {
            order_check: false,
            accuracy_tol: 1e-5,
            conservation_tol: 1e-8,
            dynamical_tol: 1e-4,
            order_range: [10.0, 22.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonotonicitySection {
    /// `C_mono` in `C_mono (sup ‖ε‖²_{L²} / L + e^{-ω⋆L/16})`.
    pub c_mono: f64,
    /// Absolute bound on `𝓘_j(t) - 𝓘_j(0)`.
    pub abs_tol: f64,
    pub decomposition_tol: f64,
    /// Bound on the drift of `𝓘` for a single soliton.
    pub single_tol: f64,
}

impl Default for MonotonicitySection {
    fn default() -> Self {
        Self {
            c_mono: 10.0,
            abs_tol: 1e-4,
            decomposition_tol: 1e-9,
            single_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub differentiation: Differentiation,
    pub zero_tol: f64,
    pub samples: usize,
    /// Box for the `L₊`/`L₋` kernel residuals, which need a longer and finer
    /// grid than the eigenvalue counts.
    pub kernel_length: f64,
    pub kernel_n: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            differentiation: Differentiation::Spectral,
            zero_tol: 1e-6,
            samples: 200,
            kernel_length: 80.0,
            kernel_n: 2048,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Spill every output snapshot to `snapshots/` in the binary format.
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    pub multi: Option<MultiSection>,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    pub grid: Option<GridSection>,
    pub evolver: Option<EvolverSection>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub single: SingleSection,
    #[serde(default)]
    pub monotonicity: MonotonicitySection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Reads a configuration file and applies `key=value` overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> LabResult<ExperimentConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| LabError::io(p, e))?;
            text.parse::<toml::Table>()
                .map_err(|e| LabError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    from_table(table)
}

pub fn from_str(text: &str) -> LabResult<ExperimentConfig> {
    let table = text
        .parse::<toml::Table>()
        .map_err(|e| LabError::Config(e.to_string()))?;
    from_table(table)
}

fn from_table(table: toml::Table) -> LabResult<ExperimentConfig> {
    if table.contains_key("alpha") {
        return Err(LabError::Config(
            "alpha is derived as omega_star/32 and cannot be set".into(),
        ));
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| LabError::Config(e.message().to_string()))
}

/// Sets a dotted key. The value is read as a TOML value, falling back to a
/// bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> LabResult<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        LabError::Config(format!(
            "override `{assignment}` is not of the form key=value"
        ))
    })?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(LabError::Config(format!("malformed key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| LabError::Config(format!("`{p}` in `{key}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn multi_section(&self) -> LabResult<&MultiSection> {
        self.multi.as_ref().ok_or_else(|| {
            LabError::Config(format!(
                "scenario {} needs a [multi] section",
                self.scenario.name()
            ))
        })
    }

    /// Soliton parameters in input order, without multi-soliton checks.
    pub fn solitons(&self) -> LabResult<Vec<SolitonParams>> {
        let m = self.multi_section()?;
        let n = m.omega.len();
        if n == 0 || m.c.len() != n {
            return Err(LabError::Config(
                "multi.omega and multi.c must be non-empty and of equal length".into(),
            ));
        }
        let sep = m.separation.unwrap_or(0.0);
        let x0 = match &m.x0 {
            Some(x) => x.clone(),
            None => (0..n)
                .map(|j| (j as f64 - 0.5 * (n as f64 - 1.0)) * sep)
                .collect(),
        };
        let theta0 = m.theta0.clone().unwrap_or_else(|| vec![0.0; n]);
        if x0.len() != n || theta0.len() != n {
            return Err(LabError::Config(
                "multi.x0 and multi.theta0 must match multi.omega in length".into(),
            ));
        }
        (0..n)
            .map(|j| {
                SolitonParams::new(m.omega[j], m.c[j], theta0[j], x0[j])
                    .map_err(|e| LabError::Config(format!("soliton {}: {e}", j + 1)))
            })
            .collect()
    }

    /// Validated family for the evolution scenarios. A single soliton needs
    /// no separation.
    pub fn multi_config(&self) -> LabResult<MultiSolitonConfig> {
        let solitons = self.solitons()?;
        let sep = match self.multi_section()?.separation {
            Some(l) => l,
            None if solitons.len() == 1 => 1.0,
            None => {
                return Err(LabError::Config(
                    "multi.separation is required for N > 1".into(),
                ))
            }
        };
        Ok(validate_multi_config(&solitons, sep)?)
    }

    pub fn grid_spec(&self) -> LabResult<GridSpec> {
        let g = self.grid.ok_or_else(|| {
            LabError::Config(format!(
                "scenario {} needs a [grid] section",
                self.scenario.name()
            ))
        })?;
        let x0 = g.x0.unwrap_or(-0.5 * g.length);
        GridSpec::with_offset(g.length, g.n, x0).map_err(|e| LabError::Config(format!("grid: {e}")))
    }

    pub fn evolver_config(&self, grid: &GridSpec) -> LabResult<EvolverConfig> {
        let e = self.evolver.ok_or_else(|| {
            LabError::Config(format!(
                "scenario {} needs an [evolver] section",
                self.scenario.name()
            ))
        })?;
        let form = match (e.form, e.sigma) {
            (FormName::ChenLiuLee, None) => EquationForm::ChenLiuLee,
            (FormName::KaupNewell, None) => EquationForm::KaupNewell,
            (FormName::Boosted, Some(sigma)) => EquationForm::Boosted { sigma },
            (FormName::Boosted, None) => {
                return Err(LabError::Config(
                    "form = \"boosted\" needs evolver.sigma".into(),
                ))
            }
            (_, Some(_)) => {
                return Err(LabError::Config(
                    "evolver.sigma is only valid with form = \"boosted\"".into(),
                ))
            }
        };
        let cfg = EvolverConfig {
            form,
            scheme: e.scheme,
            dt: e.dt.unwrap_or(e.cfl_safety * grid.dx()),
            t_end: e.t_end,
            output_dt: e.output_dt,
            dealias: e.dealias,
            cfl_safety: e.cfl_safety,
        };
        cfg.validate(grid)
            .map_err(|err| LabError::Config(format!("evolver: {err}")))?;
        Ok(cfg)
    }

    pub fn fit_options(&self, separation: Option<f64>) -> FitOptions {
        FitOptions {
            tolerance: self.fit.tolerance,
            max_iter: self.fit.max_iter,
            separation,
        }
    }

    /// Checks that the fields the scenario needs are present and valid.
    pub fn validate(&self) -> LabResult<()> {
        if !(self.perturbation.h1_size.is_finite() && self.perturbation.h1_size >= 0.0) {
            return Err(LabError::Config(format!(
                "perturbation.h1_size must be >= 0, got {}",
                self.perturbation.h1_size
            )));
        }
        match self.scenario {
            Scenario::CheckFormulas | Scenario::Spectrum => {
                if self.multi.is_some() {
                    self.solitons()?;
                }
            }
            Scenario::EvolveSingle | Scenario::Stability | Scenario::Monotonicity => {
                let multi = self.multi_config()?;
                if self.scenario == Scenario::EvolveSingle && multi.len() != 1 {
                    return Err(LabError::Config(
                        "evolve_single takes exactly one soliton".into(),
                    ));
                }
                let g = self.grid_spec()?;
                self.evolver_config(&g)?;
            }
        }
        Ok(())
    }
}

/// `α = ω⋆/32`, never user-set.
pub fn alpha(multi: &MultiSolitonConfig) -> f64 {
    multi.omega_star / 32.0
}

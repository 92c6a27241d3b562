//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{self, ExperimentConfig};
use crate::diagnostics::Report;
use crate::error::{LabError, LabResult};
use crate::scenarios;

#[derive(Debug, Parser)]
#[command(
    name = "dnls-lab",
    version,
    about = "Experiments with derivative NLS solitons"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Output directory; overrides OUTPUT_DIR.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set evolver.dt=0.001`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args, Clone)]
pub struct ConfigRun {
    pub config: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone, Default)]
pub struct PairRun {
    /// Optional configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Frequency; with `--c`, restricts the run to one pair.
    #[arg(long, requires = "c")]
    pub omega: Option<f64>,
    #[arg(long, requires = "omega", allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario named in a configuration file.
    Run(ConfigRun),
    /// Closed forms against quadrature.
    CheckFormulas(PairRun),
    /// Write the profile of one soliton.
    Profile {
        #[arg(long)]
        omega: f64,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, default_value_t = 80.0)]
        length: f64,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Single-soliton evolution.
    Evolve(ConfigRun),
    /// Fit the modulation parameters of the initial datum.
    Fit(ConfigRun),
    /// Spectrum of the linearized operator.
    Spectrum(PairRun),
    Stability(ConfigRun),
    Monotonicity(ConfigRun),
    /// Run several configurations in parallel, one subdirectory each.
    Sweep {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// `--output`, then `OUTPUT_DIR`, then `output`.
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os("OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("output"))
}

fn with_scenario(overrides: &[String], scenario: &str) -> Vec<String> {
    let mut v = overrides.to_vec();
    v.push(format!("scenario = \"{scenario}\""));
    v
}

fn load_pair(run: &PairRun, scenario: &str) -> LabResult<ExperimentConfig> {
    let mut overrides = with_scenario(&run.common.overrides, scenario);
    if let (Some(w), Some(c)) = (run.omega, run.c) {
        overrides.push(format!("multi.omega=[{w:?}]"));
        overrides.push(format!("multi.c=[{c:?}]"));
    }
    config::load(run.config.as_deref(), &overrides)
}

fn emit(report: &Report, dir: &Path) -> LabResult<i32> {
    report.write(dir)?;
    for v in &report.summary.verdicts {
        println!(
            "{} {} = {:.3e} (threshold {:.3e})",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.value,
            v.threshold
        );
    }
    if let Some(f) = &report.summary.failure {
        eprintln!(
            "run stopped{}: {}",
            f.t.map(|t| format!(" at t = {t}")).unwrap_or_default(),
            f.message
        );
        return Ok(1);
    }
    println!("wrote {}", dir.display());
    Ok(0)
}

fn run_config(run: &ConfigRun, scenario: Option<&str>) -> LabResult<i32> {
    let overrides = match scenario {
        Some(s) => with_scenario(&run.common.overrides, s),
        None => run.common.overrides.clone(),
    };
    let cfg = config::load(Some(&run.config), &overrides)?;
    let dir = output_dir(run.common.output.as_deref());
    emit(&scenarios::run(&cfg, &dir)?, &dir)
}

/// Executes a parsed command and returns the process exit status.
pub fn execute(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> LabResult<i32> {
    match cmd {
        Command::Run(r) => run_config(&r, None),
        Command::Evolve(r) => run_config(&r, Some("evolve_single")),
        Command::Stability(r) => run_config(&r, Some("stability")),
        Command::Monotonicity(r) => run_config(&r, Some("monotonicity")),
        Command::Fit(r) => {
            let cfg = config::load(Some(&r.config), &r.common.overrides)?;
            let dir = output_dir(r.common.output.as_deref());
            emit(&scenarios::fit(&cfg)?, &dir)
        }
        Command::CheckFormulas(p) => {
            let cfg = load_pair(&p, "check_formulas")?;
            let dir = output_dir(p.common.output.as_deref());
            emit(&scenarios::run(&cfg, &dir)?, &dir)
        }
        Command::Spectrum(p) => {
            let cfg = load_pair(&p, "spectrum")?;
            let dir = output_dir(p.common.output.as_deref());
            emit(&scenarios::run(&cfg, &dir)?, &dir)
        }
        Command::Profile {
            omega,
            c,
            length,
            n,
            common,
        } => {
            let g =
                dnls::grid::make_grid(length, n).map_err(|e| LabError::Config(e.to_string()))?;
            let dir = output_dir(common.output.as_deref());
            emit(&scenarios::profile(omega, c, &g)?, &dir)
        }
        Command::Sweep { configs, common } => {
            let mut loaded = Vec::with_capacity(configs.len());
            for path in &configs {
                let cfg = config::load(Some(path), &common.overrides)?;
                cfg.validate()?;
                let stem = path
                    .file_stem()
                    .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
                loaded.push((stem, cfg));
            }
            let dir = output_dir(common.output.as_deref());
            let mut code = 0;
            for (name, res) in scenarios::sweep(loaded, &dir) {
                match res {
                    Ok(r) => {
                        let failed = r.summary.failure.is_some();
                        println!("{} {name}", if r.summary.pass { "PASS" } else { "FAIL" });
                        if failed {
                            code = code.max(1);
                        }
                    }
                    Err(e) => {
                        eprintln!("{name}: {e}");
                        code = code.max(e.exit_code());
                    }
                }
            }
            Ok(code)
        }
    }
}

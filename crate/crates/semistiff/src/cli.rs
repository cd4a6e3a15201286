//! Argument definitions and the validated run records built from flags and
//! the config file.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use semistiff_core::flow::FlowConfig;
use semistiff_core::grid::{AnnulusSpec, PolarGrid, Spacing};
use semistiff_core::radial::Coupling;

use crate::config::{require, resolve, Config};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "semistiff",
    version,
    about = "Semi-stiff Ginzburg-Landau experiments on annuli"
)]
pub struct Cli {
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Flat key = value file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. The solvers run sequentially, so only 1 changes nothing.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial modulus profile.
    Radial(RadialArgs),
    /// Projected descent from a test field.
    Flow(FlowArgs),
    /// Q_p roots, beta_p and the threshold plot.
    Thresholds(ThresholdArgs),
    /// Table of the Fourier-mode bounds with oracle deltas.
    Spectral(SpectralArgs),
    /// Energy and degrees of a field.
    Energy(EnergyArgs),
    /// Lower-bound ledger of an outer trace.
    Ledger(LedgerArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RadialArgs {
    #[arg(long = "R")]
    pub r: Option<f64>,
    #[arg(long)]
    pub p: Option<i32>,
    /// `inf` for the harmonic limit.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    #[arg(long = "R")]
    pub r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<i64>,
    #[arg(long)]
    pub n_radial: Option<usize>,
    #[arg(long)]
    pub n_angular: Option<usize>,
    /// `uniform` or `cosine`.
    #[arg(long)]
    pub spacing: Option<Spacing>,
    /// `radial` (radial solution of degree q with outer bubbles), `bubbles`
    /// (bubbles on the constant field), `blend` (`e^{iqθ}` times a radial
    /// blend from `e^{i(p−q)θ}` on the outer ring to 1 on the inner one) or
    /// `auto` (`radial` for p = q, else `blend`).
    #[arg(long)]
    pub init: Option<Init>,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long)]
    pub perturbation: Option<f64>,
    #[arg(long)]
    pub check_interval: Option<usize>,
    #[arg(long)]
    pub halt_on_escape: Option<bool>,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p_max: Option<i64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectralArgs {
    #[arg(long = "R")]
    pub r: Option<f64>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub k_min: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k_max: Option<i64>,
    #[arg(long)]
    pub oracle_nodes: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Field CSV to evaluate instead of building one.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LedgerArgs {
    #[arg(long = "R")]
    pub r: Option<f64>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub q: Option<u32>,
    /// Field CSV whose outer trace is expanded; default is the pure mode
    /// `e^{ipθ}`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Auto,
    Radial,
    Bubbles,
    Blend,
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Init::Auto => "auto",
            Init::Radial => "radial",
            Init::Bubbles => "bubbles",
            Init::Blend => "blend",
        })
    }
}

impl FromStr for Init {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(Init::Auto),
            "radial" => Ok(Init::Radial),
            "bubbles" => Ok(Init::Bubbles),
            "blend" => Ok(Init::Blend),
            other => Err(format!(
                "unknown init {other:?} (auto, radial, bubbles or blend)"
            )),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn coupling(eps: f64) -> Result<Coupling, CliError> {
    Ok(Coupling::new(eps)?)
}

fn store(c: &mut Config, key: &str, value: impl fmt::Display) {
    // Every stored value is a number, a bool or a fixed keyword.
    c.set(key, value).expect("plain config value");
}

/// Parameters of `radial`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRun {
    pub r: f64,
    pub p: i32,
    pub eps: f64,
    pub nodes: usize,
    pub tol: f64,
}

impl RadialRun {
    pub fn resolve(a: &RadialArgs, c: &Config) -> Result<Self, CliError> {
        let run = Self {
            r: require(a.r, c, "R")?,
            p: require(a.p, c, "p")?,
            eps: resolve(a.eps, c, "eps", f64::INFINITY)?,
            nodes: resolve(a.nodes, c, "nodes", 256)?,
            tol: resolve(a.tol, c, "tol", 1e-10)?,
        };
        run.validate()?;
        Ok(run)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        AnnulusSpec::new(self.r)?;
        coupling(self.eps)?;
        if self.p < 1 {
            return Err(usage(format!("p must be >= 1, got {}", self.p)));
        }
        if self.nodes < 32 {
            return Err(usage(format!("nodes must be >= 32, got {}", self.nodes)));
        }
        if !(self.tol > 0.0) {
            return Err(usage("tol must be positive"));
        }
        Ok(())
    }

    pub fn to_config(&self) -> Config {
        let mut c = Config::default();
        store(&mut c, "R", self.r);
        store(&mut c, "p", self.p);
        store(&mut c, "eps", self.eps);
        store(&mut c, "nodes", self.nodes);
        store(&mut c, "tol", self.tol);
        c
    }
}

/// Degrees, grid and initial-field recipe shared by `flow` and `energy`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRun {
    pub r: f64,
    pub p: i64,
    pub q: i64,
    pub n_radial: usize,
    pub n_angular: usize,
    pub spacing: Spacing,
    pub init: Init,
}

impl FieldRun {
    pub fn resolve(a: &FieldArgs, c: &Config) -> Result<Self, CliError> {
        let run = Self {
            r: require(a.r, c, "R")?,
            p: require(a.p, c, "p")?,
            q: require(a.q, c, "q")?,
            n_radial: resolve(a.n_radial, c, "n_radial", 64)?,
            n_angular: resolve(a.n_angular, c, "n_angular", 256)?,
            spacing: resolve(a.spacing, c, "spacing", Spacing::Uniform)?,
            init: resolve(a.init, c, "init", Init::Auto)?,
        };
        run.grid()?;
        Ok(run)
    }

    pub fn grid(&self) -> Result<PolarGrid, CliError> {
        Ok(PolarGrid::new(
            AnnulusSpec::new(self.r)?,
            self.n_radial,
            self.n_angular,
            self.spacing,
        )?)
    }

    fn store(&self, c: &mut Config) {
        store(c, "R", self.r);
        store(c, "p", self.p);
        store(c, "q", self.q);
        store(c, "n_radial", self.n_radial);
        store(c, "n_angular", self.n_angular);
        store(c, "spacing", self.spacing);
        store(c, "init", self.init);
    }
}

/// Parameters of `flow`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    pub field: FieldRun,
    pub eps: f64,
    pub flow: FlowConfig,
}

impl FlowRun {
    pub fn resolve(a: &FlowArgs, c: &Config, seed: u64) -> Result<Self, CliError> {
        let d = FlowConfig::default();
        let run = Self {
            field: FieldRun::resolve(&a.field, c)?,
            eps: resolve(a.eps, c, "eps", f64::INFINITY)?,
            flow: FlowConfig {
                step_size: resolve(a.step, c, "step", d.step_size)?,
                max_iterations: resolve(a.max_iter, c, "max_iter", 500)?,
                grad_tol: resolve(a.grad_tol, c, "grad_tol", 1e-6)?,
                degree_check_interval: resolve(
                    a.check_interval,
                    c,
                    "check_interval",
                    d.degree_check_interval,
                )?,
                seed,
                perturbation: resolve(a.perturbation, c, "perturbation", d.perturbation)?,
                halt_on_escape: resolve(a.halt_on_escape, c, "halt_on_escape", d.halt_on_escape)?,
            },
        };
        run.flow.validate(coupling(run.eps)?)?;
        Ok(run)
    }

    pub fn to_config(&self) -> Config {
        let mut c = Config::default();
        self.field.store(&mut c);
        store(&mut c, "eps", self.eps);
        store(&mut c, "step", self.flow.step_size);
        store(&mut c, "max_iter", self.flow.max_iterations);
        store(&mut c, "grad_tol", self.flow.grad_tol);
        store(&mut c, "check_interval", self.flow.degree_check_interval);
        store(&mut c, "seed", self.flow.seed);
        store(&mut c, "perturbation", self.flow.perturbation);
        store(&mut c, "halt_on_escape", self.flow.halt_on_escape);
        c
    }
}

/// Parameters of `thresholds`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRun {
    pub p_max: u32,
    pub gamma: f64,
}

impl ThresholdRun {
    pub fn resolve(a: &ThresholdArgs, c: &Config) -> Result<Self, CliError> {
        let p_max: i64 = require(a.p_max, c, "p_max")?;
        if !(1..=64).contains(&p_max) {
            return Err(usage(format!("p_max must lie in 1..=64, got {p_max}")));
        }
        let gamma = resolve(
            a.gamma,
            c,
            "gamma",
            semistiff_core::thresholds::DEFAULT_GAMMA,
        )?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(usage("gamma must be positive"));
        }
        Ok(Self {
            p_max: p_max as u32,
            gamma,
        })
    }

    pub fn to_config(&self) -> Config {
        let mut c = Config::default();
        store(&mut c, "p_max", self.p_max);
        store(&mut c, "gamma", self.gamma);
        c
    }
}

/// Parameters of `spectral`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRun {
    pub r: f64,
    pub q: u32,
    pub k_min: i64,
    pub k_max: i64,
    pub oracle_nodes: usize,
}

impl SpectralRun {
    pub fn resolve(a: &SpectralArgs, c: &Config) -> Result<Self, CliError> {
        let run = Self {
            r: require(a.r, c, "R")?,
            q: require(a.q, c, "q")?,
            k_min: require(a.k_min, c, "k_min")?,
            k_max: require(a.k_max, c, "k_max")?,
            oracle_nodes: resolve(
                a.oracle_nodes,
                c,
                "oracle_nodes",
                semistiff_core::spectral::ORACLE_NODES,
            )?,
        };
        AnnulusSpec::new(run.r)?;
        if run.q < 1 {
            return Err(usage("q must be >= 1"));
        }
        if run.k_min > run.k_max {
            return Err(usage("k_min must not exceed k_max"));
        }
        if run.k_max - run.k_min > 10_000 {
            return Err(usage("at most 10001 modes per table"));
        }
        if run.oracle_nodes < 3 {
            return Err(usage("oracle_nodes must be >= 3"));
        }
        Ok(run)
    }

    pub fn to_config(&self) -> Config {
        let mut c = Config::default();
        store(&mut c, "R", self.r);
        store(&mut c, "q", self.q);
        store(&mut c, "k_min", self.k_min);
        store(&mut c, "k_max", self.k_max);
        store(&mut c, "oracle_nodes", self.oracle_nodes);
        c
    }
}

/// Parameters of `energy`.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergySource {
    File(PathBuf),
    Built(FieldRun),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRun {
    pub source: EnergySource,
    pub eps: f64,
}

impl EnergyRun {
    pub fn resolve(a: &EnergyArgs, c: &Config) -> Result<Self, CliError> {
        let input: Option<PathBuf> = match &a.input {
            Some(p) => Some(p.clone()),
            None => c.get("input")?,
        };
        let source = match input {
            Some(path) => EnergySource::File(path),
            None => EnergySource::Built(FieldRun::resolve(&a.field, c)?),
        };
        let eps = resolve(a.eps, c, "eps", f64::INFINITY)?;
        coupling(eps)?;
        Ok(Self { source, eps })
    }

    pub fn to_config(&self) -> Config {
        let mut c = Config::default();
        match &self.source {
            EnergySource::File(p) => store(&mut c, "input", p.display()),
            EnergySource::Built(f) => f.store(&mut c),
        }
        store(&mut c, "eps", self.eps);
        c
    }
}

/// Parameters of `ledger`.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRun {
    pub r: f64,
    pub p: u32,
    pub q: u32,
    pub input: Option<PathBuf>,
}

impl LedgerRun {
    pub fn resolve(a: &LedgerArgs, c: &Config) -> Result<Self, CliError> {
        let run = Self {
            r: require(a.r, c, "R")?,
            p: require(a.p, c, "p")?,
            q: require(a.q, c, "q")?,
            input: match &a.input {
                Some(p) => Some(p.clone()),
                None => c.get("input")?,
            },
        };
        AnnulusSpec::new(run.r)?;
        if !(run.p > run.q && run.q >= 1) {
            return Err(usage(format!(
                "ledger needs p > q >= 1, got ({}, {})",
                run.p, run.q
            )));
        }
        Ok(run)
    }

    pub fn to_config(&self) -> Config {
        let mut c = Config::default();
        store(&mut c, "R", self.r);
        store(&mut c, "p", self.p);
        store(&mut c, "q", self.q);
        if let Some(p) = &self.input {
            store(&mut c, "input", p.display());
        }
        c
    }
}

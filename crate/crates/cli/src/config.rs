//! Run configuration: a flat TOML file whose keys can each be overridden by a flag.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use recdiff::montecarlo::{hex_digest, InitRule, MonteCarloConfig};
use recdiff::{make_grid, DriftSpec, ObservationGrid, StepRule};
use serde::Deserialize;

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Estimate,
    Montecarlo,
    Check,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftKind {
    Zero,
    Constant,
    Sinusoidal,
    Ou,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Uniform,
    Fixed,
}

/// Every configurable key. Used both for the file and the flags.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keys {
    /// Workflow to run
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Number of increments
    #[arg(long)]
    pub n: Option<usize>,
    /// Explicit sampling step
    #[arg(long)]
    pub h: Option<f64>,
    /// Step exponent gamma, h = n^(-gamma)
    #[arg(long = "h_exponent", alias = "h-exponent")]
    pub h_exponent: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long, value_enum)]
    pub drift: Option<DriftKind>,
    /// OU mean reversion
    #[arg(long)]
    pub kappa: Option<f64>,
    /// OU long-run level
    #[arg(long, allow_hyphen_values = true)]
    pub level: Option<f64>,
    /// OU volatility
    #[arg(long = "sigma_mu", alias = "sigma-mu")]
    pub sigma_mu: Option<f64>,
    /// OU initial value (stationary start when absent)
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Angular frequency of the sinusoidal drift
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Quadrature substeps per interval
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Monte Carlo trials
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub trials: Option<usize>,
    #[arg(long = "init_rule", alias = "init-rule", value_enum)]
    pub init_rule: Option<InitKind>,
    #[arg(long = "init_value", alias = "init-value")]
    pub init_value: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "out_dir", alias = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Input CSV (estimate: increments; report: mc_finals.csv)
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(
    name = "recdiff",
    version,
    about = "Recursive diffusion-coefficient estimation"
)]
pub struct Cli {
    /// Flat TOML config file
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub keys: Keys,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl Keys {
    pub fn from_file(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &Keys) -> Self {
        overlay!(
            self, top, command, n, h, h_exponent, alpha0, beta0, drift, kappa, level, sigma_mu,
            mu0, amplitude, omega, substeps, trials, init_rule, init_value, seed, out_dir, input
        );
        self
    }
}

pub const DEFAULT_N: usize = 500;
pub const DEFAULT_EXPONENT: f64 = 0.75;
pub const DEFAULT_ALPHA0: f64 = -1.0;
pub const DEFAULT_BETA0: f64 = 3.0;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_SEED: u64 = 1;

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub step_rule: StepRule,
    /// Whether `h` or `h_exponent` was given explicitly.
    pub step_explicit: bool,
    pub alpha0: f64,
    pub beta0: f64,
    pub drift: DriftSpec,
    /// Whether `drift` was given explicitly.
    pub drift_explicit: bool,
    pub substeps: usize,
    pub trials: usize,
    pub init_rule: InitRule,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub input: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<f64, AppError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(AppError::Config(format!(
            "`{name}` must be positive, got {v}"
        )))
    }
}

fn required(name: &str, v: Option<f64>, drift: &str) -> Result<f64, AppError> {
    v.ok_or_else(|| AppError::Config(format!("drift `{drift}` requires key `{name}`")))
}

impl RunConfig {
    pub fn resolve(keys: &Keys) -> Result<Self, AppError> {
        let command = keys.command.ok_or_else(|| {
            AppError::Config(
                "no command given (simulate, estimate, montecarlo, check, report)".into(),
            )
        })?;
        let n = keys.n.unwrap_or(DEFAULT_N);
        if n == 0 {
            return Err(AppError::Config("`n` must be at least 1".into()));
        }
        let step_rule = match (keys.h, keys.h_exponent) {
            (Some(_), Some(_)) => {
                return Err(AppError::Config(
                    "give either `h` or `h_exponent`, not both".into(),
                ))
            }
            (Some(h), None) => StepRule::Explicit(positive("h", h)?),
            (None, Some(g)) => {
                if !(g > 0.0 && g < 1.0) {
                    return Err(AppError::Config(format!(
                        "`h_exponent` must lie in (0, 1), got {g}"
                    )));
                }
                StepRule::Exponent(g)
            }
            (None, None) => StepRule::Exponent(DEFAULT_EXPONENT),
        };
        let alpha0 = keys.alpha0.unwrap_or(DEFAULT_ALPHA0);
        if !alpha0.is_finite() {
            return Err(AppError::Config("`alpha0` must be finite".into()));
        }
        let beta0 = positive("beta0", keys.beta0.unwrap_or(DEFAULT_BETA0))?;
        let drift = match keys.drift.unwrap_or(DriftKind::Constant) {
            DriftKind::Zero => DriftSpec::Zero,
            DriftKind::Constant => DriftSpec::Constant { alpha: alpha0 },
            DriftKind::Sinusoidal => DriftSpec::Sinusoidal {
                amplitude: required("amplitude", keys.amplitude, "sinusoidal")?,
                angular_frequency: required("omega", keys.omega, "sinusoidal")?,
            },
            DriftKind::Ou => DriftSpec::OrnsteinUhlenbeck {
                kappa: required("kappa", keys.kappa, "ou")?,
                level: keys.level.unwrap_or(0.0),
                sigma: required("sigma_mu", keys.sigma_mu, "ou")?,
                initial: keys.mu0,
            },
        };
        drift
            .validate()
            .map_err(|e| AppError::Config(e.to_string()))?;
        let substeps = keys.substeps.unwrap_or(recdiff::simulate::DEFAULT_SUBSTEPS);
        if substeps == 0 {
            return Err(AppError::Config("`substeps` must be at least 1".into()));
        }
        let trials = keys.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(AppError::Config("`L` must be at least 1".into()));
        }
        let init_rule = match (keys.init_rule, keys.init_value) {
            (Some(InitKind::Fixed), Some(v)) | (None, Some(v)) => {
                let v = positive("init_value", v)?;
                if !recdiff::ParamDomain::default().contains(v) {
                    return Err(AppError::Config(format!(
                        "`init_value` {v} is below the parameter floor"
                    )));
                }
                InitRule::Fixed(v)
            }
            (Some(InitKind::Fixed), None) => {
                return Err(AppError::Config(
                    "`init_rule = fixed` requires `init_value`".into(),
                ))
            }
            (Some(InitKind::Uniform), Some(_)) => {
                return Err(AppError::Config(
                    "`init_value` conflicts with `init_rule = uniform`".into(),
                ))
            }
            (Some(InitKind::Uniform), None) | (None, None) => InitRule::UniformRelative,
        };
        Ok(Self {
            command,
            n,
            step_rule,
            step_explicit: keys.h.is_some() || keys.h_exponent.is_some(),
            alpha0,
            beta0,
            drift,
            drift_explicit: keys.drift.is_some(),
            substeps,
            trials,
            init_rule,
            seed: keys.seed.unwrap_or(DEFAULT_SEED),
            out_dir: keys.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            input: keys.input.clone(),
        })
    }

    pub fn grid(&self) -> Result<ObservationGrid, AppError> {
        make_grid(self.n, self.step_rule).map_err(AppError::from)
    }

    pub fn montecarlo(&self) -> MonteCarloConfig {
        MonteCarloConfig {
            trials: self.trials,
            n: self.n,
            step_rule: self.step_rule,
            alpha0: self.alpha0,
            beta0: self.beta0,
            init_rule: self.init_rule,
            master_seed: self.seed,
            drift: self.drift.clone(),
            substeps: self.substeps,
        }
    }

    /// Hash of the model and design parameters; output and input paths excluded.
    pub fn config_hash(&self) -> String {
        let canonical = format!(
            "command={:?};n={};step={:?};alpha0={:?};beta0={:?};drift={:?};substeps={};L={};init={:?};seed={}",
            self.command,
            self.n,
            self.step_rule,
            self.alpha0,
            self.beta0,
            self.drift,
            self.substeps,
            self.trials,
            self.init_rule,
            self.seed
        );
        hex_digest(canonical.as_bytes())
    }
}

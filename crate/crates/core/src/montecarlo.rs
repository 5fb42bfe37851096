//! Repeated simulate-then-estimate trials with seeded per-trial streams.
//!
//! Trial `l` (1-based) draws everything from `RngStream(master_seed, l)`:
//! first one uniform for the initial value, then the path. Trials run in
//! parallel when the `parallel` feature is on; aggregation always walks the
//! trials in index order, so results are bit-identical across execution modes.

use sha2::{Digest, Sha256};

use crate::error::{require_positive, Error, Result};
use crate::estimate::recursive_run;
use crate::model::{
    check_assumption1, make_grid, AssumptionReport, ObservationGrid, ParamDomain, StepRule,
};
use crate::rng::{RngStream, StreamRng, GENERATOR};
use crate::simulate::{
    simulate_constant_drift, simulate_general_drift, DriftSpec, DEFAULT_SUBSTEPS,
};
use crate::sum::{compensated_sum, mean_sd, NeumaierSum};
use crate::theory::{ks_normality, qq_pairs, w_statistic, NormalityCheck};

/// Minimum number of trials for [`scaled_error_variance`].
pub const MIN_VARIANCE_TRIALS: usize = 30;

/// How the initial estimate of each trial is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitRule {
    /// `beta0 (1 + U)`, `U ~ Uniform(-0.5, 0.5)`.
    UniformRelative,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub n: usize,
    pub step_rule: StepRule,
    pub alpha0: f64,
    pub beta0: f64,
    pub init_rule: InitRule,
    pub master_seed: u64,
    pub drift: DriftSpec,
    pub substeps: usize,
}

impl MonteCarloConfig {
    /// Constant drift `alpha0`, `h = n^(-3/4)`, 100 trials, uniform start.
    pub fn new(n: usize, alpha0: f64, beta0: f64, master_seed: u64) -> Self {
        Self {
            trials: 100,
            n,
            step_rule: StepRule::Exponent(0.75),
            alpha0,
            beta0,
            init_rule: InitRule::UniformRelative,
            master_seed,
            drift: DriftSpec::Constant { alpha: alpha0 },
            substeps: DEFAULT_SUBSTEPS,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_init_rule(mut self, rule: InitRule) -> Self {
        self.init_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<ObservationGrid> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig(
                "number of trials L must be at least 1".into(),
            ));
        }
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta0 must be positive, got {}",
                self.beta0
            )));
        }
        if !self.alpha0.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "alpha0 must be finite, got {}",
                self.alpha0
            )));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be at least 1".into()));
        }
        self.drift
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let domain = ParamDomain::default();
        match self.init_rule {
            InitRule::Fixed(v) if !(domain.contains(v) && v.is_finite()) => {
                return Err(Error::InvalidConfig(format!(
                    "fixed initial value {v} lies outside the parameter domain"
                )));
            }
            InitRule::UniformRelative if !domain.contains(0.5 * self.beta0) => {
                return Err(Error::InvalidConfig(
                    "uniform initial values would leave the parameter domain".into(),
                ));
            }
            _ => {}
        }
        make_grid(self.n, self.step_rule)
    }

    /// Canonical `key=value` rendering, the input of [`config_hash`](Self::config_hash).
    pub fn canonical(&self) -> String {
        let step = match self.step_rule {
            StepRule::Explicit(h) => format!("h={h:?}"),
            StepRule::Exponent(g) => format!("h_exponent={g:?}"),
        };
        let init = match self.init_rule {
            InitRule::UniformRelative => "init_rule=uniform".to_string(),
            InitRule::Fixed(v) => format!("init_rule=fixed;init_value={v:?}"),
        };
        format!(
            "L={};n={};{step};alpha0={:?};beta0={:?};{init};seed={};drift={:?};substeps={};generator={GENERATOR}",
            self.trials, self.n, self.alpha0, self.beta0, self.master_seed, self.drift, self.substeps
        )
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn config_hash(&self) -> String {
        hex_digest(self.canonical().as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub beta_init: f64,
    pub betas: Vec<f64>,
}

impl TrialOutcome {
    pub fn final_estimate(&self) -> f64 {
        *self.betas.last().expect("non-empty trajectory")
    }
}

/// Trial-level aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub config: MonteCarloConfig,
    pub grid: ObservationGrid,
    pub assumption1: Option<AssumptionReport>,
    pub mean_trajectory: Vec<f64>,
    pub sd_trajectory: Vec<f64>,
    pub initial_values: Vec<f64>,
    pub final_estimates: Vec<f64>,
    pub w_sample: Vec<f64>,
    /// `None` when there are fewer trials than the KS test accepts.
    pub normality: Option<NormalityCheck>,
    pub qq_pairs: Vec<(f64, f64)>,
    pub mean_final: f64,
    pub sd_final: f64,
    pub master_seed: u64,
    pub generator: &'static str,
}

impl MonteCarloSummary {
    pub fn variance_check(&self) -> Result<f64> {
        scaled_error_variance(&self.final_estimates, self.config.beta0, self.grid.n())
    }
}

/// Sample variance (divisor `L - 1`) of `sqrt(n) (beta_hat - beta0)`; reference `2 beta0^2`.
pub fn scaled_error_variance(final_estimates: &[f64], beta0: f64, n: usize) -> Result<f64> {
    require_positive("beta0", beta0)?;
    if final_estimates.len() < MIN_VARIANCE_TRIALS {
        return Err(Error::InsufficientData(format!(
            "variance check needs at least {MIN_VARIANCE_TRIALS} trials, got {}",
            final_estimates.len()
        )));
    }
    let root_n = (n as f64).sqrt();
    let scaled: Vec<f64> = final_estimates
        .iter()
        .map(|b| root_n * (b - beta0))
        .collect();
    let (_, sd) = mean_sd(&scaled);
    Ok(sd * sd)
}

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Runs trial `trial` (1-based stream id).
pub fn run_trial(
    config: &MonteCarloConfig,
    grid: &ObservationGrid,
    trial: u64,
) -> Result<TrialOutcome> {
    let mut rng = RngStream::new(config.master_seed, trial).rng();
    let beta_init = draw_initial_value(config, &mut rng);
    let path = match config.drift {
        DriftSpec::Constant { alpha } => {
            simulate_constant_drift(grid, alpha, config.beta0, &mut rng)?
        }
        ref other => simulate_general_drift(grid, other, config.beta0, config.substeps, &mut rng)?,
    };
    let trajectory = recursive_run(path.increments(), beta_init)?;
    Ok(TrialOutcome {
        trial,
        beta_init,
        betas: trajectory.into_betas(),
    })
}

// The uniform is consumed under every rule so paths do not depend on the rule.
fn draw_initial_value(config: &MonteCarloConfig, rng: &mut StreamRng) -> f64 {
    let u = rng.uniform() - 0.5;
    match config.init_rule {
        InitRule::UniformRelative => config.beta0 + config.beta0 * u,
        InitRule::Fixed(v) => v,
    }
}

pub fn run_all_trials(
    config: &MonteCarloConfig,
    grid: &ObservationGrid,
    execution: Execution,
) -> Result<Vec<TrialOutcome>> {
    let ids = 1..=config.trials as u64;
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            ids.into_par_iter()
                .map(|l| run_trial(config, grid, l))
                .collect()
        }
        _ => ids.map(|l| run_trial(config, grid, l)).collect(),
    }
}

pub fn run_trials(config: &MonteCarloConfig) -> Result<MonteCarloSummary> {
    run_trials_with(config, Execution::default())
}

pub fn run_trials_with(
    config: &MonteCarloConfig,
    execution: Execution,
) -> Result<MonteCarloSummary> {
    let grid = config.validate()?;
    let outcomes = run_all_trials(config, &grid, execution)?;
    summarize(config, &grid, &outcomes)
}

/// Aggregates outcomes in the order given.
pub fn summarize(
    config: &MonteCarloConfig,
    grid: &ObservationGrid,
    outcomes: &[TrialOutcome],
) -> Result<MonteCarloSummary> {
    if outcomes.is_empty() {
        return Err(Error::InsufficientData("no trials to summarize".into()));
    }
    let steps = grid.n() + 1;
    let count = outcomes.len() as f64;
    let mut mean_trajectory = Vec::with_capacity(steps);
    let mut sd_trajectory = Vec::with_capacity(steps);
    for j in 0..steps {
        let mean = compensated_sum(outcomes.iter().map(|o| o.betas[j])) / count;
        let sd = if outcomes.len() > 1 {
            let ss: NeumaierSum = outcomes
                .iter()
                .map(|o| (o.betas[j] - mean) * (o.betas[j] - mean))
                .collect();
            (ss.total() / (count - 1.0)).sqrt()
        } else {
            0.0
        };
        mean_trajectory.push(mean);
        sd_trajectory.push(sd);
    }

    let initial_values: Vec<f64> = outcomes.iter().map(|o| o.beta_init).collect();
    let final_estimates: Vec<f64> = outcomes.iter().map(TrialOutcome::final_estimate).collect();
    let w_sample = final_estimates
        .iter()
        .map(|&b| w_statistic(b, config.beta0, grid.n()))
        .collect::<Result<Vec<_>>>()?;
    let (mean_final, sd_final) = mean_sd(&final_estimates);
    let normality = match ks_normality(&w_sample) {
        Ok(check) => Some(check),
        Err(Error::InsufficientData(_)) => None,
        Err(e) => return Err(e),
    };

    Ok(MonteCarloSummary {
        config: config.clone(),
        grid: *grid,
        assumption1: check_assumption1(grid).ok(),
        mean_trajectory,
        sd_trajectory,
        initial_values,
        qq_pairs: qq_pairs(&w_sample),
        final_estimates,
        w_sample,
        normality,
        mean_final,
        sd_final,
        master_seed: config.master_seed,
        generator: GENERATOR,
    })
}

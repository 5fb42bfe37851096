//! Batch quasi-MLE and the recursive (update-form) estimator of `beta`.
//!
//! The recursive estimator is the stochastic-approximation step
//!
//! ```text
//! beta_j = beta_{j-1} + V(beta_{j-1}) / a_j^2 * score_j(beta_{j-1})
//! ```
//!
//! with `V(beta) = 2 beta^2`, `a_j^2 = j` and the Gaussian quasi-score, which
//! collapses to `(1 - 1/j) beta_{j-1} + dX_j^2 / (j h)`.

use std::f64::consts::PI;

use crate::error::{require_positive, Error, Result};
use crate::model::{IncrementSeries, ObservationGrid, ParamDomain};
use crate::sum::NeumaierSum;

/// Which procedure produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    GeneralRecursion,
    BatchRunning,
}

/// Estimates `beta_0 .. beta_n` over one increment series.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorTrajectory {
    grid: ObservationGrid,
    betas: Vec<f64>,
    method: Method,
}

impl EstimatorTrajectory {
    pub fn grid(&self) -> &ObservationGrid {
        &self.grid
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn final_estimate(&self) -> f64 {
        *self
            .betas
            .last()
            .expect("trajectory holds n + 1 >= 2 values")
    }

    /// `d_j = beta_j - beta0`.
    pub fn deviations(&self, beta0: f64) -> Vec<f64> {
        self.betas.iter().map(|b| b - beta0).collect()
    }

    pub fn into_betas(self) -> Vec<f64> {
        self.betas
    }
}

fn nonempty(increments: &IncrementSeries) -> Result<()> {
    if increments.is_empty() {
        Err(Error::InsufficientData("empty increment series".into()))
    } else {
        Ok(())
    }
}

/// `(1/T) sum_j dX_j^2`.
pub fn qmle_batch(increments: &IncrementSeries) -> Result<f64> {
    nonempty(increments)?;
    let ss: NeumaierSum = increments.values().iter().map(|d| d * d).collect();
    Ok(ss.total() / increments.grid().horizon())
}

/// Gaussian quasi-log-likelihood ignoring the drift.
pub fn quasi_loglik(increments: &IncrementSeries, beta: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    let h = increments.grid().step();
    let var = beta * h;
    let norm = -0.5 * (2.0 * PI * var).ln();
    let terms: NeumaierSum = increments
        .values()
        .iter()
        .map(|d| norm - d * d / (2.0 * var))
        .collect();
    Ok(terms.total())
}

/// Derivative in `beta` of one quasi-log-likelihood term.
pub fn score_diffusion(beta: f64, dx: f64, h: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    require_positive("h", h)?;
    Ok(-1.0 / (2.0 * beta) + dx * dx / (2.0 * h * beta * beta))
}

/// One step of the closed-form update.
///
/// `beta_prev` may be zero: after a zero first increment the trajectory sits
/// at 0 until a nonzero increment arrives.
pub fn recursive_step(beta_prev: f64, j: usize, dx: f64, h: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidIndex("update index j starts at 1".into()));
    }
    if !(beta_prev >= 0.0 && beta_prev.is_finite()) {
        return Err(Error::Domain(format!(
            "previous estimate must be >= 0, got {beta_prev}"
        )));
    }
    require_positive("h", h)?;
    let jf = j as f64;
    Ok((1.0 - 1.0 / jf) * beta_prev + dx * dx / (jf * h))
}

/// Runs the closed-form update from `beta_init` over every increment.
pub fn recursive_run(increments: &IncrementSeries, beta_init: f64) -> Result<EstimatorTrajectory> {
    recursive_run_in(increments, beta_init, &ParamDomain::default())
}

pub fn recursive_run_in(
    increments: &IncrementSeries,
    beta_init: f64,
    domain: &ParamDomain,
) -> Result<EstimatorTrajectory> {
    nonempty(increments)?;
    if !domain.contains(beta_init) || !beta_init.is_finite() {
        return Err(Error::Domain(format!(
            "initial value {beta_init} lies outside [{}, {}]",
            domain.lower(),
            domain.upper()
        )));
    }
    let h = increments.grid().step();
    let mut betas = Vec::with_capacity(increments.len() + 1);
    let mut beta = beta_init;
    betas.push(beta);
    for (i, &dx) in increments.values().iter().enumerate() {
        beta = recursive_step(beta, i + 1, dx, h)?;
        betas.push(beta);
    }
    Ok(EstimatorTrajectory {
        grid: *increments.grid(),
        betas,
        method: Method::ClosedForm,
    })
}

/// Running quasi-MLE `(1/(j h)) sum_{k<=j} dX_k^2` with compensated sums.
///
/// Slot 0 holds the placeholder 0, the running estimate being undefined there.
pub fn qmle_running(increments: &IncrementSeries) -> Result<EstimatorTrajectory> {
    nonempty(increments)?;
    let h = increments.grid().step();
    let mut betas = Vec::with_capacity(increments.len() + 1);
    betas.push(0.0);
    let mut acc = NeumaierSum::new();
    for (i, &dx) in increments.values().iter().enumerate() {
        acc.add(dx * dx);
        betas.push(acc.total() / ((i + 1) as f64 * h));
    }
    Ok(EstimatorTrajectory {
        grid: *increments.grid(),
        betas,
        method: Method::BatchRunning,
    })
}

/// Ingredients of a generic update `beta + V(beta)/a2(j) * score(beta, dx, h)`.
pub struct RecursionSpec<V, A, S> {
    pub variance: V,
    pub normalizer: A,
    pub score: S,
    pub domain: ParamDomain,
}

pub type DiffusionRecursion =
    RecursionSpec<fn(f64) -> f64, fn(usize) -> f64, fn(f64, f64, f64) -> Result<f64>>;

fn diffusion_variance(beta: f64) -> f64 {
    2.0 * beta * beta
}

fn diffusion_normalizer(j: usize) -> f64 {
    j as f64
}

impl DiffusionRecursion {
    /// `V = 2 beta^2`, `a_j^2 = j`, Gaussian quasi-score, default domain.
    pub fn diffusion() -> Self {
        RecursionSpec {
            variance: diffusion_variance,
            normalizer: diffusion_normalizer,
            score: score_diffusion,
            domain: ParamDomain::default(),
        }
    }
}

impl<V, A, S> RecursionSpec<V, A, S>
where
    V: Fn(f64) -> f64,
    A: Fn(usize) -> f64,
    S: Fn(f64, f64, f64) -> Result<f64>,
{
    /// One generic update, projected onto the domain.
    pub fn step(&self, beta_prev: f64, j: usize, dx: f64, h: f64) -> Result<f64> {
        if j == 0 {
            return Err(Error::InvalidIndex("update index j starts at 1".into()));
        }
        if !self.domain.contains(beta_prev) {
            return Err(Error::Domain(format!(
                "previous estimate {beta_prev} lies outside the domain"
            )));
        }
        let v = (self.variance)(beta_prev);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!(
                "variance map returned {v} at beta = {beta_prev}"
            )));
        }
        let a2 = (self.normalizer)(j);
        if !(a2 > 0.0 && a2.is_finite()) {
            return Err(Error::Domain(format!(
                "normalizer returned {a2} at j = {j}"
            )));
        }
        let score = (self.score)(beta_prev, dx, h)?;
        let candidate = beta_prev + v / a2 * score;
        if candidate.is_nan() {
            return Err(Error::Domain(format!("update produced NaN at j = {j}")));
        }
        Ok(self.domain.project(candidate))
    }

    pub fn run(&self, increments: &IncrementSeries, beta_init: f64) -> Result<EstimatorTrajectory> {
        nonempty(increments)?;
        let h = increments.grid().step();
        let mut betas = Vec::with_capacity(increments.len() + 1);
        let mut beta = beta_init;
        betas.push(beta);
        for (i, &dx) in increments.values().iter().enumerate() {
            beta = self.step(beta, i + 1, dx, h)?;
            betas.push(beta);
        }
        Ok(EstimatorTrajectory {
            grid: *increments.grid(),
            betas,
            method: Method::GeneralRecursion,
        })
    }
}

pub fn general_step<V, A, S>(
    spec: &RecursionSpec<V, A, S>,
    beta_prev: f64,
    j: usize,
    dx: f64,
    h: f64,
) -> Result<f64>
where
    V: Fn(f64) -> f64,
    A: Fn(usize) -> f64,
    S: Fn(f64, f64, f64) -> Result<f64>,
{
    spec.step(beta_prev, j, dx, h)
}

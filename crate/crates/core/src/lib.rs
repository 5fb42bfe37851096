//! Recursive estimation of the diffusion coefficient of a drifted, scaled
//! Wiener process `X_t = int_0^t mu_s ds + sqrt(beta) w_t` from equidistant
//! high-frequency samples.
//!
//! * [`estimate`]: batch quasi-MLE `(1/T) sum dX_j^2` and the update-form
//!   estimator `beta_j = (1 - 1/j) beta_{j-1} + dX_j^2 / (j h)`.
//! * [`simulate`]: seeded sample paths under constant, sinusoidal or
//!   Ornstein–Uhlenbeck drift.
//! * [`theory`]: step-level terms of the equivalence argument, the linear
//!   statistic, `W` statistics and a KS normality check.
//! * [`montecarlo`]: repeated trials, parallel over trials with the
//!   `parallel` feature.
//! * [`export`]: CSV artifacts.

pub mod error;
pub mod estimate;
pub mod export;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod simulate;
pub mod sum;
pub mod theory;

pub use error::{Error, Result};
pub use estimate::{
    general_step, qmle_batch, qmle_running, quasi_loglik, recursive_run, recursive_step,
    score_diffusion, DiffusionRecursion, EstimatorTrajectory, Method, RecursionSpec,
};
pub use model::{
    check_assumption1, make_grid, AssumptionReport, IncrementSeries, ObservationGrid, ParamDomain,
    StepRule, TrueParams,
};
pub use montecarlo::{
    run_trials, run_trials_with, Execution, InitRule, MonteCarloConfig, MonteCarloSummary,
};
pub use rng::{RngStream, StreamRng};
pub use simulate::{DriftSpec, SimulatedPath};

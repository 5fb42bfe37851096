//! Finite-sample evaluation of the quantities behind the asymptotic
//! equivalence of the recursive estimator and the quasi-MLE.
//!
//! The recursion is written as `beta_j = beta_{j-1} + Gamma_j(beta_{j-1})^-1 psi_j(beta_{j-1})`
//! with `Gamma_j(beta) = j / (2 beta^2)`. The functions below evaluate the
//! conditional drift `b_j`, the normalized remainder `R_j`, the centred
//! error term `E_j`, the normalized sums they enter, and the linear statistic
//! `beta* = beta0 + Gamma_n(beta0)^-1 sum_j psi_j(beta0)`.

pub mod ks;
pub mod normal;

pub use ks::{
    kolmogorov_survival, ks_normality, ks_statistic, qq_pairs, NormalityCheck, MIN_KS_SAMPLE,
};
pub use normal::{normal_cdf, normal_pdf, normal_quantile, NORMAL_IMPL};

use crate::error::{require_positive, Error, Result};
use crate::estimate::{qmle_batch, recursive_run, EstimatorTrajectory};
use crate::model::{IncrementSeries, ObservationGrid};
use crate::sum::NeumaierSum;

/// `Gamma_j(beta) = j / (2 beta^2)`; `Gamma_0 = 0`.
pub fn gamma_j(j: usize, beta: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    Ok(j as f64 / (2.0 * beta * beta))
}

/// `psi_j(beta) = -1/(2 beta) + beta0/(2 beta^2) (y + mu_bar sqrt(h/beta0))^2`.
pub fn psi_nj(beta: f64, y: f64, mu_bar: f64, h: f64, beta0: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    require_positive("h", h)?;
    require_positive("beta0", beta0)?;
    let z = y + mu_bar * (h / beta0).sqrt();
    Ok(-1.0 / (2.0 * beta) + beta0 / (2.0 * beta * beta) * z * z)
}

/// Conditional moments `E[Y_j mu_bar_j | F]` and `E[mu_bar_j^2 | F]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoments {
    pub y_mu: f64,
    pub mu_sq: f64,
}

impl ConditionalMoments {
    /// Constant drift `alpha`: `Y` is centred and independent of the drift.
    pub fn constant(alpha: f64) -> Self {
        Self {
            y_mu: 0.0,
            mu_sq: alpha * alpha,
        }
    }
}

/// `b_j`, `R_j` and `E_j` at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofTerms {
    pub b: f64,
    pub r: f64,
    pub e: f64,
}

pub fn proof_terms(
    beta_prev: f64,
    beta0: f64,
    h: f64,
    j: usize,
    moments: ConditionalMoments,
) -> Result<ProofTerms> {
    require_positive("beta_prev", beta_prev)?;
    require_positive("beta0", beta0)?;
    require_positive("h", h)?;
    if j == 0 {
        return Err(Error::InvalidIndex("step index j starts at 1".into()));
    }
    let d = beta_prev - beta0;
    let bp2 = beta_prev * beta_prev;
    let root = (h * beta0).sqrt();
    let b = -d / (2.0 * bp2) + root / bp2 * moments.y_mu + h / (2.0 * bp2) * moments.mu_sq;
    let r = gamma_j(j, beta0)? / gamma_j(j, beta_prev)? * b;
    let e = (-root * moments.y_mu - 0.5 * h * moments.mu_sq) / (beta0 * beta0);
    Ok(ProofTerms { b, r, e })
}

pub fn b_r_e_constant_drift(
    beta_prev: f64,
    beta0: f64,
    alpha: f64,
    h: f64,
    j: usize,
) -> Result<ProofTerms> {
    proof_terms(beta_prev, beta0, h, j, ConditionalMoments::constant(alpha))
}

/// `E_j` from its definition, `Gamma_j(beta0)/Gamma_j(beta) (psi_j(beta) - b_j) - psi_j(beta0)`,
/// for one realized `(y, mu_bar)`.
pub fn error_term_from_definition(
    beta_prev: f64,
    beta0: f64,
    y: f64,
    mu_bar: f64,
    h: f64,
    j: usize,
    moments: ConditionalMoments,
) -> Result<f64> {
    let terms = proof_terms(beta_prev, beta0, h, j, moments)?;
    let ratio = gamma_j(j, beta0)? / gamma_j(j, beta_prev)?;
    Ok(ratio * (psi_nj(beta_prev, y, mu_bar, h, beta0)? - terms.b)
        - psi_nj(beta0, y, mu_bar, h, beta0)?)
}

/// Summand of the second condition, `(Gamma_j(beta0) - Gamma_{j-1}(beta0)) d_{j-1} + R_j`.
pub fn condition_ii_term(
    beta_prev: f64,
    beta0: f64,
    h: f64,
    j: usize,
    moments: ConditionalMoments,
) -> Result<f64> {
    let terms = proof_terms(beta_prev, beta0, h, j, moments)?;
    let dgamma = gamma_j(j, beta0)? - gamma_j(j - 1, beta0)?;
    Ok(dgamma * (beta_prev - beta0) + terms.r)
}

/// The two normalized sums `n^{-1/2} sum_j (...)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionSums {
    pub sum_ii: f64,
    pub sum_iii: f64,
}

/// Condition sums for constant drift, evaluated step by step at `beta_{j-1} = beta0`.
///
/// Under constant drift every summand is deterministic and independent of
/// `d_{j-1}`, so the sums equal `+-(h sqrt(n) alpha^2) / (2 beta0^2)`.
pub fn condition_sums_constant_drift(
    grid: &ObservationGrid,
    alpha: f64,
    beta0: f64,
) -> Result<ConditionSums> {
    let moments = ConditionalMoments::constant(alpha);
    let h = grid.step();
    let mut ii = NeumaierSum::new();
    let mut iii = NeumaierSum::new();
    for j in 1..=grid.n() {
        ii += condition_ii_term(beta0, beta0, h, j, moments)?;
        iii += proof_terms(beta0, beta0, h, j, moments)?.e;
    }
    let root_n = (grid.n() as f64).sqrt();
    Ok(ConditionSums {
        sum_ii: ii.total() / root_n,
        sum_iii: iii.total() / root_n,
    })
}

/// Same sums along an actual trajectory, using its `d_{j-1}`.
pub fn condition_sums_along(
    trajectory: &EstimatorTrajectory,
    alpha: f64,
    beta0: f64,
) -> Result<ConditionSums> {
    let moments = ConditionalMoments::constant(alpha);
    let h = trajectory.grid().step();
    let betas = trajectory.betas();
    let mut ii = NeumaierSum::new();
    let mut iii = NeumaierSum::new();
    for j in 1..betas.len() {
        ii += condition_ii_term(betas[j - 1], beta0, h, j, moments)?;
        iii += proof_terms(betas[j - 1], beta0, h, j, moments)?.e;
    }
    let root_n = ((betas.len() - 1) as f64).sqrt();
    Ok(ConditionSums {
        sum_ii: ii.total() / root_n,
        sum_iii: iii.total() / root_n,
    })
}

/// `beta* = beta0 + Gamma_n(beta0)^-1 sum_j psi_j(beta0)`.
///
/// Needs the per-interval drift integrals `h mu_bar_j`; pass zeros to assume
/// a driftless model.
pub fn linear_statistic(
    increments: &IncrementSeries,
    drift_integrals: Option<&[f64]>,
    beta0: f64,
) -> Result<f64> {
    let integrals = drift_integrals
        .ok_or_else(|| Error::InvalidConfig("linear statistic needs drift integrals".into()))?;
    if integrals.len() != increments.len() {
        return Err(Error::Data(format!(
            "{} drift integrals for {} increments",
            integrals.len(),
            increments.len()
        )));
    }
    require_positive("beta0", beta0)?;
    let h = increments.grid().step();
    let scale = (h * beta0).sqrt();
    let mut psi = NeumaierSum::new();
    for (&dx, &drift) in increments.values().iter().zip(integrals) {
        let y = (dx - drift) / scale;
        psi += psi_nj(beta0, y, drift / h, h, beta0)?;
    }
    Ok(beta0 + psi.total() / gamma_j(increments.len(), beta0)?)
}

/// `sqrt(n / (2 beta0^2)) (beta_hat - beta0)`.
pub fn w_statistic(beta_hat: f64, beta0: f64, n: usize) -> Result<f64> {
    require_positive("beta0", beta0)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok((n as f64 / (2.0 * beta0 * beta0)).sqrt() * (beta_hat - beta0))
}

/// Inputs for [`diagnostics`].
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsInput<'a> {
    pub increments: &'a IncrementSeries,
    pub beta0: f64,
    pub beta_init: f64,
    /// `h mu_bar_j` per interval, when known.
    pub drift_integrals: Option<&'a [f64]>,
    /// Constant drift level, when known.
    pub constant_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub h: f64,
    /// `n / Gamma_n(beta0)`, identically `2 beta0^2`.
    pub condition_i_value: f64,
    pub condition_sums: Option<ConditionSums>,
    /// `sqrt(n) (qmle - beta_n)`.
    pub equivalence_gap: f64,
    pub linear_stat: Option<f64>,
    pub qmle: f64,
    pub trajectory: EstimatorTrajectory,
    pub beta0: f64,
}

impl DiagnosticsReport {
    /// `d_j = beta_j - beta0`, `j = 0..=n`.
    pub fn deviations(&self) -> Vec<f64> {
        self.trajectory.deviations(self.beta0)
    }
}

pub fn diagnostics(input: DiagnosticsInput<'_>) -> Result<DiagnosticsReport> {
    let grid = *input.increments.grid();
    let n = grid.n();
    let trajectory = recursive_run(input.increments, input.beta_init)?;
    let qmle = qmle_batch(input.increments)?;
    let condition_sums = input
        .constant_drift
        .map(|alpha| condition_sums_constant_drift(&grid, alpha, input.beta0))
        .transpose()?;
    let linear_stat = input
        .drift_integrals
        .map(|d| linear_statistic(input.increments, Some(d), input.beta0))
        .transpose()?;
    Ok(DiagnosticsReport {
        n,
        h: grid.step(),
        condition_i_value: n as f64 / gamma_j(n, input.beta0)?,
        condition_sums,
        equivalence_gap: (n as f64).sqrt() * (qmle - trajectory.final_estimate()),
        linear_stat,
        qmle,
        trajectory,
        beta0: input.beta0,
    })
}

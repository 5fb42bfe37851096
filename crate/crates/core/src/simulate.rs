//! Sample paths of `X_t = int_0^t mu_s ds + sqrt(beta) w_t` observed on a grid.

use crate::error::{require_positive, Error, Result};
use crate::model::{IncrementSeries, ObservationGrid};
use crate::rng::{RngStream, StreamRng};

/// Default number of quadrature substeps per sampling interval.
pub const DEFAULT_SUBSTEPS: usize = 16;

/// The nuisance drift process `mu`.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    Zero,
    Constant {
        alpha: f64,
    },
    /// `mu_t = amplitude * sin(angular_frequency * t)`.
    Sinusoidal {
        amplitude: f64,
        angular_frequency: f64,
    },
    /// `d mu = kappa (level - mu) dt + sigma dB`, `B` independent of `w`.
    /// `initial = None` starts from the stationary law.
    OrnsteinUhlenbeck {
        kappa: f64,
        level: f64,
        sigma: f64,
        initial: Option<f64>,
    },
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                )))
            }
        };
        match *self {
            DriftSpec::Zero => Ok(()),
            DriftSpec::Constant { alpha } => finite("alpha", alpha),
            DriftSpec::Sinusoidal {
                amplitude,
                angular_frequency,
            } => {
                finite("amplitude", amplitude)?;
                finite("angular_frequency", angular_frequency)
            }
            DriftSpec::OrnsteinUhlenbeck {
                kappa,
                level,
                sigma,
                initial,
            } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "OU mean reversion must be positive, got {kappa}"
                    )));
                }
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "OU volatility must be non-negative, got {sigma}"
                    )));
                }
                finite("level", level)?;
                if let Some(mu0) = initial {
                    finite("mu0", mu0)?;
                }
                Ok(())
            }
        }
    }

    /// Drift value for the constant-in-time cases.
    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            DriftSpec::Zero => Some(0.0),
            DriftSpec::Constant { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Short tag used in reports and config hashes.
    pub fn name(&self) -> &'static str {
        match self {
            DriftSpec::Zero => "zero",
            DriftSpec::Constant { .. } => "constant",
            DriftSpec::Sinusoidal { .. } => "sinusoidal",
            DriftSpec::OrnsteinUhlenbeck { .. } => "ou",
        }
    }
}

/// Produces drift values on the substep lattice `s = k * dt`, `k = 0, 1, ...`.
#[derive(Debug, Clone)]
pub struct DriftSampler {
    spec: DriftSpec,
    dt: f64,
    k: u64,
    ou_state: Option<f64>,
}

impl DriftSampler {
    pub fn new(spec: DriftSpec, dt: f64) -> Result<Self> {
        spec.validate()?;
        require_positive("substep length", dt)?;
        Ok(Self {
            spec,
            dt,
            k: 0,
            ou_state: None,
        })
    }

    /// Value at the next lattice point. OU draws from `rng` via its exact transition.
    pub fn next_value(&mut self, rng: &mut StreamRng) -> f64 {
        let k = self.k;
        self.k += 1;
        match self.spec {
            DriftSpec::Zero => 0.0,
            DriftSpec::Constant { alpha } => alpha,
            DriftSpec::Sinusoidal {
                amplitude,
                angular_frequency,
            } => amplitude * (angular_frequency * k as f64 * self.dt).sin(),
            DriftSpec::OrnsteinUhlenbeck {
                kappa,
                level,
                sigma,
                initial,
            } => {
                let next = match self.ou_state {
                    None => match initial {
                        Some(mu0) => mu0,
                        None => level + sigma / (2.0 * kappa).sqrt() * rng.standard_normal(),
                    },
                    Some(prev) => {
                        let decay = (-kappa * self.dt).exp();
                        let sd = sigma * ((1.0 - decay * decay) / (2.0 * kappa)).sqrt();
                        level + (prev - level) * decay + sd * rng.standard_normal()
                    }
                };
                self.ou_state = Some(next);
                next
            }
        }
    }
}

/// Drift values at the left endpoints of all `n * substeps` lattice cells.
pub fn drift_lattice(
    drift: &DriftSpec,
    grid: &ObservationGrid,
    substeps: usize,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    if substeps == 0 {
        return Err(Error::InvalidParameter(
            "substeps must be at least 1".into(),
        ));
    }
    let mut sampler = DriftSampler::new(drift.clone(), grid.step() / substeps as f64)?;
    Ok((0..grid.n() * substeps)
        .map(|_| sampler.next_value(rng))
        .collect())
}

/// A simulated trajectory together with the drift integrals that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    x_values: Vec<f64>,
    increments: IncrementSeries,
    drift_integrals: Vec<f64>,
    seed_record: Option<RngStream>,
}

impl SimulatedPath {
    /// Assembles a path from raw increments starting at `X_0 = 0`.
    ///
    /// Increments are re-derived from the rounded cumulative sums, so
    /// `x[j] - x[j-1] == dx[j]` and `x[j-1] + dx[j] == x[j]` both hold bit-exactly.
    pub fn from_increments(
        grid: ObservationGrid,
        raw_increments: &[f64],
        drift_integrals: Vec<f64>,
        seed_record: Option<RngStream>,
    ) -> Result<Self> {
        if drift_integrals.len() != grid.n() {
            return Err(Error::Data(format!(
                "expected {} drift integrals, got {}",
                grid.n(),
                drift_integrals.len()
            )));
        }
        let mut x_values = Vec::with_capacity(grid.n() + 1);
        let mut increments = Vec::with_capacity(grid.n());
        let mut x = 0.0f64;
        x_values.push(x);
        for &raw in raw_increments {
            let (next, dx) = exact_step(x, raw);
            increments.push(dx);
            x_values.push(next);
            x = next;
        }
        let increments = IncrementSeries::new(grid, increments)?;
        Ok(Self {
            x_values,
            increments,
            drift_integrals,
            seed_record,
        })
    }

    pub fn grid(&self) -> &ObservationGrid {
        self.increments.grid()
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    pub fn increments(&self) -> &IncrementSeries {
        &self.increments
    }

    pub fn drift_integrals(&self) -> &[f64] {
        &self.drift_integrals
    }

    pub fn seed_record(&self) -> Option<RngStream> {
        self.seed_record
    }

    /// Standardized noise `Y_j = (dX_j - int mu) / sqrt(h beta0)`.
    pub fn reconstruct_y(&self, beta0: f64) -> Result<Vec<f64>> {
        require_positive("beta0", beta0)?;
        let scale = (self.grid().step() * beta0).sqrt();
        Ok(self
            .increments
            .values()
            .iter()
            .zip(&self.drift_integrals)
            .map(|(dx, drift)| (dx - drift) / scale)
            .collect())
    }
}

// Finds (x1, dx) near (x0 + raw, raw) with fl(x0 + dx) == x1 and fl(x1 - x0) == dx.
fn exact_step(x0: f64, raw: f64) -> (f64, f64) {
    let mut dx = raw;
    for _ in 0..8 {
        let x1 = x0 + dx;
        let back = x1 - x0;
        if back == dx {
            return (x1, dx);
        }
        dx = back;
    }
    // Unreachable in practice; fall back to the last consistent pair.
    let x1 = x0 + dx;
    (x1, x1 - x0)
}

/// i.i.d. increments `N(alpha h, beta0 h)` (constant drift, exact in law).
pub fn simulate_constant_drift(
    grid: &ObservationGrid,
    alpha: f64,
    beta0: f64,
    rng: &mut StreamRng,
) -> Result<SimulatedPath> {
    check_beta0(beta0)?;
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite, got {alpha}"
        )));
    }
    let h = grid.step();
    let mean = alpha * h;
    let sd = (beta0 * h).sqrt();
    let raw: Vec<f64> = (0..grid.n())
        .map(|_| mean + sd * rng.standard_normal())
        .collect();
    SimulatedPath::from_increments(*grid, &raw, vec![mean; grid.n()], Some(rng.key()))
}

/// Increments under an arbitrary drift.
///
/// Per interval, the drift integral is a left-endpoint Riemann sum over
/// `substeps` cells (exact for constant drift), and the Brownian part is one
/// `N(0, beta0 h)` draw made after the interval's drift draws.
pub fn simulate_general_drift(
    grid: &ObservationGrid,
    drift: &DriftSpec,
    beta0: f64,
    substeps: usize,
    rng: &mut StreamRng,
) -> Result<SimulatedPath> {
    check_beta0(beta0)?;
    if substeps == 0 {
        return Err(Error::InvalidParameter(
            "substeps must be at least 1".into(),
        ));
    }
    drift.validate()?;
    let h = grid.step();
    let sd = (beta0 * h).sqrt();
    let dt = h / substeps as f64;
    let mut sampler = DriftSampler::new(drift.clone(), dt)?;
    let constant = drift.constant_value();

    let mut raw = Vec::with_capacity(grid.n());
    let mut integrals = Vec::with_capacity(grid.n());
    for _ in 0..grid.n() {
        let integral = match constant {
            Some(alpha) => alpha * h,
            None => {
                let mut acc = 0.0;
                for _ in 0..substeps {
                    acc += sampler.next_value(rng);
                }
                acc * dt
            }
        };
        raw.push(integral + sd * rng.standard_normal());
        integrals.push(integral);
    }
    SimulatedPath::from_increments(*grid, &raw, integrals, Some(rng.key()))
}

/// Convenience wrapper drawing from a fresh generator for `stream`.
pub fn simulate(
    grid: &ObservationGrid,
    drift: &DriftSpec,
    beta0: f64,
    substeps: usize,
    stream: RngStream,
) -> Result<SimulatedPath> {
    let mut rng = stream.rng();
    match drift {
        DriftSpec::Constant { alpha } => simulate_constant_drift(grid, *alpha, beta0, &mut rng),
        other => simulate_general_drift(grid, other, beta0, substeps, &mut rng),
    }
}

fn check_beta0(beta0: f64) -> Result<()> {
    if beta0.is_finite() && beta0 > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "beta0 must be positive, got {beta0}"
        )))
    }
}

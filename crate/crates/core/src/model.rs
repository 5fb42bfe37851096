//! Sampling design, observed increments and the parameter domain.

use crate::error::{Error, Result};
use crate::simulate::DriftSpec;

/// Default lower bound of the diffusion parameter domain.
pub const DEFAULT_DOMAIN_FLOOR: f64 = 1e-10;

/// How the sampling step is chosen for a given sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// A fixed step `h`.
    Explicit(f64),
    /// `h = n^(-gamma)` with `gamma` in (0, 1).
    Exponent(f64),
}

impl StepRule {
    pub fn step_for(&self, n: usize) -> Result<f64> {
        match *self {
            StepRule::Explicit(h) => {
                if h.is_finite() && h > 0.0 {
                    Ok(h)
                } else {
                    Err(Error::InvalidConfig(format!(
                        "step h must be positive, got {h}"
                    )))
                }
            }
            StepRule::Exponent(gamma) => {
                if gamma > 0.0 && gamma < 1.0 {
                    Ok((n as f64).powf(-gamma))
                } else {
                    Err(Error::InvalidConfig(format!(
                        "step exponent must lie in (0, 1), got {gamma}"
                    )))
                }
            }
        }
    }
}

/// Equidistant sampling design `t_j = j h`, `j = 0..=n`.
///
/// The horizon `T = n h` is always derived from `n` and `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationGrid {
    n: usize,
    h: f64,
}

impl ObservationGrid {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "sample count n must be at least 1".into(),
            ));
        }
        let h = StepRule::Explicit(h).step_for(n)?;
        Ok(Self { n, h })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// Sampling time of observation `j`.
    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.h
    }
}

pub fn make_grid(n: usize, rule: StepRule) -> Result<ObservationGrid> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "sample count n must be at least 1".into(),
        ));
    }
    ObservationGrid::new(n, rule.step_for(n)?)
}

/// The observed increments `X_{t_j} - X_{t_{j-1}}`, `j = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSeries {
    grid: ObservationGrid,
    values: Vec<f64>,
}

impl IncrementSeries {
    pub fn new(grid: ObservationGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Data(format!(
                "expected {} increments, got {}",
                grid.n(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "increment {} is not finite ({})",
                pos + 1,
                values[pos]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Builds a series with an explicit step, one grid point per value.
    pub fn from_values(h: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("empty increment series".into()));
        }
        let grid = ObservationGrid::new(values.len(), h)?;
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &ObservationGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Returns a copy with every increment multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| v * c).collect())
    }
}

/// Admissible set for the diffusion parameter, `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDomain {
    lower: f64,
    upper: f64,
}

impl Default for ParamDomain {
    fn default() -> Self {
        Self {
            lower: DEFAULT_DOMAIN_FLOOR,
            upper: f64::INFINITY,
        }
    }
}

impl ParamDomain {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower < upper) || lower.is_nan() || upper.is_nan() {
            return Err(Error::InvalidConfig(format!(
                "parameter domain needs 0 < lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, beta: f64) -> bool {
        beta >= self.lower && beta <= self.upper
    }

    /// Clamps `beta` onto the domain.
    pub fn project(&self, beta: f64) -> f64 {
        beta.clamp(self.lower, self.upper)
    }
}

/// The data-generating parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueParams {
    pub beta0: f64,
    pub drift: DriftSpec,
}

impl TrueParams {
    pub fn new(beta0: f64, drift: DriftSpec, domain: &ParamDomain) -> Result<Self> {
        if !domain.contains(beta0) || !beta0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta0 = {beta0} lies outside the parameter domain"
            )));
        }
        drift.validate()?;
        Ok(Self { beta0, drift })
    }
}

/// Outcome of the horizon growth check `T_n <~ n^eps` with `eps < 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    /// Realized exponent `ln T / ln n`.
    pub epsilon_hat: f64,
    pub margin: f64,
    pub pass: bool,
}

pub fn check_assumption1(grid: &ObservationGrid) -> Result<AssumptionReport> {
    check_assumption1_with_margin(grid, 0.0)
}

/// Passes iff `ln T / ln n < 1/2 - margin`.
pub fn check_assumption1_with_margin(
    grid: &ObservationGrid,
    margin: f64,
) -> Result<AssumptionReport> {
    if grid.n() < 2 {
        return Err(Error::InsufficientData(
            "horizon exponent needs n >= 2".into(),
        ));
    }
    let epsilon_hat = grid.horizon().ln() / (grid.n() as f64).ln();
    Ok(AssumptionReport {
        epsilon_hat,
        margin,
        pass: epsilon_hat < 0.5 - margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_design() {
        let g = make_grid(500, StepRule::Exponent(0.75)).unwrap();
        assert!((g.step() - 0.009_457_416_090_031_758).abs() < 1e-15);
        assert!((g.horizon() - 500f64.powf(0.25)).abs() < 1e-12);
        assert!((g.horizon() - 4.7287).abs() < 1e-4);
        let r = check_assumption1(&g).unwrap();
        assert!((r.epsilon_hat - 0.25).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn small_grids() {
        let g = make_grid(1, StepRule::Explicit(1.0)).unwrap();
        assert_eq!(g.horizon(), 1.0);
        assert_eq!(g.time(0), 0.0);
        let g = make_grid(100, StepRule::Exponent(0.5)).unwrap();
        assert!((g.step() - 0.1).abs() < 1e-15);
        assert!((g.horizon() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn assumption_examples() {
        let g = make_grid(100, StepRule::Explicit(1.0)).unwrap();
        let r = check_assumption1(&g).unwrap();
        assert!((r.epsilon_hat - 1.0).abs() < 1e-12);
        assert!(!r.pass);

        let g = make_grid(10_000, StepRule::Exponent(0.6)).unwrap();
        let r = check_assumption1(&g).unwrap();
        assert!((r.epsilon_hat - 0.4).abs() < 1e-12);
        assert!(r.pass);

        let r = check_assumption1_with_margin(&g, 0.15).unwrap();
        assert!(!r.pass);

        let g = make_grid(1, StepRule::Explicit(0.5)).unwrap();
        assert!(matches!(
            check_assumption1(&g),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn rejects_bad_rules() {
        for rule in [
            StepRule::Explicit(0.0),
            StepRule::Explicit(-1.0),
            StepRule::Explicit(f64::NAN),
            StepRule::Exponent(0.0),
            StepRule::Exponent(1.0),
            StepRule::Exponent(1.5),
        ] {
            assert!(
                matches!(make_grid(10, rule), Err(Error::InvalidConfig(_))),
                "{rule:?}"
            );
        }
        assert!(make_grid(0, StepRule::Explicit(1.0)).is_err());
    }

    #[test]
    fn domain_projection() {
        let d = ParamDomain::default();
        assert_eq!(d.project(0.0), DEFAULT_DOMAIN_FLOOR);
        assert_eq!(d.project(5.0), 5.0);
        assert!(ParamDomain::new(0.0, 1.0).is_err());
        assert!(ParamDomain::new(2.0, 1.0).is_err());
        let d = ParamDomain::new(0.5, 2.0).unwrap();
        assert_eq!(d.project(3.0), 2.0);
    }

    proptest! {
        #[test]
        fn exponent_rule_gives_complementary_epsilon(n in 2usize..1_000_000, gamma in 0.01f64..0.99) {
            let g = make_grid(n, StepRule::Exponent(gamma)).unwrap();
            let r = check_assumption1(&g).unwrap();
            prop_assert!((r.epsilon_hat - (1.0 - gamma)).abs() < 1e-12);
        }

        #[test]
        fn grid_times_are_equidistant(n in 1usize..10_000, h in 1e-6f64..10.0) {
            let g = ObservationGrid::new(n, h).unwrap();
            prop_assert_eq!(g.time(0), 0.0);
            prop_assert_eq!(g.horizon(), n as f64 * h);
            let j = n / 2 + 1;
            prop_assert!((g.time(j) - g.time(j - 1) - h).abs() <= 1e-12 * g.time(j).max(1.0));
        }

        #[test]
        fn malformed_series_rejected(
            n in 1usize..50,
            extra in 1usize..5,
            bad_pos in 0usize..50,
            bad in prop_oneof![Just(f64::NAN), Just(f64::INFINITY), Just(f64::NEG_INFINITY)],
        ) {
            let g = ObservationGrid::new(n, 0.1).unwrap();
            prop_assert!(IncrementSeries::new(g, vec![0.5; n + extra]).is_err());
            if n > extra {
                prop_assert!(IncrementSeries::new(g, vec![0.5; n - extra]).is_err());
            }
            let mut values = vec![0.5; n];
            values[bad_pos % n] = bad;
            prop_assert!(IncrementSeries::new(g, values).is_err());
        }
    }
}

//! Normality assessment of a sample: one-sample Kolmogorov–Smirnov test
//! against the standard normal, plus QQ plotting positions.

use crate::error::{Error, Result};
use crate::theory::normal::{normal_cdf, normal_quantile};

/// Smallest sample for which a KS p-value is reported.
pub const MIN_KS_SAMPLE: usize = 20;

const KS_MAX_TERMS: usize = 100;
const KS_TERM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityCheck {
    pub sample: Vec<f64>,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
    pub qq_pairs: Vec<(f64, f64)>,
}

/// `(Phi^-1((i - 0.5)/L), x_(i))` for the sorted sample.
pub fn qq_pairs(sample: &[f64]) -> Vec<(f64, f64)> {
    let sorted = sorted_copy(sample);
    let len = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| (normal_quantile((i as f64 + 0.5) / len), x))
        .collect()
}

/// Two-sided statistic `sup |F_L - Phi|`.
pub fn ks_statistic(sample: &[f64]) -> f64 {
    let sorted = sorted_copy(sample);
    let len = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            let above = (i as f64 + 1.0) / len - f;
            let below = f - i as f64 / len;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic survival function of the Kolmogorov distribution, `P(K > lambda)`.
///
/// Uses the alternating series for `lambda >= 1.18` and the dual
/// (theta-function) series below, where the alternating one converges slowly.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        1.0 - kolmogorov_cdf_small(lambda)
    } else {
        kolmogorov_survival_large(lambda)
    }
}

pub(crate) fn kolmogorov_survival_large(lambda: f64) -> f64 {
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=KS_MAX_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < KS_TERM_TOL * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub(crate) fn kolmogorov_cdf_small(lambda: f64) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let mut sum = 0.0;
    for k in 1..=KS_MAX_TERMS {
        let odd = (2 * k - 1) as f64;
        let term = (-odd * odd * pi2 / (8.0 * lambda * lambda)).exp();
        sum += term;
        if term < KS_TERM_TOL * sum.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    ((2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
}

/// KS test of `sample` against `N(0, 1)` with the asymptotic p-value.
pub fn ks_normality(sample: &[f64]) -> Result<NormalityCheck> {
    if sample.len() < MIN_KS_SAMPLE {
        return Err(Error::InsufficientData(format!(
            "KS test needs at least {MIN_KS_SAMPLE} values, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::Data("sample contains NaN".into()));
    }
    let d = ks_statistic(sample);
    let pvalue = kolmogorov_survival((sample.len() as f64).sqrt() * d);
    Ok(NormalityCheck {
        sample: sample.to_vec(),
        ks_statistic: d,
        ks_pvalue: pvalue,
        qq_pairs: qq_pairs(sample),
    })
}

fn sorted_copy(sample: &[f64]) -> Vec<f64> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
}

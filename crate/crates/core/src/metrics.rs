//! Quantile error against the truth, interval coverage and width, and seed summaries.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;


use crate::synthetic::TruthOracle;
use crate::{Error, Result};

/// One method on one replicate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub regime: String,
    pub method: String,
    pub seed: u64,
    /// Absent when no truth oracle exists.
    pub mse: Option<f64>,
    pub coverage: f64,
    pub width: f64,
    /// Selected damping per level, empty for methods without it.
    pub gamma_hat: Vec<f64>,
    /// Selected step count per level, empty for methods without it.
    pub m_hat: Vec<usize>,
}

/// Mean over test points and both levels of `(q_hat - q)^2`.
pub fn quantile_mse(
    pred_lo: &[f64],
    pred_hi: &[f64],
    truth: Option<&TruthOracle>,
    test_xs: &[f64],
    taus: (f64, f64),
) -> Result<f64> {
    let truth = truth.ok_or(Error::Unavailable("quantile MSE needs a synthetic truth oracle"))?;
    let n = test_xs.len();
    if pred_lo.len() != n || pred_hi.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: pred_lo.len().min(pred_hi.len()) });
    }
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut total = 0.0;
    for ((&x, &lo), &hi) in test_xs.iter().zip(pred_lo).zip(pred_hi) {
        let a = lo - truth.true_hf_quantile(taus.0, x)?;
        let b = hi - truth.true_hf_quantile(taus.1, x)?;
        total += a * a + b * b;
    }
    Ok(total / (2 * n) as f64)
}

/// Fraction of `y` inside the closed intervals and their mean width.
pub fn coverage_and_width(lower: &[f64], upper: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = y.len();
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if lower.len() != n || upper.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: lower.len().min(upper.len()) });
    }
    let mut covered = 0usize;
    let mut width = 0.0;
    for ((&l, &u), &v) in lower.iter().zip(upper).zip(y) {
        if l <= v && v <= u {
            covered += 1;
        }
        width += u - l;
    }
    Ok((covered as f64 / n as f64, width / n as f64))
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (m, v.sqrt())
}

/// Across-seed summary of one (regime, method) cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SummaryRow {
    pub regime: String,
    pub method: String,
    pub replicates: usize,
    pub mse_mean: Option<f64>,
    pub mse_sd: Option<f64>,
    pub coverage_mean: f64,
    pub coverage_sd: f64,
    pub width_mean: f64,
    pub width_sd: f64,
}

/// Groups reports by (regime, method) in first-appearance order.
pub fn summarize(reports: &[EvalReport]) -> Vec<SummaryRow> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in reports {
        let k = (r.regime.as_str(), r.method.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(regime, method)| {
            let cell: Vec<&EvalReport> = reports.iter().filter(|r| r.regime == regime && r.method == method).collect();
            let pick = |f: fn(&EvalReport) -> f64| cell.iter().map(|r| f(r)).collect::<Vec<_>>();
            let mses: Option<Vec<f64>> = cell.iter().map(|r| r.mse).collect();
            let mse = mses.map(|m| mean_sd(&m));
            let (coverage_mean, coverage_sd) = mean_sd(&pick(|r| r.coverage));
            let (width_mean, width_sd) = mean_sd(&pick(|r| r.width));
            SummaryRow {
                regime: regime.into(),
                method: method.into(),
                replicates: cell.len(),
                mse_mean: mse.map(|m| m.0),
                mse_sd: mse.map(|m| m.1),
                coverage_mean,
                coverage_sd,
                width_mean,
                width_sd,
            }
        })
        .collect()
}

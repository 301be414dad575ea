//! Nadaraya–Watson conditional CDF and local-constant kernel quantiles.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;


use crate::data::{Dataset, Matrix};
use crate::local::{robust_spread, LocalDistribution, QuantileRule, WeightedSample};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum KernelKind {
    #[default]
    Gaussian,
    Epanechnikov,
}

fn scaled<'a>(row: &'a [f64], x: &'a [f64], h: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    row.iter().zip(x).zip(h).map(|((r, c), h)| (r - c) / h)
}

/// Normalized product-kernel weights of `train_x` rows around `x`, one
/// bandwidth per covariate.
pub fn kernel_weights(train_x: &Matrix, x: &[f64], bandwidth: &[f64], kernel: KernelKind) -> Result<Vec<f64>> {
    if x.len() != train_x.cols() || bandwidth.len() != train_x.cols() {
        return Err(Error::SizeMismatch { expected: train_x.cols(), got: x.len().min(bandwidth.len()) });
    }
    if !bandwidth.iter().all(|&h| h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter("bandwidth must be positive"));
    }
    let mut w: Vec<f64> = match kernel {
        KernelKind::Gaussian => {
            // log-domain so far-away query points never underflow to all zeros
            let logs: Vec<f64> = train_x.iter_rows().map(|r| -0.5 * scaled(r, x, bandwidth).map(|u| u * u).sum::<f64>()).collect();
            let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            logs.into_iter().map(|l| (l - max).exp()).collect()
        }
        KernelKind::Epanechnikov => train_x
            .iter_rows()
            .map(|r| scaled(r, x, bandwidth).map(|u| (0.75 * (1.0 - u * u)).max(0.0)).product())
            .collect(),
    };
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyNeighborhood);
    }
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Rule-of-thumb bandwidth per covariate: `1.06 s n^(-1/(4+p))` with
/// `s = min(std, IQR/1.349)`. A column with no spread falls back to
/// `range / n`, and to 1 when the column is constant.
pub fn bandwidth_default(x: &Matrix) -> Result<Vec<f64>> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let p = x.cols() as f64;
    let factor = 1.06 * (n as f64).powf(-1.0 / (4.0 + p));
    Ok((0..x.cols())
        .map(|j| {
            let col = x.column_values(j);
            let s = robust_spread(&col);
            if s > 0.0 {
                return factor * s;
            }
            let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            if hi > lo {
                (hi - lo) / n as f64
            } else {
                1.0
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct KernelConfig {
    pub kernel: KernelKind,
    /// Multiplier applied to the rule-of-thumb covariate bandwidth.
    pub bandwidth_scale: f64,
    /// Manual per-covariate bandwidth; overrides the rule of thumb.
    pub bandwidth: Option<Vec<f64>>,
    /// Fixed response bandwidth for densities; otherwise a weighted rule of thumb at each point.
    pub response_bandwidth: Option<f64>,
    pub quantile_rule: QuantileRule,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            kernel: KernelKind::Gaussian,
            bandwidth_scale: 1.0,
            bandwidth: None,
            response_bandwidth: None,
            quantile_rule: QuantileRule::Step,
        }
    }
}

/// Nadaraya–Watson estimate of `F(y | x)` from one training set.
#[derive(Debug, Clone)]
pub struct KernelCdfModel {
    train: Dataset,
    bandwidth: Vec<f64>,
    kernel: KernelKind,
    /// Training indices sorted by response.
    order: Vec<usize>,
    response_bandwidth: Option<f64>,
    fallback_h_y: f64,
    rule: QuantileRule,
}

impl KernelCdfModel {
    pub fn fit(train: &Dataset, config: &KernelConfig) -> Result<Self> {
        let bandwidth = match &config.bandwidth {
            Some(h) => {
                if h.len() != train.dim() {
                    return Err(Error::SizeMismatch { expected: train.dim(), got: h.len() });
                }
                h.clone()
            }
            None if train.len() < 2 => alloc::vec![1.0; train.dim()],
            None => bandwidth_default(train.x())?.into_iter().map(|h| h * config.bandwidth_scale).collect(),
        };
        Self::with_bandwidth(train, bandwidth, config)
    }

    pub fn with_bandwidth(train: &Dataset, bandwidth: Vec<f64>, config: &KernelConfig) -> Result<Self> {
        if !bandwidth.iter().all(|&h| h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter("bandwidth must be positive"));
        }
        if let Some(h) = config.response_bandwidth {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("response bandwidth must be positive"));
            }
        }
        let y = train.y();
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
        let s = robust_spread(y);
        let fallback_h_y = if s > 0.0 { 1.06 * s * (y.len() as f64).powf(-0.2) } else { 1e-3 };
        Ok(KernelCdfModel {
            train: train.clone(),
            bandwidth,
            kernel: config.kernel,
            order,
            response_bandwidth: config.response_bandwidth,
            fallback_h_y,
            rule: config.quantile_rule,
        })
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        kernel_weights(self.train.x(), x, &self.bandwidth, self.kernel)
    }

    pub fn weighted_sample(&self, x: &[f64]) -> Result<WeightedSample> {
        let w = self.weights(x)?;
        let y = self.train.y();
        WeightedSample::from_sorted(self.order.iter().map(|&i| (y[i], w[i])))
    }

    pub fn local(&self, x: &[f64]) -> Result<LocalDistribution> {
        let sample = self.weighted_sample(x)?;
        let h_y = self.response_bandwidth.unwrap_or_else(|| sample.rule_of_thumb_bandwidth(self.fallback_h_y));
        Ok(LocalDistribution::Empirical { sample, h_y, rule: self.rule })
    }

    /// `sum_j w_j(x) 1{Y_j <= y}`.
    pub fn cdf_eval(&self, y: f64, x: &[f64]) -> Result<f64> {
        Ok(self.weighted_sample(x)?.cdf(y))
    }

    /// `sum_j w_j(x) phi_{h_y}(y - Y_j)`.
    pub fn kernel_density(&self, y: f64, x: &[f64], h_y: f64) -> Result<f64> {
        if !(h_y > 0.0) {
            return Err(Error::InvalidParameter("response bandwidth must be positive"));
        }
        Ok(self.weighted_sample(x)?.density(y, h_y))
    }
}

/// Local-constant kernel quantile at a fixed level.
#[derive(Debug, Clone)]
pub struct KernelQuantileModel {
    cdf: KernelCdfModel,
    tau: f64,
}

impl KernelQuantileModel {
    pub fn fit(train: &Dataset, config: &KernelConfig, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidLevel(tau));
        }
        Ok(KernelQuantileModel { cdf: KernelCdfModel::fit(train, config)?, tau })
    }

    pub fn from_cdf(cdf: KernelCdfModel, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidLevel(tau));
        }
        Ok(KernelQuantileModel { cdf, tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `inf { u : F(u | x) >= tau }`, an observed training response.
    pub fn quantile_eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.cdf.weighted_sample(x)?.quantile_with(self.tau, self.cdf.rule))
    }
}

//! Conditional distributions at a single covariate point.
//!
//! Kernel and forest back-ends both reduce to a weighted empirical sample of
//! training responses; the GP back-end yields a Gaussian. Corrections evaluate
//! the CDF and density many times at a fixed point, so models hand out a
//! [`LocalDistribution`] once per point instead of recomputing weights.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;


use crate::dist::{normal_cdf, normal_pdf, normal_quantile, ReferenceDistribution};
use crate::{Error, Result};

/// Slack used when comparing accumulated weights against a target level.
pub const LEVEL_SLACK: f64 = 1e-12;

/// How the inverse of a step CDF picks its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum QuantileRule {
    /// `inf { y : F(y) >= a }`, always an observed response.
    #[default]
    Step,
    /// Monotone linear interpolation between support points.
    Linear,
}

/// Probability weights on sorted, distinct support points.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    values: Vec<f64>,
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl WeightedSample {
    /// `pairs` are `(value, weight)`; weights must be nonnegative with a
    /// positive total. Zero weights are dropped and ties merged.
    pub fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_sorted(pairs.into_iter())
    }

    /// Like [`WeightedSample::new`] but the values must already be ascending.
    pub fn from_sorted(pairs: impl Iterator<Item = (f64, f64)>) -> Result<Self> {
        let mut values: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (v, w) in pairs {
            if !(w >= 0.0) || !v.is_finite() {
                return Err(Error::NonFinite("weighted sample"));
            }
            if w == 0.0 {
                continue;
            }
            match values.last() {
                Some(&last) if last == v => *weights.last_mut().unwrap() += w,
                Some(&last) if last > v => {
                    return Err(Error::ContractViolation("weighted sample values are not sorted"))
                }
                _ => {
                    values.push(v);
                    weights.push(w);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if values.is_empty() || !(total > 0.0) {
            return Err(Error::EmptyNeighborhood);
        }
        let mut acc = 0.0;
        let mut cum = Vec::with_capacity(weights.len());
        for w in &mut weights {
            *w /= total;
            acc += *w;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(WeightedSample { values, weights, cum })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_i w_i 1{v_i <= y}`.
    pub fn cdf(&self, y: f64) -> f64 {
        let k = self.values.partition_point(|&v| v <= y);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// Generalized inverse `inf { v : F(v) >= a }`.
    pub fn quantile(&self, a: f64) -> f64 {
        let k = self.cum.partition_point(|&c| c < a - LEVEL_SLACK);
        self.values[k.min(self.values.len() - 1)]
    }

    pub fn quantile_with(&self, a: f64, rule: QuantileRule) -> f64 {
        match rule {
            QuantileRule::Step => self.quantile(a),
            QuantileRule::Linear => {
                let k = self.cum.partition_point(|&c| c < a - LEVEL_SLACK);
                if k == 0 {
                    return self.values[0];
                }
                if k >= self.values.len() {
                    return self.values[self.values.len() - 1];
                }
                let (c0, c1) = (self.cum[k - 1], self.cum[k]);
                let t = ((a - c0) / (c1 - c0)).clamp(0.0, 1.0);
                self.values[k - 1] + t * (self.values[k] - self.values[k - 1])
            }
        }
    }

    /// Gaussian-kernel smoothed density `sum_i w_i phi_h(y - v_i)`.
    pub fn density(&self, y: f64, h: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * normal_pdf((y - v) / h))
            .sum::<f64>()
            / h
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().zip(&self.weights).map(|(v, w)| w * (v - m) * (v - m)).sum()
    }

    /// Kish effective sample size `1 / sum w_i^2`.
    pub fn effective_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Weighted Silverman bandwidth `1.06 min(sd, IQR/1.349) n_eff^(-1/5)`.
    ///
    /// Falls back to the standard deviation when the IQR vanishes, and to
    /// `fallback` when the sample is degenerate.
    pub fn rule_of_thumb_bandwidth(&self, fallback: f64) -> f64 {
        let sd = self.variance().sqrt();
        let iqr = self.quantile(0.75) - self.quantile(0.25);
        let spread = match (sd > 0.0, iqr > 0.0) {
            (true, true) => sd.min(iqr / 1.349),
            (true, false) => sd,
            _ => return fallback,
        };
        1.06 * spread * self.effective_size().powf(-0.2)
    }
}

/// Conditional response law at one covariate point.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalDistribution {
    /// Weighted empirical CDF with a Gaussian-smoothed density of bandwidth `h_y`.
    Empirical { sample: WeightedSample, h_y: f64, rule: QuantileRule },
    Gaussian { mean: f64, sd: f64 },
    /// `loc + scale * W` for a reference law `W`; used by truth oracles.
    LocationScale { loc: f64, scale: f64, law: ReferenceDistribution },
}

impl LocalDistribution {
    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            LocalDistribution::Empirical { sample, .. } => sample.cdf(y),
            LocalDistribution::Gaussian { mean, sd } => normal_cdf((y - mean) / sd),
            LocalDistribution::LocationScale { loc, scale, law } => law.cdf((y - loc) / scale),
        }
    }

    /// Quantile at level `a`; levels are not validated here.
    pub fn quantile(&self, a: f64) -> f64 {
        match self {
            LocalDistribution::Empirical { sample, rule, .. } => sample.quantile_with(a, *rule),
            LocalDistribution::Gaussian { mean, sd } => mean + sd * normal_quantile(a),
            LocalDistribution::LocationScale { loc, scale, law } => {
                let a = a.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                loc + scale * law.quantile(a).unwrap_or(0.0)
            }
        }
    }

    pub fn density(&self, y: f64) -> f64 {
        match self {
            LocalDistribution::Empirical { sample, h_y, .. } => sample.density(y, *h_y),
            LocalDistribution::Gaussian { mean, sd } => normal_pdf((y - mean) / sd) / sd,
            LocalDistribution::LocationScale { loc, scale, law } => law.pdf((y - loc) / scale) / scale,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            LocalDistribution::Empirical { sample, .. } => sample.mean(),
            LocalDistribution::Gaussian { mean, .. } => *mean,
            LocalDistribution::LocationScale { loc, .. } => *loc,
        }
    }
}

/// `min(std, IQR / 1.349)` of an unweighted sample, with the standard
/// deviation used alone when the IQR vanishes.
pub fn robust_spread(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25);
    if iqr > 0.0 {
        sd.min(iqr / 1.349)
    } else {
        sd
    }
}

/// Linear-interpolation quantile of an ascending slice (type 7).
pub fn sorted_quantile(sorted: &[f64], a: f64) -> f64 {
    let pos = a * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn uniform(values: &[f64]) -> WeightedSample {
        WeightedSample::new(values.iter().map(|&v| (v, 1.0)).collect()).unwrap()
    }

    #[test]
    fn generalized_inverse_examples() {
        let s = uniform(&[3.0, 1.0, 5.0, 2.0, 4.0]);
        assert_eq!(s.quantile(0.5), 3.0);
        assert_eq!(s.quantile(0.2), 1.0);
        assert_eq!(s.quantile(0.21), 2.0);
        assert_eq!(s.quantile(0.6), 3.0);
        let w = WeightedSample::new(vec![(1.0, 0.5), (2.0, 0.3), (3.0, 0.2)]).unwrap();
        assert_eq!(w.quantile(0.6), 2.0);
        assert_eq!(w.quantile(0.5), 1.0);
        assert_eq!(w.quantile(1.0), 3.0);
    }

    #[test]
    fn cdf_bounds_and_ties() {
        let s = WeightedSample::new(vec![(1.0, 1.0), (1.0, 1.0), (2.0, 2.0)]).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
        assert_eq!(s.cdf(0.5), 0.0);
        assert_eq!(s.cdf(1.0), 0.5);
        assert_eq!(s.cdf(2.0), 1.0);
        assert_eq!(s.cdf(100.0), 1.0);
    }

    #[test]
    fn linear_rule_is_monotone_and_brackets_step() {
        let s = uniform(&[0.0, 1.0, 3.0, 4.0]);
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let a = i as f64 / 100.0;
            let q = s.quantile_with(a, QuantileRule::Linear);
            assert!(q >= prev);
            prev = q;
        }
        assert_eq!(s.quantile_with(0.5, QuantileRule::Linear), 1.0);
        assert_eq!(s.quantile_with(0.625, QuantileRule::Linear), 2.0);
    }

    #[test]
    fn rejects_empty_and_negative() {
        assert_eq!(WeightedSample::new(vec![(1.0, 0.0)]), Err(Error::EmptyNeighborhood));
        assert!(WeightedSample::new(vec![(1.0, -1.0)]).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let s = WeightedSample::new(vec![(-1.0, 0.3), (0.5, 0.2), (2.0, 0.5)]).unwrap();
        let (lo, hi, n) = (-10.0, 12.0, 20_000);
        let h = (hi - lo) / n as f64;
        let total: f64 = (0..n).map(|i| s.density(lo + (i as f64 + 0.5) * h, 0.4) * h).sum();
        assert!((total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn bandwidth_fallback_for_point_mass() {
        let s = uniform(&[2.0, 2.0]);
        assert_eq!(s.rule_of_thumb_bandwidth(0.25), 0.25);
        assert!(uniform(&[1.0, 2.0, 3.0]).rule_of_thumb_bandwidth(0.25) > 0.0);
    }

    #[test]
    fn robust_spread_uses_smaller_scale() {
        let v = [1.0, 2.0, 3.0, 4.0, 100.0];
        let s = robust_spread(&v);
        assert!((s - 2.0 / 1.349).abs() < 1e-12);
        assert_eq!(robust_spread(&[1.0]), 0.0);
    }
}

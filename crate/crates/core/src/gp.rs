//! Gaussian-process regression on random Fourier features.
//!
//! The squared-exponential kernel is approximated by `D` random cosine
//! features and the GP becomes Bayesian linear regression on them. Responses
//! and covariates are standardized internally.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::Dataset;
use crate::dist::{normal_cdf, normal_pdf, normal_quantile};
use crate::linalg::{gram_columns, gram_rows, Cholesky};
use crate::local::LocalDistribution;
use crate::rng::{RandomSource, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct GpConfig {
    pub features: usize,
    /// Kernel lengthscale on standardized covariates; `None` uses the median pairwise distance.
    pub lengthscale: Option<f64>,
    /// Noise variance in response units; `None` selects it by cross-validation.
    pub noise_var: Option<f64>,
    /// Candidate noise variances relative to the response variance.
    pub noise_grid: Vec<f64>,
    pub cv_folds: usize,
    /// Largest subsample used for noise selection and the lengthscale heuristic.
    pub cv_max_points: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            features: 1000,
            lengthscale: None,
            noise_var: None,
            noise_grid: (0..7).map(|k| 10f64.powf(-3.0 + 0.5 * k as f64)).collect(),
            cv_folds: 5,
            cv_max_points: 400,
        }
    }
}

#[derive(Debug, Clone)]
enum Posterior {
    /// `n <= D`: factor of `Phi Phi^T + s^2 I` and the features of the training rows.
    Dual { phi: Vec<f64>, chol: Cholesky, alpha: Vec<f64> },
    /// `n > D`: factor of `Phi^T Phi + s^2 I` and the posterior mean weights.
    Primal { chol: Cholesky, weights: Vec<f64> },
}

/// A fitted random-feature GP with Gaussian predictive laws.
#[derive(Debug, Clone)]
pub struct RffGpModel {
    dim: usize,
    features: usize,
    omega: Vec<f64>,
    phase: Vec<f64>,
    x_center: Vec<f64>,
    x_scale: Vec<f64>,
    y_center: f64,
    y_scale: f64,
    lengthscale: f64,
    /// Noise variance on the standardized response scale.
    noise_std_var: f64,
    posterior: Posterior,
    jitter_retries: usize,
}

fn standardize_columns(train: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let n = train.len() as f64;
    (0..train.dim())
        .map(|j| {
            let col = train.x().column_values(j);
            let m = col.iter().sum::<f64>() / n;
            let v = col.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / n;
            (m, if v > 0.0 { v.sqrt() } else { 1.0 })
        })
        .unzip()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Median Euclidean distance over distinct pairs of rows.
pub fn median_pairwise_distance(rows: &[Vec<f64>]) -> f64 {
    let mut d = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
    for i in 0..rows.len() {
        for j in 0..i {
            d.push(rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    median(d)
}

fn factor_with_jitter(mut a: Vec<f64>, n: usize, retries: &mut usize) -> Result<Cholesky> {
    let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let mut jitter = 1e-8 * (trace / n as f64).max(f64::MIN_POSITIVE);
    for i in 0..n {
        a[i * n + i] += jitter;
    }
    for _ in 0..8 {
        match Cholesky::factor(a.clone(), n) {
            Ok(c) => return Ok(c),
            Err(_) => {
                *retries += 1;
                for i in 0..n {
                    a[i * n + i] += 99.0 * jitter;
                }
                jitter *= 100.0;
            }
        }
    }
    Err(Error::Singular)
}

impl RffGpModel {
    fn featurize(&self, x: &[f64], out: &mut [f64]) {
        let norm = (2.0 / self.features as f64).sqrt();
        let p = self.dim;
        for (k, o) in out.iter_mut().enumerate() {
            let w = &self.omega[k * p..(k + 1) * p];
            let arg: f64 = (0..p).map(|j| w[j] * (x[j] - self.x_center[j]) / self.x_scale[j]).sum::<f64>() + self.phase[k];
            *o = norm * arg.cos();
        }
    }

    fn design(&self, train: &Dataset, rows: &[usize]) -> Vec<f64> {
        let d = self.features;
        let mut phi = vec![0.0; rows.len() * d];
        for (r, &i) in rows.iter().enumerate() {
            self.featurize(train.x().row(i), &mut phi[r * d..(r + 1) * d]);
        }
        phi
    }

    pub fn n_features(&self) -> usize {
        self.dim
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Noise variance in response units.
    pub fn noise_var(&self) -> f64 {
        self.noise_std_var * self.y_scale * self.y_scale
    }

    /// Number of jitter escalations needed to factor the posterior system.
    pub fn jitter_retries(&self) -> usize {
        self.jitter_retries
    }

    /// Predictive mean and standard deviation at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dim {
            return Err(Error::SizeMismatch { expected: self.dim, got: x.len() });
        }
        let mut z = vec![0.0; self.features];
        self.featurize(x, &mut z);
        let s2 = self.noise_std_var;
        let (mean, var) = match &self.posterior {
            Posterior::Dual { phi, chol, alpha } => {
                let d = self.features;
                let k: Vec<f64> =
                    (0..alpha.len()).map(|i| phi[i * d..(i + 1) * d].iter().zip(&z).map(|(a, b)| a * b).sum()).collect();
                let mean: f64 = k.iter().zip(alpha).map(|(a, b)| a * b).sum();
                let zz: f64 = z.iter().map(|v| v * v).sum();
                (mean, s2 + (zz - chol.quad_form(&k)).max(0.0))
            }
            Posterior::Primal { chol, weights } => {
                let mean: f64 = z.iter().zip(weights).map(|(a, b)| a * b).sum();
                (mean, s2 + s2 * chol.quad_form(&z))
            }
        };
        Ok((self.y_center + self.y_scale * mean, self.y_scale * var.sqrt()))
    }

    pub fn local(&self, x: &[f64]) -> Result<LocalDistribution> {
        let (mean, sd) = self.predict(x)?;
        Ok(LocalDistribution::Gaussian { mean, sd })
    }

    pub fn gp_cdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        let (m, s) = self.predict(x)?;
        Ok(normal_cdf((y - m) / s))
    }

    pub fn gp_quantile(&self, a: f64, x: &[f64]) -> Result<f64> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidLevel(a));
        }
        let (m, s) = self.predict(x)?;
        Ok(m + s * normal_quantile(a))
    }

    pub fn gp_density(&self, y: f64, x: &[f64]) -> Result<f64> {
        let (m, s) = self.predict(x)?;
        Ok(normal_pdf((y - m) / s) / s)
    }
}

/// Fits the random-feature GP. Frequencies, phases and CV folds draw from `rng`.
pub fn fit_rff_gp(train: &Dataset, config: &GpConfig, rng: RandomSource) -> Result<RffGpModel> {
    let n = train.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if config.features == 0 {
        return Err(Error::InvalidParameter("feature count must be positive"));
    }
    if matches!(config.lengthscale, Some(l) if !(l > 0.0)) || matches!(config.noise_var, Some(v) if !(v > 0.0)) {
        return Err(Error::InvalidParameter("lengthscale and noise variance must be positive"));
    }
    let p = train.dim();
    let d = config.features;
    let (x_center, x_scale) = standardize_columns(train);
    let y = train.y();
    let y_center = y.iter().sum::<f64>() / n as f64;
    let y_var = y.iter().map(|v| (v - y_center) * (v - y_center)).sum::<f64>() / n as f64;
    let y_scale = if y_var > 0.0 { y_var.sqrt() } else { 1.0 };
    let ys: Vec<f64> = y.iter().map(|v| (v - y_center) / y_scale).collect();

    let mut subsample: Vec<usize> = (0..n).collect();
    subsample.shuffle(&mut rng.stream(Stream::Folds));
    subsample.truncate(config.cv_max_points.max(2));

    let lengthscale = match config.lengthscale {
        Some(l) => l,
        None => {
            let rows: Vec<Vec<f64>> = subsample
                .iter()
                .map(|&i| train.x().row(i).iter().enumerate().map(|(j, v)| (v - x_center[j]) / x_scale[j]).collect())
                .collect();
            let m = median_pairwise_distance(&rows);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    };

    let mut r = rng.stream(Stream::Model);
    let omega: Vec<f64> = (0..d * p).map(|_| r.sample::<f64, _>(StandardNormal) / lengthscale).collect();
    let phase: Vec<f64> = (0..d).map(|_| r.random_range(0.0..2.0 * PI)).collect();

    let mut model = RffGpModel {
        dim: p,
        features: d,
        omega,
        phase,
        x_center,
        x_scale,
        y_center,
        y_scale,
        lengthscale,
        noise_std_var: 1.0,
        posterior: Posterior::Primal { chol: Cholesky::factor(vec![1.0], 1)?, weights: Vec::new() },
        jitter_retries: 0,
    };

    model.noise_std_var = match config.noise_var {
        Some(v) => v / (y_scale * y_scale),
        None => select_noise(&model, train, &ys, &subsample, config)?,
    };

    let all: Vec<usize> = (0..n).collect();
    let phi = model.design(train, &all);
    let s2 = model.noise_std_var;
    let mut retries = 0;
    model.posterior = if n <= d {
        let mut k = gram_rows(&phi, n, d);
        for i in 0..n {
            k[i * n + i] += s2;
        }
        let chol = factor_with_jitter(k, n, &mut retries)?;
        let alpha = chol.solve(&ys);
        Posterior::Dual { phi, chol, alpha }
    } else {
        let mut a = gram_columns(&phi, n, d);
        for i in 0..d {
            a[i * d + i] += s2;
        }
        let chol = factor_with_jitter(a, d, &mut retries)?;
        let rhs: Vec<f64> = (0..d).map(|k| (0..n).map(|i| phi[i * d + k] * ys[i]).sum()).collect();
        Posterior::Primal { weights: chol.solve(&rhs), chol }
    };
    model.jitter_retries = retries;
    Ok(model)
}

/// Picks the standardized noise variance minimizing held-out Gaussian NLPD.
fn select_noise(model: &RffGpModel, train: &Dataset, ys: &[f64], sub: &[usize], config: &GpConfig) -> Result<f64> {
    if config.noise_grid.is_empty() || config.noise_grid.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("noise grid must hold positive values"));
    }
    let m = sub.len();
    let k = config.cv_folds.clamp(2, m);
    let d = model.features;
    let phi = model.design(train, sub);
    let gram = gram_rows(&phi, m, d);
    let mut best = (f64::INFINITY, config.noise_grid[0]);
    let mut retries = 0;
    for &s2 in &config.noise_grid {
        let mut nlpd = 0.0;
        for f in 0..k {
            let tr: Vec<usize> = (0..m).filter(|i| i % k != f).collect();
            let te: Vec<usize> = (0..m).filter(|i| i % k == f).collect();
            let nt = tr.len();
            let mut kt = vec![0.0; nt * nt];
            for (a, &i) in tr.iter().enumerate() {
                for (b, &j) in tr.iter().enumerate() {
                    kt[a * nt + b] = gram[i * m + j];
                }
                kt[a * nt + a] += s2;
            }
            let chol = factor_with_jitter(kt, nt, &mut retries)?;
            let alpha = chol.solve(&tr.iter().map(|&i| ys[sub[i]]).collect::<Vec<_>>());
            for &v in &te {
                let kv: Vec<f64> = tr.iter().map(|&i| gram[i * m + v]).collect();
                let mu: f64 = kv.iter().zip(&alpha).map(|(a, b)| a * b).sum();
                let var = s2 + (gram[v * m + v] - chol.quad_form(&kv)).max(0.0);
                let r = ys[sub[v]] - mu;
                nlpd += 0.5 * (2.0 * PI * var).ln() + r * r / (2.0 * var);
            }
        }
        if nlpd < best.0 {
            best = (nlpd, s2);
        }
    }
    Ok(best.1)
}

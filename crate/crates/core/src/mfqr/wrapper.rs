//! The two-stage wrapper estimator.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::local::LocalDistribution;
use crate::model::{BackendConfig, ConditionalModel, FittedModel};
use crate::rng::RandomSource;
use crate::{Error, Result};

/// Levels are clamped to `[LEVEL_CLAMP, 1 - LEVEL_CLAMP]` before LF inversion.
pub const LEVEL_CLAMP: f64 = 1e-4;

/// `U_i = F_L(Y_i | X_i)` for every HF observation.
pub fn wrap_pseudo_responses(lf_model: &impl ConditionalModel, hf: &Dataset) -> Result<Vec<f64>> {
    hf.x().iter_rows().zip(hf.y()).map(|(x, &y)| Ok(lf_model.cdf(y, x)?.clamp(0.0, 1.0))).collect()
}

pub fn clamp_level(u: f64) -> f64 {
    u.clamp(LEVEL_CLAMP, 1.0 - LEVEL_CLAMP)
}

pub(crate) fn check_taus(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::InvalidParameter("at least one target level is required"));
    }
    match taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        Some(&t) => Err(Error::InvalidLevel(t)),
        None => Ok(()),
    }
}

/// LF model, level model on the wrapped HF sample, and the target levels.
///
/// One level model serves every level: its conditional law of `U` at `x` is
/// queried at each `tau`.
#[derive(Debug, Clone)]
pub struct WrapperFit<L = FittedModel> {
    lf: Arc<L>,
    level: FittedModel,
    taus: Vec<f64>,
}

/// Both conditional laws a wrapper prediction needs at one covariate point.
#[derive(Debug, Clone)]
pub struct WrapperPoint {
    pub lf: LocalDistribution,
    pub level: LocalDistribution,
}

impl WrapperPoint {
    pub fn level_at(&self, tau: f64) -> f64 {
        clamp_level(self.level.quantile(tau))
    }

    pub fn predict(&self, tau: f64) -> f64 {
        self.lf.quantile(self.level_at(tau))
    }
}

/// Fits the LF model on `lf` and the wrapper on `hf`.
pub fn fit_wrapper(
    lf: &Dataset,
    hf: &Dataset,
    taus: &[f64],
    backend: &BackendConfig,
    rng: RandomSource,
) -> Result<WrapperFit> {
    if lf.is_empty() || hf.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let lf_model = Arc::new(FittedModel::fit(lf, backend, rng.derive(0))?);
    WrapperFit::with_lf_model(lf_model, hf, taus, backend, rng.derive(1))
}

impl<L: ConditionalModel> WrapperFit<L> {
    /// Builds the wrapper around an already fitted LF model.
    pub fn with_lf_model(lf: Arc<L>, hf: &Dataset, taus: &[f64], backend: &BackendConfig, rng: RandomSource) -> Result<Self> {
        let u = wrap_pseudo_responses(lf.as_ref(), hf)?;
        Self::with_pseudo_responses(lf, hf, u, taus, backend, rng)
    }

    /// Like [`WrapperFit::with_lf_model`] with precomputed pseudo-responses.
    pub fn with_pseudo_responses(
        lf: Arc<L>,
        hf: &Dataset,
        pseudo: Vec<f64>,
        taus: &[f64],
        backend: &BackendConfig,
        rng: RandomSource,
    ) -> Result<Self> {
        check_taus(taus)?;
        if lf.n_features() != hf.dim() {
            return Err(Error::SizeMismatch { expected: lf.n_features(), got: hf.dim() });
        }
        let level = FittedModel::fit(&hf.with_responses(pseudo)?, backend, rng)?;
        Ok(WrapperFit { lf, level, taus: taus.to_vec() })
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn lf_model(&self) -> &Arc<L> {
        &self.lf
    }

    pub fn level_model(&self) -> &FittedModel {
        &self.level
    }

    pub fn point(&self, x: &[f64]) -> Result<WrapperPoint> {
        Ok(WrapperPoint { lf: self.lf.local(x)?, level: self.level.local(x)? })
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if self.taus.contains(&tau) {
            Ok(())
        } else {
            Err(Error::InvalidLevel(tau))
        }
    }

    /// Clamped level estimate `u_tau(x)`.
    pub fn level(&self, tau: f64, x: &[f64]) -> Result<f64> {
        self.check_tau(tau)?;
        Ok(clamp_level(self.level.local(x)?.quantile(tau)))
    }

    /// `q_tau(x) = F_L^{-1}(u_tau(x) | x)`.
    pub fn predict(&self, tau: f64, x: &[f64]) -> Result<f64> {
        self.check_tau(tau)?;
        Ok(self.point(x)?.predict(tau))
    }

    /// Predictions at every configured level.
    pub fn predict_all(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.point(x)?;
        Ok(self.taus.iter().map(|&t| p.predict(t)).collect())
    }
}

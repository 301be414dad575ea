//! Comparison methods: HF data alone, LF mean transfer, and LF-augmented covariates.

use alloc::sync::Arc;
use alloc::vec::Vec;

use super::wrapper::check_taus;
use crate::data::Dataset;
use crate::model::{BackendConfig, ConditionalModel, FittedModel};
use crate::rng::RandomSource;
use crate::{Error, Result};

/// Direct conditional quantiles from a model fitted on HF data only.
#[derive(Debug, Clone)]
pub struct HfOnly {
    pub model: FittedModel,
}

pub fn fit_hf_only(hf: &Dataset, taus: &[f64], backend: &BackendConfig, rng: RandomSource) -> Result<HfOnly> {
    check_taus(taus)?;
    Ok(HfOnly { model: FittedModel::fit(hf, backend, rng)? })
}

impl HfOnly {
    pub fn predict(&self, tau: f64, x: &[f64]) -> Result<f64> {
        self.model.quantile(tau, x)
    }
}

/// HF mean regressed on the LF mean, plus HF residual quantiles.
#[derive(Debug, Clone)]
pub struct TrMean<L = FittedModel> {
    pub lf: Arc<L>,
    pub intercept: f64,
    pub slope: f64,
    pub residual: FittedModel,
}

/// Least-squares `(a, b)` of `y ~ a + b m`; a constant `m` gives `(mean(y), 0)`.
pub fn least_squares_line(m: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if m.len() != y.len() || m.is_empty() {
        return Err(Error::SizeMismatch { expected: y.len(), got: m.len() });
    }
    let n = m.len() as f64;
    let mm = m.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = m.iter().map(|v| (v - mm) * (v - mm)).sum();
    let sxy: f64 = m.iter().zip(y).map(|(a, b)| (a - mm) * (b - my)).sum();
    if !(sxx > 1e-12 * (1.0 + mm * mm) * n) {
        return Ok((my, 0.0));
    }
    let b = sxy / sxx;
    Ok((my - b * mm, b))
}

pub fn fit_tr_mean(lf: &Dataset, hf: &Dataset, taus: &[f64], backend: &BackendConfig, rng: RandomSource) -> Result<TrMean> {
    let lf_model = Arc::new(FittedModel::fit(lf, backend, rng.derive(0))?);
    TrMean::with_lf_model(lf_model, hf, taus, backend, rng.derive(1))
}

impl<L: ConditionalModel> TrMean<L> {
    pub fn with_lf_model(lf: Arc<L>, hf: &Dataset, taus: &[f64], backend: &BackendConfig, rng: RandomSource) -> Result<Self> {
        check_taus(taus)?;
        let mu_l: Vec<f64> = hf.x().iter_rows().map(|x| lf.mean(x)).collect::<Result<_>>()?;
        let (a, b) = least_squares_line(&mu_l, hf.y())?;
        let resid: Vec<f64> = hf.y().iter().zip(&mu_l).map(|(y, m)| y - (a + b * m)).collect();
        let residual = FittedModel::fit(&hf.with_responses(resid)?, backend, rng)?;
        Ok(TrMean { lf, intercept: a, slope: b, residual })
    }

    pub fn hf_mean(&self, x: &[f64]) -> Result<f64> {
        Ok(self.intercept + self.slope * self.lf.mean(x)?)
    }

    pub fn predict(&self, tau: f64, x: &[f64]) -> Result<f64> {
        Ok(self.residual.quantile(tau, x)? + self.hf_mean(x)?)
    }
}

/// HF quantile model on covariates `[x, mu_L(x)]`.
#[derive(Debug, Clone)]
pub struct TrAugment<L = FittedModel> {
    pub lf: Arc<L>,
    pub model: FittedModel,
}

pub fn fit_tr_augment(lf: &Dataset, hf: &Dataset, taus: &[f64], backend: &BackendConfig, rng: RandomSource) -> Result<TrAugment> {
    let lf_model = Arc::new(FittedModel::fit(lf, backend, rng.derive(0))?);
    TrAugment::with_lf_model(lf_model, hf, taus, backend, rng.derive(1))
}

impl<L: ConditionalModel> TrAugment<L> {
    pub fn with_lf_model(lf: Arc<L>, hf: &Dataset, taus: &[f64], backend: &BackendConfig, rng: RandomSource) -> Result<Self> {
        check_taus(taus)?;
        let mu_l: Vec<f64> = hf.x().iter_rows().map(|x| lf.mean(x)).collect::<Result<_>>()?;
        let augmented = hf.with_covariates(hf.x().with_extra_column(&mu_l)?)?;
        Ok(TrAugment { lf, model: FittedModel::fit(&augmented, backend, rng)? })
    }

    pub fn augment(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = x.to_vec();
        z.push(self.lf.mean(x)?);
        Ok(z)
    }

    pub fn predict(&self, tau: f64, x: &[f64]) -> Result<f64> {
        self.model.quantile(tau, &self.augment(x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Fidelity;
    use crate::kernel::{KernelConfig, KernelQuantileModel};
    use crate::model::{BackendKind, OracleModel};
    use crate::synthetic::{generate, RegimeKind, RegimeSpec, TruthOracle};
    use alloc::vec;

    fn kernel() -> BackendConfig {
        BackendConfig::of(BackendKind::Kernel)
    }

    #[test]
    fn hf_only_median_of_five() {
        let hf = Dataset::from_scalar(vec![1.0; 5], vec![4.0, 1.0, 5.0, 3.0, 2.0], Fidelity::High).unwrap();
        for kind in [BackendKind::Kernel, BackendKind::Forest] {
            let m = fit_hf_only(&hf, &[0.5], &BackendConfig::of(kind), RandomSource::new(0)).unwrap();
            assert_eq!(m.predict(0.5, &[1.0]).unwrap(), 3.0);
        }
    }

    #[test]
    fn hf_only_matches_kernel_quantile_and_is_monotone() {
        let d = generate(&RegimeSpec::with_defaults(RegimeKind::NonInformative, 1), RandomSource::new(1)).unwrap();
        let m = fit_hf_only(&d.hf, &[0.05, 0.5, 0.95], &kernel(), RandomSource::new(0)).unwrap();
        let direct = KernelQuantileModel::fit(&d.hf, &KernelConfig::default(), 0.95).unwrap();
        for i in 0..20 {
            let x = [0.025 * i as f64];
            assert_eq!(m.predict(0.95, &x).unwrap(), direct.quantile_eval(&x).unwrap());
            let a = m.predict(0.05, &x).unwrap();
            let b = m.predict(0.5, &x).unwrap();
            assert!(a <= b && b <= m.predict(0.95, &x).unwrap());
        }
    }

    #[test]
    fn least_squares_examples() {
        let m = vec![0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = m.iter().map(|v| v + 2.5).collect();
        let (a, b) = least_squares_line(&m, &y).unwrap();
        assert!((a - 2.5).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        assert_eq!(least_squares_line(&[1.0; 3], &[1.0, 2.0, 6.0]).unwrap(), (3.0, 0.0));
    }

    #[test]
    fn tr_mean_with_exact_mean_is_identity_regression() {
        let t = TruthOracle::new(RegimeKind::Informative);
        let d = generate(&RegimeSpec::with_defaults(RegimeKind::Informative, 5), RandomSource::new(5)).unwrap();
        let m = TrMean::with_lf_model(Arc::new(OracleModel::low(t)), &d.hf, &[0.5], &kernel(), RandomSource::new(0)).unwrap();
        assert!(m.intercept.abs() < 0.1, "{}", m.intercept);
        assert!((m.slope - 1.0).abs() < 0.05, "{}", m.slope);
        // residual medians of symmetric noise sit near zero
        let med: f64 = (0..30)
            .map(|i| m.residual.quantile(0.5, &[1.55 + 0.1 * i as f64]).unwrap().abs())
            .sum::<f64>()
            / 30.0;
        assert!(med < 0.1, "{med}");
    }

    #[test]
    fn tr_mean_constant_shift() {
        let t = TruthOracle::new(RegimeKind::Misinformative);
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| t.lf_mean(x) + 0.7).collect();
        let hf = Dataset::from_scalar(xs, ys, Fidelity::High).unwrap();
        let m = TrMean::with_lf_model(Arc::new(OracleModel::low(t)), &hf, &[0.5], &kernel(), RandomSource::new(0)).unwrap();
        assert!((m.intercept - 0.7).abs() < 1e-12 && (m.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tr_augment_shapes_and_constant_feature() {
        let lf = Dataset::from_scalar(vec![0.0, 1.0, 2.0], vec![4.0; 3], Fidelity::Low).unwrap();
        let hf = Dataset::from_scalar((0..10).map(f64::from).collect(), (0..10).map(|i| f64::from(i * i)).collect(), Fidelity::High)
            .unwrap();
        // with every feature tried at each split, a constant feature never splits
        let mut forest = BackendConfig::of(BackendKind::Forest);
        forest.forest.mtry = Some(2);
        forest.forest.min_leaf = 2;
        forest.forest.n_trees = 25;
        let lf_model = Arc::new(FittedModel::fit(&lf, &forest, RandomSource::new(0)).unwrap());
        let aug = TrAugment::with_lf_model(lf_model, &hf, &[0.5], &forest, RandomSource::new(3)).unwrap();
        assert_eq!(aug.model.n_features(), 2);
        assert_eq!(aug.augment(&[3.0]).unwrap(), vec![3.0, 4.0]);
        let only = fit_hf_only(&hf, &[0.5], &forest, RandomSource::new(3)).unwrap();
        for x in [0.5, 4.0, 8.7] {
            assert_eq!(aug.predict(0.5, &[x]).unwrap(), only.predict(0.5, &[x]).unwrap());
        }
    }
}

//! Back-end selection and a common interface over fitted conditional models.

use alloc::vec::Vec;

use crate::data::Dataset;
use crate::forest::{fit_forest, ForestConfig, ForestModel};
use crate::gp::{fit_rff_gp, GpConfig, RffGpModel};
use crate::kernel::{KernelCdfModel, KernelConfig};
use crate::local::LocalDistribution;
use crate::rng::RandomSource;
use crate::synthetic::TruthOracle;
use crate::{Error, Result};

/// A fitted estimate of `F(y | x)`.
pub trait ConditionalModel {
    fn n_features(&self) -> usize;

    /// The conditional law at `x`, for repeated evaluation at one point.
    fn local(&self, x: &[f64]) -> Result<LocalDistribution>;

    fn cdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        Ok(self.local(x)?.cdf(y))
    }

    fn quantile(&self, a: f64, x: &[f64]) -> Result<f64> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidLevel(a));
        }
        Ok(self.local(x)?.quantile(a))
    }

    fn density(&self, y: f64, x: &[f64]) -> Result<f64> {
        Ok(self.local(x)?.density(y))
    }

    fn mean(&self, x: &[f64]) -> Result<f64> {
        Ok(self.local(x)?.mean())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BackendKind {
    Kernel,
    #[default]
    Forest,
    Gp,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Kernel => "kernel",
            BackendKind::Forest => "forest",
            BackendKind::Gp => "gp",
        }
    }

    pub fn parse(s: &str) -> Option<BackendKind> {
        [BackendKind::Kernel, BackendKind::Forest, BackendKind::Gp].into_iter().find(|k| k.name() == s)
    }
}

/// Which back-end to fit, with the settings of every family.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub kernel: KernelConfig,
    pub forest: ForestConfig,
    pub gp: GpConfig,
}

impl BackendConfig {
    pub fn of(kind: BackendKind) -> Self {
        BackendConfig { kind, ..BackendConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub enum FittedModel {
    Kernel(KernelCdfModel),
    Forest(ForestModel),
    Gp(RffGpModel),
    Oracle(OracleModel),
}

impl FittedModel {
    /// Fits the configured back-end to `train`. Forests fitted on fewer
    /// points than `min_leaf` use a single leaf.
    pub fn fit(train: &Dataset, config: &BackendConfig, rng: RandomSource) -> Result<Self> {
        Ok(match config.kind {
            BackendKind::Kernel => FittedModel::Kernel(KernelCdfModel::fit(train, &config.kernel)?),
            BackendKind::Forest => {
                let mut forest = config.forest.clone();
                forest.min_leaf = forest.min_leaf.min(train.len()).max(1);
                FittedModel::Forest(fit_forest(train, &forest, rng)?)
            }
            BackendKind::Gp => FittedModel::Gp(fit_rff_gp(train, &config.gp, rng)?),
        })
    }
}

impl ConditionalModel for FittedModel {
    fn n_features(&self) -> usize {
        match self {
            FittedModel::Kernel(m) => m.train().dim(),
            FittedModel::Forest(m) => m.train().dim(),
            FittedModel::Gp(m) => m.n_features(),
            FittedModel::Oracle(_) => 1,
        }
    }

    fn local(&self, x: &[f64]) -> Result<LocalDistribution> {
        match self {
            FittedModel::Kernel(m) => m.local(x),
            FittedModel::Forest(m) => m.local(x),
            FittedModel::Gp(m) => m.local(x),
            FittedModel::Oracle(m) => m.local(x),
        }
    }
}

/// Exact conditional law of one fidelity of a synthetic regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleModel {
    pub truth: TruthOracle,
    pub low_fidelity: bool,
}

impl OracleModel {
    pub fn high(truth: TruthOracle) -> Self {
        OracleModel { truth, low_fidelity: false }
    }

    pub fn low(truth: TruthOracle) -> Self {
        OracleModel { truth, low_fidelity: true }
    }
}

impl ConditionalModel for OracleModel {
    fn n_features(&self) -> usize {
        1
    }

    fn local(&self, x: &[f64]) -> Result<LocalDistribution> {
        let [x] = x else {
            return Err(Error::SizeMismatch { expected: 1, got: x.len() });
        };
        let (t, x) = (self.truth, *x);
        Ok(if self.low_fidelity {
            LocalDistribution::LocationScale { loc: t.lf_mean(x), scale: t.lf_scale(x), law: t.kind.lf_noise() }
        } else {
            LocalDistribution::LocationScale { loc: t.hf_mean(x), scale: t.hf_scale(x), law: t.kind.hf_noise() }
        })
    }
}

/// Evaluates `model.local` at every row of `data`.
pub fn locals_at(model: &impl ConditionalModel, data: &Dataset) -> Result<Vec<LocalDistribution>> {
    data.x().iter_rows().map(|x| model.local(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Fidelity;
    use crate::synthetic::RegimeKind;
    use alloc::vec;

    #[test]
    fn backends_agree_on_identical_covariates() {
        let d = Dataset::from_scalar(vec![0.5; 5], vec![5.0, 3.0, 1.0, 2.0, 4.0], Fidelity::High).unwrap();
        for kind in [BackendKind::Kernel, BackendKind::Forest] {
            let m = FittedModel::fit(&d, &BackendConfig::of(kind), RandomSource::new(0)).unwrap();
            assert_eq!(m.cdf(5.0, &[0.5]).unwrap(), 1.0);
            assert!(m.quantile(0.0, &[0.5]).is_err());
        }
        let k = FittedModel::fit(&d, &BackendConfig::of(BackendKind::Kernel), RandomSource::new(0)).unwrap();
        assert_eq!(k.quantile(0.5, &[0.5]).unwrap(), 3.0);
    }

    #[test]
    fn oracle_matches_truth() {
        let t = TruthOracle::new(RegimeKind::Informative);
        let hf = OracleModel::high(t);
        let lf = OracleModel::low(t);
        let x = 2.7;
        assert!((hf.quantile(0.95, &[x]).unwrap() - t.true_hf_quantile(0.95, x).unwrap()).abs() < 1e-12);
        assert!((lf.cdf(0.4, &[x]).unwrap() - t.true_lf_cdf(0.4, x)).abs() < 1e-15);
        assert!((hf.density(-0.3, &[x]).unwrap() - t.true_hf_density(-0.3, x)).abs() < 1e-15);
        assert!(hf.local(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn backend_names_round_trip() {
        for k in [BackendKind::Kernel, BackendKind::Forest, BackendKind::Gp] {
            assert_eq!(BackendKind::parse(k.name()), Some(k));
        }
        assert_eq!(BackendKind::parse("svm"), None);
    }
}

//! The three benchmark regimes and their closed-form truth.
//!
//! Every regime follows `Y = mu(x) + sigma(x) W` at each fidelity with its own
//! mean, scale and noise law. The truth oracle exposes the exact HF quantile,
//! HF/LF CDFs and the level function linking them.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;


use crate::data::{split_pool, Dataset, Fidelity, Matrix, SplitSpec};
use crate::dist::{uniform, ReferenceDistribution};
use crate::rng::{RandomSource, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RegimeKind {
    /// LF shares the HF shape, inflated by 1.7 with heavier tails.
    Informative,
    /// LF carries heteroscedasticity absent from the HF data.
    NonInformative,
    /// LF and HF means differ nonlinearly.
    Misinformative,
}

impl RegimeKind {
    pub const ALL: [RegimeKind; 3] =
        [RegimeKind::Informative, RegimeKind::NonInformative, RegimeKind::Misinformative];

    pub fn name(self) -> &'static str {
        match self {
            RegimeKind::Informative => "informative",
            RegimeKind::NonInformative => "non_informative",
            RegimeKind::Misinformative => "misinformative",
        }
    }

    pub fn parse(s: &str) -> Option<RegimeKind> {
        RegimeKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Benchmark split sizes (LF, HF, calibration, test).
    pub fn default_split(self, seed: u64) -> SplitSpec {
        let (n_lf, n_hf, n_cal, n_test) = match self {
            RegimeKind::Informative => (1250, 125, 250, 3375),
            RegimeKind::NonInformative => (1250, 125, 250, 875),
            RegimeKind::Misinformative => (2500, 350, 500, 1650),
        };
        SplitSpec { n_lf, n_hf, n_cal, n_test, seed }
    }

    /// Covariate support `(lo, hi)` of the uniform design.
    pub fn covariate_range(self) -> (f64, f64) {
        match self {
            RegimeKind::Informative => (1.5, 4.5),
            RegimeKind::NonInformative => (0.0, 0.5),
            RegimeKind::Misinformative => (0.0, 1.0),
        }
    }

    pub fn hf_noise(self) -> ReferenceDistribution {
        ReferenceDistribution::StandardNormal
    }

    pub fn lf_noise(self) -> ReferenceDistribution {
        match self {
            RegimeKind::Misinformative => ReferenceDistribution::StandardNormal,
            _ => ReferenceDistribution::StandardizedT { dof: 10 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegimeSpec {
    pub kind: RegimeKind,
    pub split: SplitSpec,
}

impl RegimeSpec {
    pub fn with_defaults(kind: RegimeKind, seed: u64) -> Self {
        RegimeSpec { kind, split: kind.default_split(seed) }
    }
}

/// The four datasets of one simulated replicate.
#[derive(Debug, Clone)]
pub struct Splits {
    pub lf: Dataset,
    pub hf: Dataset,
    pub cal: Dataset,
    pub test: Dataset,
}

/// Draws one covariate pool, splits it, and attaches LF responses to the LF
/// subset and HF responses to the HF, calibration and test subsets.
pub fn generate(regime: &RegimeSpec, rng: RandomSource) -> Result<Splits> {
    let n = regime.split.total();
    let idx = split_pool(n, &regime.split)?;
    let (lo, hi) = regime.kind.covariate_range();
    let mut cov_rng = rng.stream(Stream::Covariates);
    let pool: Vec<f64> = (0..n).map(|_| uniform(&mut cov_rng, lo, hi)).collect();
    let oracle = TruthOracle::new(regime.kind);

    let mut lf_rng = rng.stream(Stream::LowNoise);
    let mut hf_rng = rng.stream(Stream::HighNoise);
    let g_l = regime.kind.lf_noise();
    let g_h = regime.kind.hf_noise();

    let mut build = |ids: &[usize], fidelity: Fidelity| -> Result<Dataset> {
        let xs: Vec<f64> = ids.iter().map(|&i| pool[i]).collect();
        let ys = xs
            .iter()
            .map(|&x| match fidelity {
                Fidelity::Low => oracle.lf_mean(x) + oracle.lf_scale(x) * g_l.sample_one(&mut lf_rng),
                Fidelity::High => oracle.hf_mean(x) + oracle.hf_scale(x) * g_h.sample_one(&mut hf_rng),
            })
            .collect();
        Dataset::new(Matrix::column(xs), ys, fidelity)
    };
    Ok(Splits {
        lf: build(&idx.lf, Fidelity::Low)?,
        hf: build(&idx.hf, Fidelity::High)?,
        cal: build(&idx.cal, Fidelity::High)?,
        test: build(&idx.test, Fidelity::High)?,
    })
}

/// Closed-form conditional laws of a synthetic regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthOracle {
    pub kind: RegimeKind,
}

fn check_level(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLevel(tau))
    }
}

impl TruthOracle {
    pub fn new(kind: RegimeKind) -> Self {
        TruthOracle { kind }
    }

    pub fn hf_mean(&self, x: f64) -> f64 {
        match self.kind {
            RegimeKind::Informative => 0.5 * x * x - 2.0 * x + 1.0,
            RegimeKind::NonInformative => 0.6 * (2.0 * (2.0 * PI * x).sin() + x),
            RegimeKind::Misinformative => (2.0 * PI * x).sin(),
        }
    }

    pub fn lf_mean(&self, x: f64) -> f64 {
        match self.kind {
            RegimeKind::Misinformative => 0.5 * (2.0 * PI * x).sin() + 1.5 * (4.0 * PI * x).sin(),
            _ => self.hf_mean(x),
        }
    }

    pub fn hf_scale(&self, x: f64) -> f64 {
        match self.kind {
            RegimeKind::Informative => 0.1 + 0.35 * (3.0 * PI * x).sin().powi(2),
            RegimeKind::NonInformative => 0.1,
            RegimeKind::Misinformative => 0.15 + 0.3 * (2.0 * x - 1.0).powi(2),
        }
    }

    pub fn lf_scale(&self, x: f64) -> f64 {
        match self.kind {
            RegimeKind::Informative => 1.7 * self.hf_scale(x),
            RegimeKind::NonInformative => 0.1 + 6.4 * (x - 0.25).powi(2),
            RegimeKind::Misinformative => self.hf_scale(x),
        }
    }

    /// Relative scale distortion `sigma_L / sigma_H`.
    pub fn distortion(&self, x: f64) -> f64 {
        match self.kind {
            RegimeKind::Informative => 1.7,
            _ => self.lf_scale(x) / self.hf_scale(x),
        }
    }

    pub fn true_hf_quantile(&self, tau: f64, x: f64) -> Result<f64> {
        Ok(self.hf_mean(x) + self.hf_scale(x) * self.kind.hf_noise().quantile(tau)?)
    }

    pub fn true_hf_cdf(&self, y: f64, x: f64) -> f64 {
        self.kind.hf_noise().cdf((y - self.hf_mean(x)) / self.hf_scale(x))
    }

    pub fn true_hf_density(&self, y: f64, x: f64) -> f64 {
        let s = self.hf_scale(x);
        self.kind.hf_noise().pdf((y - self.hf_mean(x)) / s) / s
    }

    pub fn true_lf_cdf(&self, y: f64, x: f64) -> f64 {
        self.kind.lf_noise().cdf((y - self.lf_mean(x)) / self.lf_scale(x))
    }

    pub fn true_lf_quantile(&self, a: f64, x: f64) -> Result<f64> {
        Ok(self.lf_mean(x) + self.lf_scale(x) * self.kind.lf_noise().quantile(a)?)
    }

    /// The LF level whose LF quantile equals the HF `tau`-quantile at `x`.
    pub fn true_level_function(&self, tau: f64, x: f64) -> Result<f64> {
        check_level(tau)?;
        let z_h = self.kind.hf_noise().quantile(tau)?;
        Ok(match self.kind {
            RegimeKind::Misinformative => {
                let q = self.hf_mean(x) + self.hf_scale(x) * z_h;
                self.kind.lf_noise().cdf((q - self.lf_mean(x)) / self.lf_scale(x))
            }
            _ => self.kind.lf_noise().cdf(z_h / self.distortion(x)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{normal_quantile, student_t_cdf};

    #[test]
    fn default_splits() {
        let s = RegimeKind::Informative.default_split(0);
        assert_eq!((s.n_lf, s.n_hf, s.n_cal, s.n_test, s.total()), (1250, 125, 250, 3375, 5000));
        let s = RegimeKind::Misinformative.default_split(0);
        assert_eq!((s.n_lf, s.n_hf, s.n_cal, s.total()), (2500, 350, 500, 5000));
        let s = RegimeKind::NonInformative.default_split(0);
        assert_eq!(s.total(), 2500);
    }

    #[test]
    fn generate_shapes_and_ranges() {
        for kind in RegimeKind::ALL {
            let spec = RegimeSpec::with_defaults(kind, 3);
            let d = generate(&spec, RandomSource::new(3)).unwrap();
            assert_eq!(d.lf.len(), spec.split.n_lf);
            assert_eq!(d.hf.len(), spec.split.n_hf);
            assert_eq!(d.cal.len(), spec.split.n_cal);
            assert_eq!(d.test.len(), spec.split.n_test);
            assert_eq!(d.lf.fidelity(), Fidelity::Low);
            let (lo, hi) = kind.covariate_range();
            for set in [&d.lf, &d.hf, &d.cal, &d.test] {
                assert!(set.x().as_slice().iter().all(|&x| x >= lo && x < hi));
            }
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = RegimeSpec::with_defaults(RegimeKind::Informative, 9);
        let a = generate(&spec, RandomSource::new(9)).unwrap();
        let b = generate(&spec, RandomSource::new(9)).unwrap();
        assert_eq!(a.hf, b.hf);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn informative_mean_by_hand() {
        let o = TruthOracle::new(RegimeKind::Informative);
        assert_eq!(o.hf_mean(2.0), -1.0);
        assert!((o.hf_scale(2.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn hf_quantile_examples() {
        let o = TruthOracle::new(RegimeKind::Informative);
        for x in [1.6, 2.3, 4.4] {
            assert_eq!(o.true_hf_quantile(0.5, x).unwrap(), o.hf_mean(x));
        }
        let q = o.true_hf_quantile(0.95, 2.0).unwrap();
        assert!((q - (-1.0 + 0.1 * 1.644_853_626_951_472_2)).abs() < 1e-12);

        let o = TruthOracle::new(RegimeKind::NonInformative);
        let x = 0.37;
        let lo = o.true_hf_quantile(0.05, x).unwrap();
        let hi = o.true_hf_quantile(0.95, x).unwrap();
        assert!((0.5 * (lo + hi) - o.hf_mean(x)).abs() < 1e-12);
    }

    #[test]
    fn lf_cdf_properties() {
        let o = TruthOracle::new(RegimeKind::Informative);
        let x = 3.1;
        assert!((o.true_lf_cdf(o.lf_mean(x), x) - 0.5).abs() < 1e-15);
        let y = o.lf_mean(x) + 0.3;
        let composed = ReferenceDistribution::StandardizedT { dof: 10 }.cdf(0.3 / (1.7 * o.hf_scale(x)));
        assert!((o.true_lf_cdf(y, x) - composed).abs() < 1e-15);
        for kind in RegimeKind::ALL {
            let o = TruthOracle::new(kind);
            let (lo, hi) = kind.covariate_range();
            let x = 0.5 * (lo + hi) + 0.01;
            let mut prev = 0.0;
            for i in 0..100 {
                let y = o.lf_mean(x) - 5.0 + 0.1 * i as f64;
                let f = o.true_lf_cdf(y, x);
                assert!(f >= prev);
                prev = f;
            }
        }
    }

    #[test]
    fn informative_level_function_is_constant() {
        let o = TruthOracle::new(RegimeKind::Informative);
        let expected = student_t_cdf(1.25f64.sqrt() * normal_quantile(0.95) / 1.7, 10.0);
        for i in 0..50 {
            let x = 1.5 + 3.0 * i as f64 / 49.0;
            assert_eq!(o.true_level_function(0.95, x).unwrap(), expected);
            assert_eq!(o.true_level_function(0.5, x).unwrap(), 0.5);
        }
    }

    #[test]
    fn level_function_links_quantiles() {
        for kind in RegimeKind::ALL {
            let o = TruthOracle::new(kind);
            let (lo, hi) = kind.covariate_range();
            for i in 0..20 {
                let x = lo + (hi - lo) * (i as f64 + 0.5) / 20.0;
                for tau in [0.05, 0.3, 0.95] {
                    let u = o.true_level_function(tau, x).unwrap();
                    let q = o.true_hf_quantile(tau, x).unwrap();
                    assert!((o.true_lf_cdf(q, x) - u).abs() < 1e-10);
                    // the inverse is ill-conditioned once u saturates
                    if u > 1e-9 && u < 1.0 - 1e-9 {
                        assert!((o.true_lf_quantile(u, x).unwrap() - q).abs() < 1e-8, "{kind:?} {x} {tau}");
                    }
                }
            }
        }
    }
}

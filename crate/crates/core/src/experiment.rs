//! One replicate of the benchmark protocol: fit every method, calibrate each
//! quantile pair by split CQR, and score it on the test set.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::conformal::{order_pair, ConformalBand};
use crate::data::Dataset;
use crate::local::{sorted_quantile, LocalDistribution};
use crate::metrics::{coverage_and_width, quantile_mse, EvalReport};
use crate::mfqr::crossfit::{crossfit_select, CrossfitResult};
use crate::mfqr::wrapper::{wrap_pseudo_responses, WrapperFit, WrapperPoint};
use crate::mfqr::{
    mixed_estimate, multi_step_correct, one_step_correct, projection_estimate, CorrectionConfig, TrAugment, TrMean,
};
use crate::model::{BackendConfig, ConditionalModel, FittedModel};
use crate::rng::RandomSource;
use crate::synthetic::{generate, RegimeSpec, Splits, TruthOracle};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    HfOnly,
    TrMean,
    TrAugment,
    Mfqr,
    MfqrOs,
    MfqrMs,
    /// Convex combination of the wrapper and HF-only quantiles.
    MfqrMix,
    /// Soft projection of the wrapper onto the HF quantile equation.
    MfqrProj,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::HfOnly,
        Method::TrMean,
        Method::TrAugment,
        Method::Mfqr,
        Method::MfqrOs,
        Method::MfqrMs,
        Method::MfqrMix,
        Method::MfqrProj,
    ];

    pub const DEFAULT: [Method; 6] =
        [Method::HfOnly, Method::TrMean, Method::TrAugment, Method::Mfqr, Method::MfqrOs, Method::MfqrMs];

    pub fn name(self) -> &'static str {
        match self {
            Method::HfOnly => "hf_only",
            Method::TrMean => "tr_mean",
            Method::TrAugment => "tr_augment",
            Method::Mfqr => "mfqr",
            Method::MfqrOs => "mfqr_os",
            Method::MfqrMs => "mfqr_ms",
            Method::MfqrMix => "mfqr_mix",
            Method::MfqrProj => "mfqr_proj",
        }
    }

    /// Table label, e.g. `MFQR+OS`.
    pub fn label(self) -> &'static str {
        match self {
            Method::HfOnly => "HF-Only",
            Method::TrMean => "Tr-Mean",
            Method::TrAugment => "Tr-Augment",
            Method::Mfqr => "MFQR",
            Method::MfqrOs => "MFQR+OS",
            Method::MfqrMs => "MFQR+MS",
            Method::MfqrMix => "MFQR+Mix",
            Method::MfqrProj => "MFQR+Proj",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s || m.label() == s)
    }

    fn needs_lf(self) -> bool {
        self != Method::HfOnly
    }

    fn needs_hf_model(self) -> bool {
        matches!(self, Method::HfOnly | Method::MfqrOs | Method::MfqrMs | Method::MfqrMix | Method::MfqrProj)
    }

    fn needs_wrapper(self) -> bool {
        matches!(self, Method::Mfqr | Method::MfqrOs | Method::MfqrMs | Method::MfqrMix | Method::MfqrProj)
    }

    fn needs_crossfit(self) -> bool {
        matches!(self, Method::MfqrOs | Method::MfqrMs)
    }
}

/// Everything that controls the fit of one replicate besides the data.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ExperimentSettings {
    pub methods: Vec<Method>,
    pub backend: BackendConfig,
    /// Lower and upper target levels.
    pub taus: [f64; 2],
    pub alpha: f64,
    pub correction: CorrectionConfig,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            methods: Method::DEFAULT.to_vec(),
            backend: BackendConfig::default(),
            taus: [0.05, 0.95],
            alpha: 0.1,
            correction: CorrectionConfig::default(),
        }
    }
}

impl ExperimentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("at least one method is required"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::InvalidParameter("methods must not repeat"));
            }
        }
        let [lo, hi] = self.taus;
        if !(lo > 0.0 && lo < hi && hi < 1.0) {
            return Err(Error::InvalidParameter("target levels must satisfy 0 < lo < hi < 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidLevel(self.alpha));
        }
        self.correction.validate()
    }
}

/// Raw and calibrated predictions of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutput {
    pub method: Method,
    pub cal_lo: Vec<f64>,
    pub cal_hi: Vec<f64>,
    pub test_lo: Vec<f64>,
    pub test_hi: Vec<f64>,
    pub band: ConformalBand,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub reports: Vec<EvalReport>,
    pub outputs: Vec<MethodOutput>,
    /// Wrapped HF responses, when a wrapper was fitted.
    pub pseudo_responses: Option<Vec<f64>>,
    /// Estimated levels at the test points for both targets, when a wrapper was fitted.
    pub test_levels: Option<Vec<[f64; 2]>>,
    pub crossfit: Option<CrossfitResult>,
    pub notes: Vec<String>,
}

/// Source for model randomness, kept apart from the data-generation streams.
pub fn model_source(seed: u64) -> RandomSource {
    RandomSource::new(seed).derive(0x6d66_7172)
}

struct Fitted {
    lf: Option<Arc<FittedModel>>,
    hf: Option<FittedModel>,
    wrapper: Option<WrapperFit>,
    tr_mean: Option<TrMean>,
    tr_augment: Option<TrAugment>,
    crossfit: Option<CrossfitResult>,
    pseudo: Option<Vec<f64>>,
    response_iqr: f64,
}

fn fit_all(data: &Splits, settings: &ExperimentSettings, src: RandomSource) -> Result<Fitted> {
    let m = &settings.methods;
    let any = |f: fn(Method) -> bool| m.iter().any(|&k| f(k));
    let backend = &settings.backend;
    let taus = settings.taus;
    let lf = if any(Method::needs_lf) { Some(Arc::new(FittedModel::fit(&data.lf, backend, src.derive(1))?)) } else { None };
    let hf = if any(Method::needs_hf_model) { Some(FittedModel::fit(&data.hf, backend, src.derive(2))?) } else { None };
    let (mut wrapper, mut pseudo) = (None, None);
    if let (true, Some(lf)) = (any(Method::needs_wrapper), &lf) {
        let u = wrap_pseudo_responses(lf.as_ref(), &data.hf)?;
        wrapper = Some(WrapperFit::with_pseudo_responses(lf.clone(), &data.hf, u.clone(), &taus, backend, src.derive(3))?);
        pseudo = Some(u);
    }
    let tr_mean = match (m.contains(&Method::TrMean), &lf) {
        (true, Some(lf)) => Some(TrMean::with_lf_model(lf.clone(), &data.hf, &taus, backend, src.derive(4))?),
        _ => None,
    };
    let tr_augment = match (m.contains(&Method::TrAugment), &lf) {
        (true, Some(lf)) => Some(TrAugment::with_lf_model(lf.clone(), &data.hf, &taus, backend, src.derive(5))?),
        _ => None,
    };
    let crossfit = match (any(Method::needs_crossfit), &lf) {
        (true, Some(lf)) => Some(crossfit_select(lf.clone(), &data.hf, &taus, backend, &settings.correction, src.derive(6))?),
        _ => None,
    };
    let mut y = data.hf.y().to_vec();
    y.sort_by(f64::total_cmp);
    let response_iqr = sorted_quantile(&y, 0.75) - sorted_quantile(&y, 0.25);
    Ok(Fitted { lf, hf, wrapper, tr_mean, tr_augment, crossfit, pseudo, response_iqr })
}

fn expect<T>(v: &Option<T>) -> Result<&T> {
    v.as_ref().ok_or(Error::ContractViolation("method component was not fitted"))
}

struct PointPrediction {
    pairs: Vec<(f64, f64)>,
    levels: Option<[f64; 2]>,
}

/// Quantile pairs of every method at one covariate point.
fn predict_point(f: &Fitted, settings: &ExperimentSettings, x: &[f64]) -> Result<PointPrediction> {
    let lf_law = f.lf.as_ref().map(|m| m.local(x)).transpose()?;
    let hf_law = f.hf.as_ref().map(|m| m.local(x)).transpose()?;
    let point = match (&f.wrapper, &lf_law) {
        (Some(w), Some(lf)) => Some(WrapperPoint { lf: lf.clone(), level: w.level_model().local(x)? }),
        _ => None,
    };
    let guards = settings.correction.safeguards();
    let lambda = settings.correction.lambda;
    let taus = settings.taus;
    let pair = |g: &mut dyn FnMut(usize, f64) -> Result<f64>| -> Result<(f64, f64)> { Ok((g(0, taus[0])?, g(1, taus[1])?)) };
    let hf_cdf = |law: &LocalDistribution| {
        let law = law.clone();
        move |q: f64| law.cdf(q)
    };
    let pairs = settings
        .methods
        .iter()
        .map(|&method| match method {
            Method::HfOnly => {
                let law = expect(&hf_law)?;
                pair(&mut |_, t| Ok(law.quantile(t)))
            }
            Method::TrMean => {
                let tm = expect(&f.tr_mean)?;
                let mu = tm.intercept + tm.slope * expect(&lf_law)?.mean();
                let resid = tm.residual.local(x)?;
                pair(&mut |_, t| Ok(resid.quantile(t) + mu))
            }
            Method::TrAugment => {
                let ta = expect(&f.tr_augment)?;
                let mut z = x.to_vec();
                z.push(expect(&lf_law)?.mean());
                let law = ta.model.local(&z)?;
                pair(&mut |_, t| Ok(law.quantile(t)))
            }
            Method::Mfqr => {
                let p = expect(&point)?;
                pair(&mut |_, t| Ok(p.predict(t)))
            }
            Method::MfqrOs => {
                let (p, law, cf) = (expect(&point)?, expect(&hf_law)?, expect(&f.crossfit)?);
                pair(&mut |k, t| {
                    Ok(one_step_correct(p.predict(t), hf_cdf(law), |q| law.density(q), t, cf.gamma_hat[k], guards))
                })
            }
            Method::MfqrMs => {
                let (p, law, cf) = (expect(&point)?, expect(&hf_law)?, expect(&f.crossfit)?);
                pair(&mut |k, t| multi_step_correct(p.predict(t), hf_cdf(law), |q| law.density(q), t, cf.m_hat[k], guards))
            }
            Method::MfqrMix => {
                let (p, law) = (expect(&point)?, expect(&hf_law)?);
                pair(&mut |_, t| mixed_estimate(p.predict(t), law.quantile(t), lambda))
            }
            Method::MfqrProj => {
                let (p, law) = (expect(&point)?, expect(&hf_law)?);
                pair(&mut |_, t| projection_estimate(p.predict(t), hf_cdf(law), t, lambda, f.response_iqr))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let levels = point.as_ref().map(|p| [p.level_at(taus[0]), p.level_at(taus[1])]);
    Ok(PointPrediction { pairs, levels })
}

fn predict_set(f: &Fitted, settings: &ExperimentSettings, data: &Dataset) -> Result<Vec<PointPrediction>> {
    data.x().iter_rows().map(|x| predict_point(f, settings, x)).collect()
}

/// Fits all configured methods on `data` and evaluates them.
///
/// `truth` enables the quantile MSE; without it `mse` is `None`.
pub fn run_replicate(
    regime: &str,
    seed: u64,
    data: &Splits,
    truth: Option<&TruthOracle>,
    settings: &ExperimentSettings,
) -> Result<ReplicateOutcome> {
    settings.validate()?;
    let dims = [data.lf.dim(), data.hf.dim(), data.cal.dim(), data.test.dim()];
    if dims.iter().any(|&d| d != dims[0]) {
        return Err(Error::SizeMismatch { expected: dims[0], got: *dims.iter().find(|&&d| d != dims[0]).unwrap() });
    }
    let fitted = fit_all(data, settings, model_source(seed))?;
    let mut notes = Vec::new();
    if let Some(cf) = &fitted.crossfit {
        if cf.plan.reduced() {
            notes.push(format!("cross-fitting reduced from {} to {} folds", cf.plan.requested, cf.plan.k()));
        }
    }
    let cal = predict_set(&fitted, settings, &data.cal)?;
    let test = predict_set(&fitted, settings, &data.test)?;
    let test_xs: Option<Vec<f64>> = (data.test.dim() == 1).then(|| data.test.x().column_values(0));

    let mut reports = Vec::with_capacity(settings.methods.len());
    let mut outputs = Vec::with_capacity(settings.methods.len());
    for (k, &method) in settings.methods.iter().enumerate() {
        let (cal_lo, cal_hi): (Vec<f64>, Vec<f64>) = cal.iter().map(|p| p.pairs[k]).unzip();
        let (test_lo, test_hi): (Vec<f64>, Vec<f64>) = test.iter().map(|p| p.pairs[k]).unzip();
        let band = ConformalBand::calibrate(&cal_lo, &cal_hi, data.cal.y(), settings.alpha)?;
        let (lower, upper): (Vec<f64>, Vec<f64>) =
            test_lo.iter().zip(&test_hi).map(|(&l, &h)| band.interval(l, h)).unzip();
        let (coverage, width) = coverage_and_width(&lower, &upper, data.test.y())?;
        let mse = match (truth, &test_xs) {
            (Some(t), Some(xs)) => {
                let (lo, hi): (Vec<f64>, Vec<f64>) =
                    test_lo.iter().zip(&test_hi).map(|(&l, &h)| order_pair(l, h)).unzip();
                Some(quantile_mse(&lo, &hi, Some(t), xs, (settings.taus[0], settings.taus[1]))?)
            }
            _ => None,
        };
        let cf = fitted.crossfit.as_ref();
        reports.push(EvalReport {
            regime: regime.into(),
            method: method.name().into(),
            seed,
            mse,
            coverage,
            width,
            gamma_hat: match (method, cf) {
                (Method::MfqrOs, Some(c)) => c.gamma_hat.clone(),
                _ => Vec::new(),
            },
            m_hat: match (method, cf) {
                (Method::MfqrMs, Some(c)) => c.m_hat.clone(),
                _ => Vec::new(),
            },
        });
        outputs.push(MethodOutput { method, cal_lo, cal_hi, test_lo, test_hi, band, lower, upper });
    }
    let test_levels = test.iter().map(|p| p.levels).collect();
    Ok(ReplicateOutcome {
        reports,
        outputs,
        pseudo_responses: fitted.pseudo,
        test_levels,
        crossfit: fitted.crossfit,
        notes,
    })
}

/// Generates a synthetic replicate from `spec` and runs it against its truth.
pub fn run_synthetic(spec: &RegimeSpec, settings: &ExperimentSettings) -> Result<(Splits, ReplicateOutcome)> {
    let seed = spec.split.seed;
    let data = generate(spec, RandomSource::new(seed))?;
    let truth = TruthOracle::new(spec.kind);
    let out = run_replicate(spec.kind.name(), seed, &data, Some(&truth), settings)?;
    Ok((data, out))
}

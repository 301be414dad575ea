//! Cross-fitted selection of the one-step damping and the Newton step count.
//!
//! The LF model is fitted once on all LF data. Only HF-dependent pieces (the
//! level model and the HF CDF/density) are refitted on each fold complement,
//! and corrected predictions are scored by pinball loss on the held-out fold.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::correction::{newton_trajectory, one_step_correct, pinball_loss, CorrectionConfig};
use super::wrapper::{check_taus, wrap_pseudo_responses, WrapperFit};
use crate::data::Dataset;
use crate::local::LocalDistribution;
use crate::model::{BackendConfig, ConditionalModel, FittedModel};
use crate::rng::{RandomSource, Stream};
use crate::{Error, Result};

/// A partition of `0..n` into held-out folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
    pub requested: usize,
}

impl FoldPlan {
    /// Random permutation dealt round-robin into `k` folds. `k` is lowered so
    /// every fold keeps at least two points.
    pub fn new(n: usize, k: usize, rng: RandomSource) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("cross-fitting needs at least 2 folds"));
        }
        if n < 4 {
            return Err(Error::TooFewSamples { needed: 4, got: n });
        }
        let k_eff = k.min(n / 2);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng.stream(Stream::Folds));
        let mut folds = alloc::vec![Vec::new(); k_eff];
        for (pos, i) in perm.into_iter().enumerate() {
            folds[pos % k_eff].push(i);
        }
        for f in &mut folds {
            f.sort_unstable();
        }
        Ok(FoldPlan { folds, requested: k })
    }

    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// True when the requested fold count had to be lowered.
    pub fn reduced(&self) -> bool {
        self.k() < self.requested
    }

    pub fn n(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    /// Complement of fold `f`, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        let mut held = alloc::vec![false; self.n()];
        for &i in &self.folds[f] {
            held[i] = true;
        }
        (0..held.len()).filter(|&i| !held[i]).collect()
    }
}

/// Fits the fold-specific pieces on a fold complement.
pub trait FoldFitter {
    type Fitted: FoldPredictor;
    fn fit(&self, fold: usize, train: &[usize]) -> Result<Self::Fitted>;
}

/// Wrapper predictions (one per level) and the HF law at a held-out point.
pub trait FoldPredictor {
    fn predict(&self, x: &[f64]) -> Result<(Vec<f64>, LocalDistribution)>;
}

/// The standard fitter: wrapper level model and HF model per fold.
pub struct MfqrFoldFitter<'a, L> {
    pub lf: Arc<L>,
    pub hf: &'a Dataset,
    pub pseudo: &'a [f64],
    pub taus: &'a [f64],
    pub backend: &'a BackendConfig,
    pub rng: RandomSource,
}

pub struct MfqrFoldModels<L> {
    pub wrapper: WrapperFit<L>,
    pub hf_model: FittedModel,
}

impl<L: ConditionalModel> FoldFitter for MfqrFoldFitter<'_, L> {
    type Fitted = MfqrFoldModels<L>;

    fn fit(&self, fold: usize, train: &[usize]) -> Result<Self::Fitted> {
        let hf_train = self.hf.subset(train)?;
        let pseudo = train.iter().map(|&i| self.pseudo[i]).collect();
        let rng = self.rng.derive(fold as u64);
        let wrapper =
            WrapperFit::with_pseudo_responses(self.lf.clone(), &hf_train, pseudo, self.taus, self.backend, rng.derive(0))?;
        let hf_model = FittedModel::fit(&hf_train, self.backend, rng.derive(1))?;
        Ok(MfqrFoldModels { wrapper, hf_model })
    }
}

impl<L: ConditionalModel> FoldPredictor for MfqrFoldModels<L> {
    fn predict(&self, x: &[f64]) -> Result<(Vec<f64>, LocalDistribution)> {
        Ok((self.wrapper.predict_all(x)?, self.hf_model.local(x)?))
    }
}

/// Pinball-loss tables and the selections made from them, per level.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossfitResult {
    pub taus: Vec<f64>,
    pub plan: FoldPlan,
    /// Mean held-out loss, `[tau][gamma]` in `config.gamma_grid` order.
    pub gamma_losses: Vec<Vec<f64>>,
    /// Mean held-out loss, `[tau][m]` in `config.step_grid` order.
    pub step_losses: Vec<Vec<f64>>,
    pub gamma_hat: Vec<f64>,
    pub m_hat: Vec<usize>,
}

/// Grid value with the lowest loss; exact ties go to the smaller value.
fn argmin<T: Copy + PartialOrd>(grid: &[T], losses: &[f64]) -> T {
    let mut best = (grid[0], losses[0]);
    for (&g, &l) in grid.iter().zip(losses).skip(1) {
        if l < best.1 || (l == best.1 && g < best.0) {
            best = (g, l);
        }
    }
    best.0
}

/// Runs cross-fitting with an arbitrary fold fitter.
pub fn crossfit_with<F: FoldFitter>(
    hf: &Dataset,
    taus: &[f64],
    config: &CorrectionConfig,
    plan: FoldPlan,
    fitter: &F,
) -> Result<CrossfitResult> {
    config.validate()?;
    check_taus(taus)?;
    if plan.n() != hf.len() {
        return Err(Error::SizeMismatch { expected: hf.len(), got: plan.n() });
    }
    let guards = config.safeguards();
    let m_max = *config.step_grid.iter().max().expect("validated");
    let mut gamma_losses = alloc::vec![alloc::vec![0.0; config.gamma_grid.len()]; taus.len()];
    let mut step_losses = alloc::vec![alloc::vec![0.0; config.step_grid.len()]; taus.len()];
    for (f, held) in plan.folds.iter().enumerate() {
        let fitted = fitter.fit(f, &plan.train_indices(f))?;
        for &i in held {
            let x = hf.x().row(i);
            let y = hf.y()[i];
            let (wrapped, law) = fitted.predict(x)?;
            for (t, &tau) in taus.iter().enumerate() {
                let q0 = wrapped[t];
                for (g, &gamma) in config.gamma_grid.iter().enumerate() {
                    let q = one_step_correct(q0, |q| law.cdf(q), |q| law.density(q), tau, gamma, guards);
                    gamma_losses[t][g] += pinball_loss(y - q, tau);
                }
                let path = newton_trajectory(q0, |q| law.cdf(q), |q| law.density(q), tau, m_max, guards);
                for (s, &m) in config.step_grid.iter().enumerate() {
                    step_losses[t][s] += pinball_loss(y - path[m], tau);
                }
            }
        }
    }
    let n = hf.len() as f64;
    for row in gamma_losses.iter_mut().chain(step_losses.iter_mut()) {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    let gamma_hat = gamma_losses.iter().map(|l| argmin(&config.gamma_grid, l)).collect();
    let m_hat = step_losses.iter().map(|l| argmin(&config.step_grid, l)).collect();
    Ok(CrossfitResult { taus: taus.to_vec(), plan, gamma_losses, step_losses, gamma_hat, m_hat })
}

/// Cross-fitting around a fitted LF model.
pub fn crossfit_select<L: ConditionalModel>(
    lf_model: Arc<L>,
    hf: &Dataset,
    taus: &[f64],
    backend: &BackendConfig,
    config: &CorrectionConfig,
    rng: RandomSource,
) -> Result<CrossfitResult> {
    let plan = FoldPlan::new(hf.len(), config.folds, rng)?;
    let pseudo = wrap_pseudo_responses(lf_model.as_ref(), hf)?;
    let fitter = MfqrFoldFitter { lf: lf_model, hf, pseudo: &pseudo, taus, backend, rng: rng.derive(7) };
    crossfit_with(hf, taus, config, plan, &fitter)
}

/// A selected grid value with the loss of every candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    pub value: T,
    pub losses: Vec<f64>,
}

/// Fits the LF model on `lf` and selects the one-step damping at `tau`.
pub fn crossfit_select_gamma(
    lf: &Dataset,
    hf: &Dataset,
    tau: f64,
    config: &CorrectionConfig,
    backend: &BackendConfig,
    rng: RandomSource,
) -> Result<Selection<f64>> {
    let lf_model = Arc::new(FittedModel::fit(lf, backend, rng.derive(0))?);
    let r = crossfit_select(lf_model, hf, &[tau], backend, config, rng.derive(1))?;
    Ok(Selection { value: r.gamma_hat[0], losses: r.gamma_losses[0].clone() })
}

/// Fits the LF model on `lf` and selects the Newton step count at `tau`.
pub fn crossfit_select_steps(
    lf: &Dataset,
    hf: &Dataset,
    tau: f64,
    config: &CorrectionConfig,
    backend: &BackendConfig,
    rng: RandomSource,
) -> Result<Selection<usize>> {
    let lf_model = Arc::new(FittedModel::fit(lf, backend, rng.derive(0))?);
    let r = crossfit_select(lf_model, hf, &[tau], backend, config, rng.derive(1))?;
    Ok(Selection { value: r.m_hat[0], losses: r.step_losses[0].clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Fidelity;
    use crate::model::BackendKind;
    use crate::synthetic::{generate, RegimeKind, RegimeSpec};
    use alloc::vec;
    use core::cell::RefCell;

    #[test]
    fn folds_partition_indices() {
        let p = FoldPlan::new(23, 5, RandomSource::new(1)).unwrap();
        assert_eq!(p.k(), 5);
        let mut all: Vec<usize> = p.folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(p.folds.iter().all(|f| f.len() == 4 || f.len() == 5));
        for f in 0..5 {
            let tr = p.train_indices(f);
            assert_eq!(tr.len() + p.folds[f].len(), 23);
            assert!(tr.iter().all(|i| !p.folds[f].contains(i)));
        }
    }

    #[test]
    fn folds_shrink_for_small_samples() {
        let p = FoldPlan::new(7, 5, RandomSource::new(1)).unwrap();
        assert_eq!(p.k(), 3);
        assert!(p.reduced());
        assert!(p.folds.iter().all(|f| f.len() >= 2));
        assert!(FoldPlan::new(3, 5, RandomSource::new(1)).is_err());
    }

    fn small_regime(seed: u64) -> crate::synthetic::Splits {
        let mut spec = RegimeSpec::with_defaults(RegimeKind::Misinformative, seed);
        spec.split.n_lf = 300;
        spec.split.n_hf = 60;
        spec.split.n_cal = 10;
        spec.split.n_test = 10;
        generate(&spec, RandomSource::new(seed)).unwrap()
    }

    fn quick_forest() -> BackendConfig {
        let mut b = BackendConfig::of(BackendKind::Forest);
        b.forest.n_trees = 30;
        b
    }

    #[test]
    fn singleton_grids_are_returned() {
        let d = small_regime(2);
        let cfg = CorrectionConfig { gamma_grid: vec![0.5], step_grid: vec![3], ..CorrectionConfig::default() };
        let g = crossfit_select_gamma(&d.lf, &d.hf, 0.95, &cfg, &quick_forest(), RandomSource::new(2)).unwrap();
        assert_eq!(g.value, 0.5);
        assert_eq!(g.losses.len(), 1);
        let m = crossfit_select_steps(&d.lf, &d.hf, 0.95, &cfg, &quick_forest(), RandomSource::new(2)).unwrap();
        assert_eq!(m.value, 3);
    }

    #[test]
    fn ties_go_to_smallest_value() {
        assert_eq!(argmin(&[0.0, 0.1, 0.2], &[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(argmin(&[3usize, 1, 2], &[0.5, 0.5, 0.7]), 1);
        assert_eq!(argmin(&[0.0, 0.1, 0.2], &[1.0, 0.9, 0.9]), 0.1);
    }

    /// Records every fold's training set and counts predictions at training covariates.
    struct Guarded<'a> {
        inner: MfqrFoldFitter<'a, FittedModel>,
        log: RefCell<Vec<Vec<usize>>>,
        hits: &'a RefCell<usize>,
    }

    struct Checked<'a> {
        inner: MfqrFoldModels<FittedModel>,
        train_x: Vec<f64>,
        hits: &'a RefCell<usize>,
    }

    impl<'a> FoldFitter for Guarded<'a> {
        type Fitted = Checked<'a>;
        fn fit(&self, fold: usize, train: &[usize]) -> Result<Self::Fitted> {
            self.log.borrow_mut().push(train.to_vec());
            let train_x = train.iter().map(|&i| self.inner.hf.x().get(i, 0)).collect();
            Ok(Checked { inner: self.inner.fit(fold, train)?, train_x, hits: self.hits })
        }
    }

    impl FoldPredictor for Checked<'_> {
        fn predict(&self, x: &[f64]) -> Result<(Vec<f64>, LocalDistribution)> {
            if self.train_x.contains(&x[0]) {
                *self.hits.borrow_mut() += 1;
            }
            self.inner.predict(x)
        }
    }

    #[test]
    fn never_evaluates_on_training_points() {
        let d = small_regime(4);
        let backend = quick_forest();
        let taus = [0.05, 0.95];
        let lf = Arc::new(FittedModel::fit(&d.lf, &backend, RandomSource::new(0)).unwrap());
        let pseudo = wrap_pseudo_responses(lf.as_ref(), &d.hf).unwrap();
        let inner = MfqrFoldFitter { lf, hf: &d.hf, pseudo: &pseudo, taus: &taus, backend: &backend, rng: RandomSource::new(1) };
        let hits = RefCell::new(0);
        let g = Guarded { inner, log: RefCell::new(Vec::new()), hits: &hits };
        let plan = FoldPlan::new(d.hf.len(), 5, RandomSource::new(3)).unwrap();
        let r = crossfit_with(&d.hf, &taus, &CorrectionConfig::default(), plan.clone(), &g).unwrap();
        assert_eq!(*hits.borrow(), 0);
        let log = g.log.borrow();
        assert_eq!(log.len(), 5);
        for (f, train) in log.iter().enumerate() {
            assert!(train.iter().all(|i| !plan.folds[f].contains(i)));
        }
        assert_eq!(r.gamma_losses.len(), 2);
        assert_eq!(r.step_losses[0].len(), 10);
        assert!(r.gamma_losses.iter().flatten().all(|l| *l >= 0.0));
    }

    #[test]
    fn losses_are_mean_pinball() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let y = vec![1.0, -1.0, 2.0, 0.0, 3.0, 1.0, -2.0, 0.5];
        let hf = Dataset::from_scalar(x, y.clone(), Fidelity::High).unwrap();
        struct Fixed;
        impl FoldFitter for Fixed {
            type Fitted = Fixed;
            fn fit(&self, _: usize, _: &[usize]) -> Result<Fixed> {
                Ok(Fixed)
            }
        }
        impl FoldPredictor for Fixed {
            fn predict(&self, _: &[f64]) -> Result<(Vec<f64>, LocalDistribution)> {
                Ok((vec![0.25], LocalDistribution::Gaussian { mean: 0.25, sd: 1.0 }))
            }
        }
        let plan = FoldPlan::new(8, 2, RandomSource::new(0)).unwrap();
        let r = crossfit_with(&hf, &[0.5], &CorrectionConfig::default(), plan, &Fixed).unwrap();
        let expected: f64 = y.iter().map(|v| pinball_loss(v - 0.25, 0.5)).sum::<f64>() / 8.0;
        // the wrapper already solves F(q) = 1/2, so every correction is the identity
        assert!(r.gamma_losses[0].iter().all(|l| (l - expected).abs() < 1e-15));
        assert_eq!(r.gamma_hat, vec![0.0]);
        assert_eq!(r.m_hat, vec![1]);
    }
}

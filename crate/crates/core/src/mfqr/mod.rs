//! The multi-fidelity estimator, its corrections, cross-fitting and baselines.

pub mod baselines;
pub mod correction;
pub mod crossfit;
pub mod diagnostics;
pub mod wrapper;

pub use baselines::{fit_hf_only, fit_tr_augment, fit_tr_mean, HfOnly, TrAugment, TrMean};
pub use correction::{
    mixed_estimate, multi_step_correct, newton_trajectory, one_step_correct, pinball_loss, projection_estimate,
    CorrectionConfig, Safeguards,
};
pub use crossfit::{crossfit_select, crossfit_select_gamma, crossfit_select_steps, CrossfitResult, FoldPlan};
pub use diagnostics::{oracle_diagnostics, OracleDiagnostics};
pub use wrapper::{fit_wrapper, wrap_pseudo_responses, WrapperFit, LEVEL_CLAMP};

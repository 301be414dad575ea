//! Wrapper and HF-model errors measured against a synthetic truth.

use alloc::vec::Vec;

use crate::model::ConditionalModel;
use crate::synthetic::TruthOracle;
use crate::{Error, Result};

/// Local errors at one probe: `e = q_wrap - q`, `nu = F_hat(q_wrap) - F(q_wrap)`,
/// `eta = f_hat(q_wrap) - f(q_wrap)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleDiagnostics {
    pub x: f64,
    pub e_tau: f64,
    pub nu_tau: f64,
    pub eta_tau: f64,
}

/// Evaluates the diagnostics at scalar probes. `wrapper` maps a covariate
/// point to the wrapper quantile at `tau`.
pub fn oracle_diagnostics(
    wrapper: impl Fn(&[f64]) -> Result<f64>,
    hf_model: &impl ConditionalModel,
    truth: Option<&TruthOracle>,
    tau: f64,
    probes: &[f64],
) -> Result<Vec<OracleDiagnostics>> {
    let truth = truth.ok_or(Error::Unavailable("diagnostics need a synthetic truth oracle"))?;
    probes
        .iter()
        .map(|&x| {
            let q_wrap = wrapper(&[x])?;
            let law = hf_model.local(&[x])?;
            Ok(OracleDiagnostics {
                x,
                e_tau: q_wrap - truth.true_hf_quantile(tau, x)?,
                nu_tau: law.cdf(q_wrap) - truth.true_hf_cdf(q_wrap, x),
                eta_tau: law.density(q_wrap) - truth.true_hf_density(q_wrap, x),
            })
        })
        .collect()
}

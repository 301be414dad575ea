//! Per-replicate JSON manifests. A manifest holds everything needed to rerun
//! its replicate bit for bit: data source, resolved settings and seed.

use std::path::{Path, PathBuf};

use mfqr_core::data::SplitSpec;
use mfqr_core::experiment::{run_replicate, ExperimentSettings, Method, ReplicateOutcome};
use mfqr_core::metrics::EvalReport;
use mfqr_core::rng::RandomSource;
use mfqr_core::synthetic::{generate, RegimeKind, RegimeSpec, Splits, TruthOracle};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::io::read_splits;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic { regime: RegimeKind, split: SplitSpec },
    External { lf: PathBuf, hf: PathBuf, cal: PathBuf, test: PathBuf },
}

impl DataSource {
    pub fn load(&self) -> AppResult<(Splits, Option<TruthOracle>)> {
        match self {
            DataSource::Synthetic { regime, split } => {
                let spec = RegimeSpec { kind: *regime, split: *split };
                Ok((generate(&spec, RandomSource::new(split.seed))?, Some(TruthOracle::new(*regime))))
            }
            DataSource::External { lf, hf, cal, test } => Ok((read_splits(lf, hf, cal, test)?, None)),
        }
    }
}

/// Cross-fitted tuning of the corrections, per target level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selections {
    pub folds: usize,
    pub folds_requested: usize,
    pub gamma_grid: Vec<f64>,
    pub step_grid: Vec<usize>,
    pub gamma_losses: Vec<Vec<f64>>,
    pub step_losses: Vec<Vec<f64>>,
    pub gamma_hat: Vec<f64>,
    pub m_hat: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub method: Method,
    pub q_cal: f64,
    pub mse: Option<f64>,
    pub coverage: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub data_ms: u64,
    pub fit_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub regime: String,
    pub seed: u64,
    pub source: DataSource,
    pub settings: ExperimentSettings,
    pub selections: Option<Selections>,
    pub methods: Vec<MethodRecord>,
    pub notes: Vec<String>,
    pub timings: Timings,
}

impl Manifest {
    pub fn new(
        regime: &str,
        seed: u64,
        source: DataSource,
        settings: &ExperimentSettings,
        outcome: &ReplicateOutcome,
        timings: Timings,
    ) -> Self {
        let selections = outcome.crossfit.as_ref().map(|cf| Selections {
            folds: cf.plan.k(),
            folds_requested: cf.plan.requested,
            gamma_grid: settings.correction.gamma_grid.clone(),
            step_grid: settings.correction.step_grid.clone(),
            gamma_losses: cf.gamma_losses.clone(),
            step_losses: cf.step_losses.clone(),
            gamma_hat: cf.gamma_hat.clone(),
            m_hat: cf.m_hat.clone(),
        });
        let methods = outcome
            .outputs
            .iter()
            .zip(&outcome.reports)
            .map(|(o, r)| MethodRecord { method: o.method, q_cal: o.band.q_cal, mse: r.mse, coverage: r.coverage, width: r.width })
            .collect();
        Manifest {
            regime: regime.to_string(),
            seed,
            source,
            settings: settings.clone(),
            selections,
            methods,
            notes: outcome.notes.clone(),
            timings,
        }
    }

    /// The results rows this manifest stands for.
    pub fn reports(&self) -> Vec<EvalReport> {
        let sel = self.selections.as_ref();
        self.methods
            .iter()
            .map(|m| EvalReport {
                regime: self.regime.clone(),
                method: m.method.name().to_string(),
                seed: self.seed,
                mse: m.mse,
                coverage: m.coverage,
                width: m.width,
                gamma_hat: match (m.method, sel) {
                    (Method::MfqrOs, Some(s)) => s.gamma_hat.clone(),
                    _ => Vec::new(),
                },
                m_hat: match (m.method, sel) {
                    (Method::MfqrMs, Some(s)) => s.m_hat.clone(),
                    _ => Vec::new(),
                },
            })
            .collect()
    }

    /// Reruns the replicate from the recorded source and settings.
    pub fn replay(&self) -> AppResult<(Splits, ReplicateOutcome)> {
        let (data, truth) = self.source.load()?;
        let out = run_replicate(&self.regime, self.seed, &data, truth.as_ref(), &self.settings)?;
        Ok((data, out))
    }

    pub fn file_name(regime: &str, seed: u64) -> String {
        format!("{regime}_seed{seed}.json")
    }

    pub fn write(&self, dir: &Path) -> AppResult<PathBuf> {
        let path = dir.join(Self::file_name(&self.regime, self.seed));
        let text = serde_json::to_string_pretty(self).map_err(|e| AppError::runtime(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| AppError::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::io(path, e))
    }
}

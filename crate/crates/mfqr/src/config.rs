//! Experiment configuration: TOML or JSON on disk, plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mfqr_core::experiment::{ExperimentSettings, Method};
use mfqr_core::forest::ForestConfig;
use mfqr_core::gp::GpConfig;
use mfqr_core::kernel::KernelConfig;
use mfqr_core::mfqr::CorrectionConfig;
use mfqr_core::model::{BackendConfig, BackendKind};
use mfqr_core::synthetic::{RegimeKind, RegimeSpec};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Replicate seeds, written as `"a..b"`, `"a..=b"`, a single integer or a list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SeedInput", into = "Vec<u64>")]
pub struct Seeds(Vec<u64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedInput {
    One(u64),
    List(Vec<u64>),
    Range(String),
}

impl Seeds {
    pub fn new(seeds: Vec<u64>) -> AppResult<Self> {
        if seeds.is_empty() {
            return Err(AppError::config("at least one seed is required"));
        }
        for (i, s) in seeds.iter().enumerate() {
            if seeds[..i].contains(s) {
                return Err(AppError::config(format!("seed {s} is listed twice")));
            }
        }
        Ok(Seeds(seeds))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds(vec![0])
    }
}

impl FromStr for Seeds {
    type Err = AppError;

    /// `a..b` is half-open, `a..=b` inclusive, `a` a single seed.
    fn from_str(s: &str) -> AppResult<Self> {
        let bad = || AppError::config(format!("cannot parse seeds {s:?}; expected a..b, a..=b or an integer"));
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
        let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
            (num(a)?..=num(b)?).collect()
        } else if let Some((a, b)) = s.split_once("..") {
            (num(a)?..num(b)?).collect()
        } else {
            vec![num(s)?]
        };
        Seeds::new(seeds)
    }
}

impl TryFrom<SeedInput> for Seeds {
    type Error = AppError;

    fn try_from(v: SeedInput) -> AppResult<Self> {
        match v {
            SeedInput::One(s) => Seeds::new(vec![s]),
            SeedInput::List(l) => Seeds::new(l),
            SeedInput::Range(r) => r.parse(),
        }
    }
}

impl From<Seeds> for Vec<u64> {
    fn from(s: Seeds) -> Self {
        s.0
    }
}

impl fmt::Display for Seeds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} seed(s)", self.0.len())
    }
}

/// Four CSV files sharing one covariate schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalData {
    /// Label used in the `regime` column.
    #[serde(default = "external_label")]
    pub name: String,
    pub lf: PathBuf,
    pub hf: PathBuf,
    pub cal: PathBuf,
    pub test: PathBuf,
}

fn external_label() -> String {
    "external".into()
}

/// Split sizes overriding the regime defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub n_lf: usize,
    pub n_hf: usize,
    pub n_cal: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub regimes: Vec<RegimeKind>,
    pub data: Option<ExternalData>,
    pub split: Option<SplitSizes>,
    pub seeds: Seeds,
    pub methods: Vec<Method>,
    pub backend: BackendKind,
    pub kernel: KernelConfig,
    pub forest: ForestConfig,
    pub gp: GpConfig,
    pub taus: [f64; 2],
    pub alpha: f64,
    pub correction: CorrectionConfig,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = ExperimentSettings::default();
        ExperimentConfig {
            regimes: Vec::new(),
            data: None,
            split: None,
            seeds: Seeds::default(),
            methods: s.methods,
            backend: s.backend.kind,
            kernel: s.backend.kernel,
            forest: s.backend.forest,
            gp: s.backend.gp,
            taus: s.taus,
            alpha: s.alpha,
            correction: s.correction,
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads `path` as JSON when it ends in `.json`, as TOML otherwise.
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| AppError::config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| AppError::config(format!("{}: {e}", path.display())))?
        };
        Ok(cfg)
    }

    /// Relative data paths resolve against `base`, normally the config file's directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(d) = &mut self.data {
            for p in [&mut d.lf, &mut d.hf, &mut d.cal, &mut d.test] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }

    pub fn settings(&self) -> ExperimentSettings {
        ExperimentSettings {
            methods: self.methods.clone(),
            backend: BackendConfig {
                kind: self.backend,
                kernel: self.kernel.clone(),
                forest: self.forest.clone(),
                gp: self.gp.clone(),
            },
            taus: self.taus,
            alpha: self.alpha,
            correction: self.correction.clone(),
        }
    }

    pub fn validate(&self) -> AppResult<()> {
        if self.data.is_some() && !self.regimes.is_empty() {
            return Err(AppError::config("set either `regimes` or `data`, not both"));
        }
        for (i, r) in self.regimes.iter().enumerate() {
            if self.regimes[..i].contains(r) {
                return Err(AppError::config(format!("regime {} is listed twice", r.name())));
            }
        }
        if let Some(s) = &self.split {
            if [s.n_lf, s.n_hf, s.n_cal, s.n_test].contains(&0) {
                return Err(AppError::config("split sizes must be positive"));
            }
        }
        Seeds::new(self.seeds.as_slice().to_vec())?;
        self.settings().validate().map_err(|e| AppError::config(e.to_string()))
    }

    /// Synthetic regimes to run: the configured list, or all three when the
    /// list is empty and no external data is given.
    pub fn regime_list(&self) -> Vec<RegimeKind> {
        match (&self.data, self.regimes.is_empty()) {
            (Some(_), _) => Vec::new(),
            (None, true) => RegimeKind::ALL.to_vec(),
            (None, false) => self.regimes.clone(),
        }
    }

    /// Regime specification of one synthetic replicate.
    pub fn regime_spec(&self, kind: RegimeKind, seed: u64) -> RegimeSpec {
        let mut spec = RegimeSpec::with_defaults(kind, seed);
        if let Some(s) = self.split {
            spec.split.n_lf = s.n_lf;
            spec.split.n_hf = s.n_hf;
            spec.split.n_cal = s.n_cal;
            spec.split.n_test = s.n_test;
        }
        spec
    }
}

//! Replicate sweep on a worker pool with a single ordered collector.

use std::path::Path;
use std::time::Instant;

use mfqr_core::experiment::{run_replicate, ExperimentSettings};
use mfqr_core::metrics::EvalReport;
use mfqr_core::rng::RandomSource;
use mfqr_core::synthetic::{generate, RegimeKind, Splits, TruthOracle};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{AppError, AppResult};
use crate::io::write_results_file;
use crate::manifest::{DataSource, Manifest, Timings};

/// One finished replicate.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub reports: Vec<EvalReport>,
    pub manifest: Manifest,
}

enum Job<'a> {
    Synthetic { kind: RegimeKind, seed: u64 },
    External { data: &'a Splits, seed: u64 },
}

fn millis(t: Instant) -> u64 {
    t.elapsed().as_millis().try_into().unwrap_or(u64::MAX)
}

fn run_job(cfg: &ExperimentConfig, settings: &ExperimentSettings, job: &Job<'_>) -> AppResult<Replicate> {
    let t0 = Instant::now();
    let (label, seed, source, generated, truth) = match *job {
        Job::Synthetic { kind, seed } => {
            let spec = cfg.regime_spec(kind, seed);
            let data = generate(&spec, RandomSource::new(seed))?;
            let source = DataSource::Synthetic { regime: kind, split: spec.split };
            (kind.name().to_string(), seed, source, Some(data), Some(TruthOracle::new(kind)))
        }
        Job::External { seed, .. } => {
            let d = cfg.data.as_ref().expect("external job without data");
            let source =
                DataSource::External { lf: d.lf.clone(), hf: d.hf.clone(), cal: d.cal.clone(), test: d.test.clone() };
            (d.name.clone(), seed, source, None, None)
        }
    };
    let data: &Splits = match job {
        Job::External { data, .. } => data,
        Job::Synthetic { .. } => generated.as_ref().expect("generated above"),
    };
    let data_ms = millis(t0);
    let t1 = Instant::now();
    let outcome = run_replicate(&label, seed, data, truth.as_ref(), settings)
        .map_err(|e| AppError::runtime(format!("{label} seed {seed}: {e}")))?;
    let timings = Timings { data_ms, fit_ms: millis(t1) };
    for note in &outcome.notes {
        log::warn!("{label} seed {seed}: {note}");
    }
    log::info!("{label} seed {seed} finished in {} ms", timings.data_ms + timings.fit_ms);
    let manifest = Manifest::new(&label, seed, source, settings, &outcome, timings);
    Ok(Replicate { reports: outcome.reports, manifest })
}

/// Runs every (regime, seed) pair on `workers` threads. Results come back in
/// job order, so output never depends on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> AppResult<Vec<Replicate>> {
    cfg.validate()?;
    let settings = cfg.settings();
    let external = match &cfg.data {
        Some(d) => Some(crate::io::read_splits(&d.lf, &d.hf, &d.cal, &d.test)?),
        None => None,
    };
    let seeds = cfg.seeds.as_slice();
    let jobs: Vec<Job<'_>> = match &external {
        Some(data) => seeds.iter().map(|&seed| Job::External { data, seed }).collect(),
        None => cfg
            .regime_list()
            .into_iter()
            .flat_map(|kind| seeds.iter().map(move |&seed| Job::Synthetic { kind, seed }))
            .collect(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AppError::runtime(format!("cannot start worker pool: {e}")))?;
    log::info!("running {} replicate(s) on {} worker(s)", jobs.len(), workers.max(1));
    let results: Vec<AppResult<Replicate>> = pool.install(|| jobs.par_iter().map(|j| run_job(cfg, &settings, j)).collect());
    results.into_iter().collect()
}

/// Writes `results.csv`, `config.json` and `manifests/` under `out`.
pub fn write_outputs(out: &Path, cfg: &ExperimentConfig, reps: &[Replicate]) -> AppResult<()> {
    let manifests = out.join("manifests");
    std::fs::create_dir_all(&manifests).map_err(|e| AppError::io(&manifests, e))?;
    let rows: Vec<EvalReport> = reps.iter().flat_map(|r| r.reports.iter().cloned()).collect();
    write_results_file(&out.join("results.csv"), &rows)?;
    let cfg_path = out.join("config.json");
    let text = serde_json::to_string_pretty(cfg).map_err(|e| AppError::runtime(e.to_string()))?;
    std::fs::write(&cfg_path, text + "\n").map_err(|e| AppError::io(&cfg_path, e))?;
    for r in reps {
        r.manifest.write(&manifests)?;
    }
    Ok(())
}

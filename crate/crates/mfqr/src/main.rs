use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mfqr::config::{ExperimentConfig, Seeds};
use mfqr::error::{AppError, AppResult};
use mfqr::{plot, report, runner, simulate};
use mfqr_core::model::BackendKind;

#[derive(Debug, Parser)]
#[command(name = "mfqr", version, about = "Multi-fidelity quantile regression experiments")]
struct Cli {
    /// TOML config, or JSON when the file ends in `.json`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (input directory for `plot` and `report`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replicate seeds: `a..b`, `a..=b` or a single seed.
    #[arg(long, global = true)]
    seeds: Option<Seeds>,
    /// Worker threads for replicates.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Backend {
    Kernel,
    Forest,
    Gp,
}

impl From<Backend> for BackendKind {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Kernel => BackendKind::Kernel,
            Backend::Forest => BackendKind::Forest,
            Backend::Gp => BackendKind::Gp,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic splits as CSV with a JSON sidecar.
    Simulate,
    /// Run every method over the configured replicates.
    Run,
    /// Draw SVG figures from a results directory.
    Plot,
    /// Summarize a results directory per regime and method.
    Report,
}

fn load_config(cli: &Cli) -> AppResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::load(path)?;
            cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
            cfg
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &cli.seeds {
        cfg.seeds = s.clone();
    }
    if let Some(b) = cli.backend {
        cfg.backend = b.into();
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>, fallback: &str) -> PathBuf {
    cli.out.clone().or_else(|| cfg.and_then(|c| c.out.clone())).unwrap_or_else(|| PathBuf::from(fallback))
}

fn execute(cli: &Cli) -> AppResult<()> {
    match cli.command {
        Command::Simulate => {
            let cfg = load_config(cli)?;
            let out = out_dir(cli, Some(&cfg), "data");
            for dir in simulate::simulate(&cfg, &out)? {
                println!("{}", dir.display());
            }
        }
        Command::Run => {
            let cfg = load_config(cli)?;
            let out = out_dir(cli, Some(&cfg), "results");
            let workers = match cli.workers {
                Some(0) => return Err(AppError::config("--workers must be at least 1")),
                Some(n) => n,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            };
            let reps = runner::run_experiment(&cfg, workers)?;
            runner::write_outputs(&out, &cfg, &reps)?;
            println!("{}", out.join("results.csv").display());
        }
        Command::Plot => {
            let dir = out_dir(cli, None, "results");
            for path in plot::emit_plots(&dir)? {
                println!("{}", path.display());
            }
        }
        Command::Report => {
            let dir = out_dir(cli, None, "results");
            let (rows, _) = report::report(&dir)?;
            print!("{}", report::render_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MFQR_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

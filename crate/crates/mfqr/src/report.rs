//! `report`: mean and standard deviation per (regime, method).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mfqr_core::metrics::{summarize, SummaryRow};

use crate::error::{AppError, AppResult};
use crate::io::{fmt_f64, read_results};

pub const SUMMARY_COLUMNS: [&str; 9] =
    ["regime", "method", "replicates", "mse_mean", "mse_sd", "coverage_mean", "coverage_sd", "width_mean", "width_sd"];

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::io(path, e))?;
    w.write_record(SUMMARY_COLUMNS).map_err(|e| AppError::io(path, e))?;
    for r in rows {
        w.write_record([
            r.regime.clone(),
            r.method.clone(),
            r.replicates.to_string(),
            opt(r.mse_mean),
            opt(r.mse_sd),
            fmt_f64(r.coverage_mean),
            fmt_f64(r.coverage_sd),
            fmt_f64(r.width_mean),
            fmt_f64(r.width_sd),
        ])
        .map_err(|e| AppError::io(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Fixed-width text table for the terminal.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:<11} {:>4}  {:>19}  {:>17}  {:>17}",
        "regime", "method", "n", "mse (sd)", "coverage (sd)", "width (sd)"
    );
    for r in rows {
        let mse = match (r.mse_mean, r.mse_sd) {
            (Some(m), Some(sd)) => format!("{m:.4} ({sd:.4})"),
            _ => "-".to_string(),
        };
        let _ = writeln!(
            s,
            "{:<16} {:<11} {:>4}  {:>19}  {:>17}  {:>17}",
            r.regime,
            r.method,
            r.replicates,
            mse,
            format!("{:.3} ({:.3})", r.coverage_mean, r.coverage_sd),
            format!("{:.3} ({:.3})", r.width_mean, r.width_sd),
        );
    }
    s
}

/// Reads `<results>/results.csv` and writes `<results>/summary.csv`. Returns
/// the summary rows and the written path, or no path for an empty table.
pub fn report(results: &Path) -> AppResult<(Vec<SummaryRow>, Option<PathBuf>)> {
    let rows = read_results(&results.join("results.csv"))?;
    if rows.is_empty() {
        log::warn!("{}: no result rows, nothing to summarize", results.display());
        return Ok((Vec::new(), None));
    }
    let summary = summarize(&rows);
    let path = results.join("summary.csv");
    write_summary(&path, &summary)?;
    Ok((summary, Some(path)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_results_file;
    use mfqr_core::metrics::EvalReport;

    fn row(method: &str, seed: u64, cov: f64) -> EvalReport {
        EvalReport {
            regime: "informative".into(),
            method: method.into(),
            seed,
            mse: Some(0.1 * seed as f64),
            coverage: cov,
            width: 1.0,
            gamma_hat: vec![],
            m_hat: vec![],
        }
    }

    #[test]
    fn mean_and_sd_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let reports = vec![row("mfqr", 1, 0.8), row("hf_only", 1, 0.9), row("mfqr", 3, 1.0)];
        write_results_file(&dir.path().join("results.csv"), &reports).unwrap();
        let (summary, path) = report(dir.path()).unwrap();
        assert!(path.unwrap().exists());
        assert_eq!(summary.len(), 2);
        let m = &summary[0];
        assert_eq!((m.method.as_str(), m.replicates), ("mfqr", 2));
        assert!((m.coverage_mean - 0.9).abs() < 1e-12);
        assert!((m.coverage_sd - 0.02f64.sqrt()).abs() < 1e-12);
        assert!((m.mse_mean.unwrap() - 0.2).abs() < 1e-12);
        assert!(render_table(&summary).contains("hf_only"));
    }

    #[test]
    fn empty_table_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        write_results_file(&dir.path().join("results.csv"), &[]).unwrap();
        let (summary, path) = report(dir.path()).unwrap();
        assert!(summary.is_empty() && path.is_none());
        assert!(!dir.path().join("summary.csv").exists());
    }
}

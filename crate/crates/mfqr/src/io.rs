//! CSV formats: `x1..xp,y` datasets and the results table.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use mfqr_core::data::{Dataset, Fidelity, Matrix};
use mfqr_core::metrics::EvalReport;
use mfqr_core::synthetic::Splits;

use crate::error::{AppError, AppResult};

pub const RESULT_COLUMNS: [&str; 8] = ["regime", "method", "seed", "mse", "coverage", "width", "gamma_hat", "m_hat"];

/// Shortest text that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn dataset_header(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).chain(std::iter::once("y".to_string())).collect()
}

/// Reads a dataset; the header must be exactly `x1,...,xp,y`. Violations are
/// configuration errors.
pub fn read_dataset(path: &Path, fidelity: Fidelity) -> AppResult<Dataset> {
    let schema = |msg: String| AppError::config(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| schema(e.to_string()))?;
    let header: Vec<String> = rdr.headers().map_err(|e| schema(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 2 || header != dataset_header(header.len() - 1) {
        return Err(schema(format!("header must be x1,...,xp,y; found {}", header.join(","))));
    }
    let p = header.len() - 1;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| schema(e.to_string()))?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| schema(format!("row {}: {:?} is not a number", line + 2, field)))?;
            if !v.is_finite() {
                return Err(schema(format!("row {}: non-finite value", line + 2)));
            }
            if j < p {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
    }
    if ys.is_empty() {
        return Err(schema("no data rows".into()));
    }
    let x = Matrix::from_row_major(ys.len(), p, xs).map_err(|e| schema(e.to_string()))?;
    Dataset::new(x, ys, fidelity).map_err(|e| schema(e.to_string()))
}

pub fn write_dataset(path: &Path, data: &Dataset) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::io(path, e))?;
    w.write_record(dataset_header(data.dim())).map_err(|e| AppError::io(path, e))?;
    for (x, y) in data.x().iter_rows().zip(data.y()) {
        let row: Vec<String> = x.iter().chain(std::iter::once(y)).map(|&v| fmt_f64(v)).collect();
        w.write_record(&row).map_err(|e| AppError::io(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Loads the four external splits and checks that they share one covariate dimension.
pub fn read_splits(lf: &Path, hf: &Path, cal: &Path, test: &Path) -> AppResult<Splits> {
    let splits = Splits {
        lf: read_dataset(lf, Fidelity::Low)?,
        hf: read_dataset(hf, Fidelity::High)?,
        cal: read_dataset(cal, Fidelity::High)?,
        test: read_dataset(test, Fidelity::High)?,
    };
    let p = splits.lf.dim();
    for (name, d) in [("hf", &splits.hf), ("cal", &splits.cal), ("test", &splits.test)] {
        if d.dim() != p {
            return Err(AppError::config(format!("{name} data has {} covariates, lf data has {p}", d.dim())));
        }
    }
    Ok(splits)
}

pub fn write_splits(dir: &Path, splits: &Splits) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    for (name, d) in [("lf", &splits.lf), ("hf", &splits.hf), ("cal", &splits.cal), ("test", &splits.test)] {
        write_dataset(&dir.join(format!("{name}.csv")), d)?;
    }
    Ok(())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

/// One results row per report; per-level selections are joined with `;`.
pub fn write_results(out: &mut impl Write, reports: &[EvalReport]) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| AppError::runtime(format!("writing results: {e}"));
    w.write_record(RESULT_COLUMNS).map_err(err)?;
    for r in reports {
        w.write_record([
            r.regime.clone(),
            r.method.clone(),
            r.seed.to_string(),
            r.mse.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.coverage),
            fmt_f64(r.width),
            join(&r.gamma_hat.iter().map(|&g| fmt_f64(g)).collect::<Vec<_>>()),
            join(&r.m_hat),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| AppError::runtime(format!("writing results: {e}")))
}

pub fn write_results_file(path: &Path, reports: &[EvalReport]) -> AppResult<()> {
    let mut f = File::create(path).map_err(|e| AppError::io(path, e))?;
    write_results(&mut f, reports)
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(';').map(|t| t.parse().ok()).collect()
}

/// Reads a results table; missing columns or malformed numbers are errors.
pub fn read_results(path: &Path) -> AppResult<Vec<EvalReport>> {
    let bad = |msg: String| AppError::runtime(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column {name}")));
    let idx: Vec<usize> = RESULT_COLUMNS.iter().map(|c| col(c)).collect::<AppResult<_>>()?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let f = |k: usize| rec.get(idx[k]).unwrap_or("");
        let num = |k: usize| f(k).parse::<f64>().map_err(|_| bad(format!("row {}: bad {}", line + 2, RESULT_COLUMNS[k])));
        out.push(EvalReport {
            regime: f(0).to_string(),
            method: f(1).to_string(),
            seed: f(2).parse().map_err(|_| bad(format!("row {}: bad seed", line + 2)))?,
            mse: if f(3).is_empty() { None } else { Some(num(3)?) },
            coverage: num(4)?,
            width: num(5)?,
            gamma_hat: parse_list(f(6)).ok_or_else(|| bad(format!("row {}: bad gamma_hat", line + 2)))?,
            m_hat: parse_list(f(7)).ok_or_else(|| bad(format!("row {}: bad m_hat", line + 2)))?,
        });
    }
    Ok(out)
}

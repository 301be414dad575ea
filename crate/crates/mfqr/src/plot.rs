//! `plot`: SVG figures from a results directory.

use std::path::{Path, PathBuf};

use mfqr_core::experiment::{Method, ReplicateOutcome};
use mfqr_core::metrics::EvalReport;
use mfqr_core::synthetic::{Splits, TruthOracle};

use crate::error::{AppError, AppResult};
use crate::io::read_results;
use crate::manifest::{DataSource, Manifest};
use crate::svg::{padded_range, Frame, Svg, PALETTE};

const MAX_POINTS: usize = 1500;
const W: f64 = 720.0;
const H: f64 = 440.0;

fn frame(x: (f64, f64), y: (f64, f64)) -> Frame {
    Frame { left: 70.0, top: 40.0, width: W - 100.0, height: H - 100.0, x, y }
}

/// Every `k`-th index so that at most `MAX_POINTS` remain.
fn thin(n: usize) -> impl Iterator<Item = usize> {
    let step = n.div_ceil(MAX_POINTS).max(1);
    (0..n).step_by(step)
}

fn write_svg(dir: &Path, name: &str, svg: Svg, written: &mut Vec<PathBuf>) -> AppResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, svg.finish()).map_err(|e| AppError::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn method_label(name: &str) -> String {
    Method::parse(name).map(|m| m.label().to_string()).unwrap_or_else(|| name.to_string())
}

fn boxplots(rows: &[&EvalReport], regime: &str, metric: &str, target: Option<f64>) -> Svg {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let value = |r: &EvalReport| if metric == "coverage" { r.coverage } else { r.width };
    let f = frame((0.5, methods.len() as f64 + 0.5), padded_range(rows.iter().map(|r| value(r)).chain(target)));
    let mut svg = Svg::new(W, H);
    let labels: Vec<String> = methods.iter().map(|m| method_label(m)).collect();
    f.axes(&mut svg, &format!("{regime}: {metric} across seeds"), "method", metric, Some(&labels));
    if let Some(t) = target {
        f.hline(&mut svg, t, "#555");
    }
    for (k, m) in methods.iter().enumerate() {
        let vals: Vec<f64> = rows.iter().filter(|r| r.method == *m).map(|r| value(r)).collect();
        f.boxplot(&mut svg, k as f64 + 1.0, &vals, PALETTE[k % PALETTE.len()]);
    }
    svg
}

fn sorted_by_x(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    idx
}

fn data_panel(regime: &str, data: &Splits) -> Svg {
    let (lx, ly) = (data.lf.x().column_values(0), data.lf.y());
    let (hx, hy) = (data.hf.x().column_values(0), data.hf.y());
    let f = frame(padded_range(lx.iter().chain(&hx).copied()), padded_range(ly.iter().chain(hy).copied()));
    let mut svg = Svg::new(W, H);
    f.axes(&mut svg, &format!("{regime}: training data"), "x1", "y", None);
    let pick: Vec<usize> = thin(lx.len()).collect();
    let sel = |v: &[f64]| pick.iter().map(|&i| v[i]).collect::<Vec<_>>();
    f.points(&mut svg, &sel(&lx), &sel(ly), PALETTE[0], 1.6, 0.35);
    f.points(&mut svg, &hx, hy, PALETTE[1], 2.4, 0.9);
    f.legend(&mut svg, &[("LF", PALETTE[0]), ("HF", PALETTE[1])]);
    svg
}

fn interval_panel(regime: &str, data: &Splits, out: &ReplicateOutcome, k: usize) -> Svg {
    let o = &out.outputs[k];
    let r = &out.reports[k];
    let xs = data.test.x().column_values(0);
    let order = sorted_by_x(&xs);
    let by = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let (sx, lo, hi, raw_lo, raw_hi) = (by(&xs), by(&o.lower), by(&o.upper), by(&o.test_lo), by(&o.test_hi));
    let y = data.test.y();
    let f = frame(padded_range(xs.iter().copied()), padded_range(y.iter().chain(&lo).chain(&hi).copied()));
    let mut svg = Svg::new(W, H);
    let title = format!("{regime}: {} (coverage {:.3}, width {:.3})", o.method.label(), r.coverage, r.width);
    f.axes(&mut svg, &title, "x1", "y", None);
    f.band(&mut svg, &sx, &lo, &hi, PALETTE[0], 0.25);
    let pick: Vec<usize> = thin(xs.len()).collect();
    f.points(
        &mut svg,
        &pick.iter().map(|&i| xs[i]).collect::<Vec<_>>(),
        &pick.iter().map(|&i| y[i]).collect::<Vec<_>>(),
        "#444",
        1.4,
        0.4,
    );
    f.line(&mut svg, &sx, &raw_lo, PALETTE[1], 1.2, true);
    f.line(&mut svg, &sx, &raw_hi, PALETTE[1], 1.2, true);
    f.legend(&mut svg, &[("conformal band", PALETTE[0]), ("raw quantiles", PALETTE[1])]);
    svg
}

fn pseudo_panel(regime: &str, data: &Splits, out: &ReplicateOutcome, taus: [f64; 2], truth: Option<&TruthOracle>) -> Option<Svg> {
    let u = out.pseudo_responses.as_ref()?;
    let levels = out.test_levels.as_ref()?;
    let hx = data.hf.x().column_values(0);
    let tx = data.test.x().column_values(0);
    let f = frame(padded_range(hx.iter().chain(&tx).copied()), (0.0, 1.0));
    let mut svg = Svg::new(W, H);
    f.axes(&mut svg, &format!("{regime}: wrapped HF responses"), "x1", "LF CDF level", None);
    f.points(&mut svg, &hx, u, PALETTE[1], 2.2, 0.7);
    let order = sorted_by_x(&tx);
    let sx: Vec<f64> = order.iter().map(|&i| tx[i]).collect();
    let mut legend = vec![("pseudo-responses", PALETTE[1]), ("estimated level", PALETTE[0])];
    for (j, &tau) in taus.iter().enumerate() {
        let est: Vec<f64> = order.iter().map(|&i| levels[i][j]).collect();
        f.line(&mut svg, &sx, &est, PALETTE[0], 1.6, false);
        if let Some(t) = truth {
            let exact: Vec<f64> = sx.iter().map(|&x| t.true_level_function(tau, x).unwrap_or(f64::NAN)).collect();
            f.line(&mut svg, &sx, &exact, PALETTE[2], 1.2, true);
        }
    }
    if truth.is_some() {
        legend.push(("true level", PALETTE[2]));
    }
    f.legend(&mut svg, &legend);
    Some(svg)
}

/// Writes figures into `<results>/plots` and returns their paths. An empty
/// results table writes nothing and logs a warning.
pub fn emit_plots(results: &Path) -> AppResult<Vec<PathBuf>> {
    let rows = read_results(&results.join("results.csv"))?;
    let mut written = Vec::new();
    if rows.is_empty() {
        log::warn!("{}: no result rows, nothing to plot", results.display());
        return Ok(written);
    }
    let dir = results.join("plots");
    std::fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
    let mut regimes: Vec<&str> = Vec::new();
    for r in &rows {
        if !regimes.contains(&r.regime.as_str()) {
            regimes.push(&r.regime);
        }
    }
    for regime in regimes {
        let cell: Vec<&EvalReport> = rows.iter().filter(|r| r.regime == regime).collect();
        let first_seed = cell[0].seed;
        let manifest_path = results.join("manifests").join(Manifest::file_name(regime, first_seed));
        let manifest = match Manifest::read(&manifest_path) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("skipping data panels for {regime}: {e}");
                None
            }
        };
        let target = manifest.as_ref().map(|m| 1.0 - m.settings.alpha);
        write_svg(&dir, &format!("{regime}_coverage.svg"), boxplots(&cell, regime, "coverage", target), &mut written)?;
        write_svg(&dir, &format!("{regime}_width.svg"), boxplots(&cell, regime, "width", None), &mut written)?;
        let Some(manifest) = manifest else { continue };
        let (data, out) = manifest.replay()?;
        if manifest.reports() != out.reports {
            log::warn!("{regime} seed {first_seed}: replay differs from the manifest");
        }
        let truth = match manifest.source {
            DataSource::Synthetic { regime, .. } => Some(TruthOracle::new(regime)),
            DataSource::External { .. } => None,
        };
        write_svg(&dir, &format!("{regime}_data.svg"), data_panel(regime, &data), &mut written)?;
        for (k, o) in out.outputs.iter().enumerate() {
            let name = format!("{regime}_intervals_{}.svg", o.method.name());
            write_svg(&dir, &name, interval_panel(regime, &data, &out, k), &mut written)?;
        }
        if let Some(svg) = pseudo_panel(regime, &data, &out, manifest.settings.taus, truth.as_ref()) {
            write_svg(&dir, &format!("{regime}_pseudo.svg"), svg, &mut written)?;
        }
    }
    Ok(written)
}

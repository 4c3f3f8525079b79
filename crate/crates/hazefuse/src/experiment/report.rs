//! Report files for an evaluated matrix.
//!
//! Deterministic names and contents:
//!
//! - `results.csv` — one row per (model, n, images) cell with mean MAE and
//!   percentage change against its baseline.
//! - `pvalues.csv` — per model, the two-sample KS p-value comparing the
//!   image and no-image MAE distributions at each sensor count ≥ 1.
//! - `plotdata/mae_<model>_<mode>.csv` — (n, mean MAE, pct change) curves.
//! - `plotdata/maedist_<model>_n<k>_<mode>.csv` — per-repetition MAE values.

use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use super::{ks_two_sample, ResultTable};
use crate::error::{Error, Result};
use crate::regressors::RegressorKind;

fn mode_tag(use_images: bool) -> &'static str {
    if use_images {
        "img"
    } else {
        "noimg"
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write all report files into `out_dir`, returning the written paths.
pub fn report(results: &ResultTable, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if results.cells.is_empty() {
        return Err(Error::InsufficientData("empty result table".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let plot_dir = out_dir.join("plotdata");
    fs::create_dir_all(&plot_dir).map_err(|e| Error::io(&plot_dir, e))?;
    let mut written = Vec::new();

    // results.csv
    let results_path = out_dir.join("results.csv");
    {
        let mut w = create(&results_path)?;
        writeln!(
            w,
            "altitude,model,n_sensors,use_images,mean_mae,pct_change_vs_baseline,repetitions"
        )
        .map_err(|e| Error::io(&results_path, e))?;
        for cell in &results.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                results.altitude_class.as_str(),
                cell.model.as_str(),
                cell.n_sensors,
                cell.use_images,
                cell.mean_mae,
                fmt_opt(cell.pct_change),
                results.repetitions
            )
            .map_err(|e| Error::io(&results_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&results_path, e))?;
    }
    written.push(results_path);

    // pvalues.csv: image vs no-image distribution per model and n >= 1
    let models: Vec<RegressorKind> = {
        let mut seen = Vec::new();
        for c in &results.cells {
            if !seen.contains(&c.model) {
                seen.push(c.model);
            }
        }
        seen
    };
    let mut counts: Vec<usize> = results
        .cells
        .iter()
        .map(|c| c.n_sensors)
        .filter(|&n| n >= 1)
        .collect();
    counts.sort_unstable();
    counts.dedup();

    let pvalues_path = out_dir.join("pvalues.csv");
    {
        let mut w = create(&pvalues_path)?;
        let header: Vec<String> = std::iter::once("model".to_string())
            .chain(counts.iter().map(|n| format!("n={n}")))
            .collect();
        writeln!(w, "{}", header.join(",")).map_err(|e| Error::io(&pvalues_path, e))?;
        for &model in &models {
            let mut fields = vec![model.as_str().to_string()];
            for &n in &counts {
                let pair = (
                    results.cell(model, n, false),
                    results.cell(model, n, true),
                );
                let text = match pair {
                    (Some(without), Some(with)) => {
                        let (_, p) = ks_two_sample(&without.maes, &with.maes)?;
                        p.to_string()
                    }
                    _ => String::new(),
                };
                fields.push(text);
            }
            writeln!(w, "{}", fields.join(",")).map_err(|e| Error::io(&pvalues_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&pvalues_path, e))?;
    }
    written.push(pvalues_path);

    // plotdata: MAE curves and per-cell distributions
    for &model in &models {
        for use_images in [false, true] {
            let cells: Vec<_> = results
                .cells
                .iter()
                .filter(|c| c.model == model && c.use_images == use_images)
                .collect();
            if cells.is_empty() {
                continue;
            }
            let curve_path =
                plot_dir.join(format!("mae_{}_{}.csv", model.as_str(), mode_tag(use_images)));
            let mut w = create(&curve_path)?;
            writeln!(w, "n_sensors,mean_mae,pct_change").map_err(|e| Error::io(&curve_path, e))?;
            for cell in &cells {
                writeln!(
                    w,
                    "{},{},{}",
                    cell.n_sensors,
                    cell.mean_mae,
                    fmt_opt(cell.pct_change)
                )
                .map_err(|e| Error::io(&curve_path, e))?;
            }
            w.flush().map_err(|e| Error::io(&curve_path, e))?;
            written.push(curve_path);

            for cell in &cells {
                let dist_path = plot_dir.join(format!(
                    "maedist_{}_n{}_{}.csv",
                    model.as_str(),
                    cell.n_sensors,
                    mode_tag(use_images)
                ));
                let mut w = create(&dist_path)?;
                writeln!(w, "repetition,mae").map_err(|e| Error::io(&dist_path, e))?;
                for (rep, v) in cell.maes.iter().enumerate() {
                    writeln!(w, "{rep},{v}").map_err(|e| Error::io(&dist_path, e))?;
                }
                w.flush().map_err(|e| Error::io(&dist_path, e))?;
                written.push(dist_path);
            }
        }
    }

    Ok(written)
}

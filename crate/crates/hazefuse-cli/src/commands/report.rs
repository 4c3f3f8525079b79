//! `report`: rebuild report files from an existing results directory and
//! print a human-readable summary.

use std::path::{Path, PathBuf};

use hazefuse::dataset_io::AltitudeClass;
use hazefuse::error::{Error, Result};
use hazefuse::experiment::{report as write_report, ResultCell, ResultTable, KS_SIGNIFICANCE};
use hazefuse::regressors::RegressorKind;

use crate::config::FileConfig;
use crate::manifest::Manifest;

#[derive(clap::Args)]
pub struct Args {
    /// Directory holding results.csv and plotdata/ from `evaluate`.
    #[arg(long)]
    results: PathBuf,

    /// Where to write the rebuilt report (defaults to --results).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_maes(dir: &Path, model: RegressorKind, n: usize, use_images: bool) -> Result<Vec<f64>> {
    let path = dir.join("plotdata").join(format!(
        "maedist_{}_n{}_{}.csv",
        model.as_str(),
        n,
        if use_images { "img" } else { "noimg" }
    ));
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut maes = Vec::new();
    for line in text.lines().skip(1) {
        let value = line
            .split(',')
            .nth(1)
            .ok_or_else(|| Error::InvalidValue(format!("malformed line '{line}' in {}", path.display())))?;
        maes.push(value.parse::<f64>().map_err(|_| {
            Error::InvalidValue(format!("unparseable MAE '{value}' in {}", path.display()))
        })?);
    }
    if maes.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no repetitions recorded in {}",
            path.display()
        )));
    }
    Ok(maes)
}

fn load_table(dir: &Path) -> Result<ResultTable> {
    let results_path = dir.join("results.csv");
    let text = std::fs::read_to_string(&results_path).map_err(|e| Error::io(&results_path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("altitude,model,n_sensors,use_images,mean_mae") {
        return Err(Error::InvalidValue(format!(
            "unexpected results.csv header '{header}'"
        )));
    }
    let mut altitude = None;
    let mut repetitions = 0usize;
    let mut cells = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::InvalidValue(format!("malformed results row '{line}'")));
        }
        let alt = AltitudeClass::parse(fields[0])?;
        altitude = Some(alt);
        let model = RegressorKind::parse(fields[1])?;
        let n_sensors: usize = fields[2]
            .parse()
            .map_err(|_| Error::InvalidValue(format!("bad n_sensors '{}'", fields[2])))?;
        let use_images = fields[3] == "true";
        let mean_mae: f64 = fields[4]
            .parse()
            .map_err(|_| Error::InvalidValue(format!("bad mean_mae '{}'", fields[4])))?;
        let pct_change = if fields[5].is_empty() {
            None
        } else {
            Some(fields[5].parse::<f64>().map_err(|_| {
                Error::InvalidValue(format!("bad pct_change '{}'", fields[5]))
            })?)
        };
        repetitions = fields[6]
            .parse()
            .map_err(|_| Error::InvalidValue(format!("bad repetitions '{}'", fields[6])))?;
        let maes = read_maes(dir, model, n_sensors, use_images)?;
        cells.push(ResultCell {
            model,
            n_sensors,
            use_images,
            mean_mae,
            maes,
            pct_change,
        });
    }
    let altitude = altitude
        .ok_or_else(|| Error::InsufficientData("results.csv holds no result rows".into()))?;
    Ok(ResultTable {
        altitude_class: altitude,
        repetitions,
        seed: 0,
        cells,
    })
}

pub fn run(args: Args, file_config: &FileConfig) -> Result<()> {
    let table = load_table(&args.results)?;
    let out = args.out.clone().unwrap_or_else(|| args.results.clone());
    let written = write_report(&table, &out)?;

    println!(
        "{} cells ({} altitude, {} repetitions each)",
        table.cells.len(),
        table.altitude_class.as_str(),
        table.repetitions
    );
    for cell in &table.cells {
        println!(
            "  {} n={} images={}: mean MAE {:.4}{}",
            cell.model.as_str(),
            cell.n_sensors,
            if cell.use_images { "on" } else { "off" },
            cell.mean_mae,
            cell.pct_change
                .map(|p| format!(" ({p:+.2}%)"))
                .unwrap_or_default()
        );
    }
    println!(
        "rebuilt {} files under {} (KS significance threshold p < {KS_SIGNIFICANCE})",
        written.len(),
        out.display()
    );

    let mut manifest = Manifest::new("report");
    manifest
        .set("cells", table.cells.len() as u64)
        .set_path("results", &args.results);
    manifest.write(&out, file_config)?;
    Ok(())
}

//! `calibrate`: fit the two-segment co-location calibration or apply a
//! saved one to a sensor log.

use std::path::{Path, PathBuf};

use hazefuse::calibration::{
    apply_calibration, fit_piecewise, rmse, CoLocationSeries, PiecewiseLinearCalib,
    DEFAULT_BREAKPOINT,
};
use hazefuse::dataset_io::{load_sensor_csv, write_sensor_csv};
use hazefuse::error::{Error, Result};

use crate::config::{resolve, FileConfig};
use crate::manifest::Manifest;

#[derive(clap::Args)]
pub struct Args {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(clap::Subcommand)]
enum Mode {
    /// Fit segment coefficients from a co-location CSV
    /// (columns: timestamp,raw,reference).
    Fit {
        #[arg(long)]
        colocation: PathBuf,
        /// Concentration separating the two segments, µg/m³.
        #[arg(long)]
        breakpoint: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a saved calibration to the pm25 column of a canonical
    /// sensor CSV.
    Apply {
        /// calibration.json produced by `calibrate fit`.
        #[arg(long)]
        calibration: PathBuf,
        #[arg(long)]
        sensors: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_colocation(path: &Path) -> Result<CoLocationSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.into(),
                path: path.to_path_buf(),
            })
    };
    let (i_ts, i_raw, i_ref) = (col("timestamp")?, col("raw")?, col("reference")?);
    let (mut timestamps, mut raw, mut reference) = (vec![], vec![], vec![]);
    for row in reader.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        timestamps.push(row[i_ts].parse::<i64>().map_err(|_| {
            Error::InvalidValue(format!("unparseable timestamp '{}'", &row[i_ts]))
        })?);
        raw.push(row[i_raw].parse::<f64>().map_err(|_| {
            Error::InvalidValue(format!("unparseable raw value '{}'", &row[i_raw]))
        })?);
        reference.push(row[i_ref].parse::<f64>().map_err(|_| {
            Error::InvalidValue(format!("unparseable reference value '{}'", &row[i_ref]))
        })?);
    }
    CoLocationSeries::new(timestamps, raw, reference)
}

pub fn run(args: Args, file_config: &FileConfig) -> Result<()> {
    match args.mode {
        Mode::Fit {
            colocation,
            breakpoint,
            out,
        } => {
            let breakpoint = resolve(
                breakpoint,
                file_config.parsed("calibration.breakpoint")?,
                DEFAULT_BREAKPOINT,
            );
            let series = load_colocation(&colocation)?;
            let calib = fit_piecewise(&series, breakpoint)?;

            let calibrated: Vec<f64> = series
                .raw()
                .iter()
                .map(|&x| apply_calibration(&calib, x.max(0.0)))
                .collect::<Result<_>>()?;
            let before = rmse(series.raw(), series.reference())?;
            let after = rmse(&calibrated, series.reference())?;

            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let json_path = out.join("calibration.json");
            std::fs::write(&json_path, calib.to_json()).map_err(|e| Error::io(&json_path, e))?;

            let mut manifest = Manifest::new("calibrate-fit");
            manifest
                .set("breakpoint", breakpoint)
                .set("samples", series.len() as u64)
                .set("rmse_before", before)
                .set("rmse_after", after)
                .set_path("colocation", &colocation);
            manifest.write(&out, file_config)?;

            println!(
                "fit over {} pairs: lo {:.4}x+{:.4}, hi {:.4}x+{:.4}; rmse {:.3} -> {:.3}; wrote {}",
                series.len(),
                calib.slope_lo,
                calib.intercept_lo,
                calib.slope_hi,
                calib.intercept_hi,
                before,
                after,
                json_path.display()
            );
            Ok(())
        }
        Mode::Apply {
            calibration,
            sensors,
            out,
        } => {
            let text = std::fs::read_to_string(&calibration)
                .map_err(|e| Error::io(&calibration, e))?;
            let calib = PiecewiseLinearCalib::from_json(&text)?;
            let load = load_sensor_csv(&sensors, &file_config.sensor_schema()?)?;
            let mut records = load.records;
            for r in &mut records {
                r.pm25 = apply_calibration(&calib, r.pm25)?;
            }
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let out_csv = out.join("sensors_calibrated.csv");
            write_sensor_csv(&out_csv, &records)?;

            let mut manifest = Manifest::new("calibrate-apply");
            manifest
                .set("records", records.len() as u64)
                .set_path("calibration", &calibration)
                .set_path("sensors", &sensors);
            manifest.write(&out, file_config)?;

            println!("calibrated {} records -> {}", records.len(), out_csv.display());
            Ok(())
        }
    }
}

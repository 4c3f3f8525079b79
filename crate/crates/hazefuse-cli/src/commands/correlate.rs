//! `correlate`: spatial correlation analysis of a sensor deployment.
//!
//! Writes, for the raw series and (when a calibration is given) the
//! calibrated series: the station correlation matrix, the
//! correlation-vs-distance fit, factor correlations, summary statistics, and
//! a gnuplot-ready scatter of (distance_km, rho) pairs.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use hazefuse::calibration::{apply_calibration, PiecewiseLinearCalib};
use hazefuse::dataset_io::{load_sensor_csv, load_station_csv, Deployment};
use hazefuse::error::{Error, Result};
use hazefuse::spatial_stats::{
    correlation_matrix, factor_correlations, fit_correlation_vs_distance, summary_stats,
    CorrelationMatrix, DEFAULT_RESAMPLE_SECS, FACTOR_LABELS,
};

use crate::config::{resolve, FileConfig};
use crate::manifest::Manifest;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    sensors: PathBuf,

    #[arg(long)]
    stations: PathBuf,

    /// Resampling bucket for the correlation series, seconds.
    #[arg(long)]
    resample: Option<i64>,

    /// Optional calibration.json; adds `_calibrated` output variants.
    #[arg(long)]
    calibration: Option<PathBuf>,

    #[arg(long)]
    out: PathBuf,
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_outputs(
    out: &Path,
    suffix: &str,
    deployment: &Deployment,
    resample: i64,
) -> Result<CorrelationMatrix> {
    let matrix = correlation_matrix(deployment, resample)?;
    let distances = deployment.distance_matrix();

    let matrix_path = out.join(format!("correlation_matrix{suffix}.csv"));
    {
        let mut w = create(&matrix_path)?;
        let header: Vec<String> = std::iter::once("station".to_string())
            .chain(matrix.stations.iter().map(|s| s.to_string()))
            .collect();
        writeln!(w, "{}", header.join(",")).map_err(|e| Error::io(&matrix_path, e))?;
        for (i, id) in matrix.stations.iter().enumerate() {
            let mut fields = vec![id.to_string()];
            for j in 0..matrix.len() {
                fields.push(fmt_opt(matrix.value(i, j)));
            }
            writeln!(w, "{}", fields.join(",")).map_err(|e| Error::io(&matrix_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&matrix_path, e))?;
    }

    let fit_path = out.join(format!("distance_fit{suffix}.csv"));
    match fit_correlation_vs_distance(&matrix, &distances) {
        Ok(fit) => {
            let mut w = create(&fit_path)?;
            writeln!(w, "slope_per_km,intercept,r_squared,n_pairs")
                .map_err(|e| Error::io(&fit_path, e))?;
            writeln!(
                w,
                "{},{},{},{}",
                fit.slope_per_km, fit.intercept, fit.r_squared, fit.n_pairs
            )
            .map_err(|e| Error::io(&fit_path, e))?;
            w.flush().map_err(|e| Error::io(&fit_path, e))?;
            println!(
                "{}: slope {:.4}/km, R^2 {:.4} over {} pairs",
                if suffix.is_empty() { "raw" } else { "calibrated" },
                fit.slope_per_km,
                fit.r_squared,
                fit.n_pairs
            );
        }
        Err(e) => println!("distance fit skipped: {e}"),
    }

    let scatter_path = out.join(format!("scatter{suffix}.dat"));
    {
        let mut w = create(&scatter_path)?;
        writeln!(w, "# distance_km rho").map_err(|e| Error::io(&scatter_path, e))?;
        for (i, j, rho) in matrix.present_pairs() {
            writeln!(w, "{} {}", distances[i][j] / 1000.0, rho)
                .map_err(|e| Error::io(&scatter_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&scatter_path, e))?;
    }

    let factors_path = out.join(format!("factor_correlations{suffix}.csv"));
    {
        let factors = factor_correlations(deployment)?;
        let mut w = create(&factors_path)?;
        writeln!(w, "factor,{}", FACTOR_LABELS.join(",")).map_err(|e| Error::io(&factors_path, e))?;
        for (i, label) in FACTOR_LABELS.iter().enumerate() {
            let mut fields = vec![label.to_string()];
            for j in 0..3 {
                fields.push(fmt_opt(factors[i][j]));
            }
            writeln!(w, "{}", fields.join(",")).map_err(|e| Error::io(&factors_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&factors_path, e))?;
    }

    let stats_path = out.join(format!("summary_stats{suffix}.csv"));
    {
        let records = deployment.records();
        let series: [(&str, Vec<f64>); 3] = [
            ("pm25", records.iter().map(|r| r.pm25).collect()),
            ("temperature", records.iter().map(|r| r.temperature_c).collect()),
            ("humidity", records.iter().map(|r| r.humidity_rh).collect()),
        ];
        let mut w = create(&stats_path)?;
        writeln!(w, "series,std_dev,range,mean").map_err(|e| Error::io(&stats_path, e))?;
        for (label, values) in series {
            let s = summary_stats(&values)?;
            writeln!(w, "{label},{},{},{}", s.std_dev, s.range, s.mean)
                .map_err(|e| Error::io(&stats_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&stats_path, e))?;
    }

    Ok(matrix)
}

pub fn run(args: Args, file_config: &FileConfig) -> Result<()> {
    let resample = resolve(
        args.resample,
        file_config.parsed("correlate.resample_secs")?,
        DEFAULT_RESAMPLE_SECS,
    );
    let schema = file_config.sensor_schema()?;
    let load = load_sensor_csv(&args.sensors, &schema)?;
    let stations = load_station_csv(&args.stations)?;
    let label = args
        .sensors
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "deployment".into());
    let deployment = Deployment::new(stations, load.records, vec![], label)?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_outputs(&args.out, "", &deployment, resample)?;

    if let Some(calib_path) = &args.calibration {
        let text = std::fs::read_to_string(calib_path).map_err(|e| Error::io(calib_path, e))?;
        let calib = PiecewiseLinearCalib::from_json(&text)?;
        let mut records = deployment.records().to_vec();
        for r in &mut records {
            r.pm25 = apply_calibration(&calib, r.pm25)?;
        }
        let calibrated = Deployment::new(
            deployment.stations().to_vec(),
            records,
            vec![],
            deployment.date_label.clone(),
        )?;
        write_outputs(&args.out, "_calibrated", &calibrated, resample)?;
    }

    let mut manifest = Manifest::new("correlate");
    manifest
        .set("resample_secs", resample)
        .set("records", deployment.records().len() as u64)
        .set("stations", deployment.stations().len() as u64)
        .set("calibrated_variant", args.calibration.is_some())
        .set_path("sensors", &args.sensors);
    manifest.write(&args.out, file_config)?;
    Ok(())
}

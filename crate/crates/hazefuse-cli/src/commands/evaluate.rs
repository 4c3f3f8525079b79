//! `evaluate`: the leave-sensors-out fusion evaluation matrix.

use std::collections::HashMap;
use std::path::PathBuf;

use hazefuse::dataset_io::{
    load_image_manifest, load_sensor_csv, load_station_csv, AltitudeClass, Deployment,
};
use hazefuse::error::{Error, Result};
use hazefuse::experiment::{report, run_matrix, ExperimentConfig, FusionInput};
use hazefuse::regressors::RegressorKind;

use crate::config::{resolve, FileConfig};
use crate::manifest::Manifest;

/// Default alignment window: half the 20-minute image cadence.
const DEFAULT_WINDOW_SECS: i64 = 600;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    sensors: PathBuf,

    #[arg(long)]
    stations: PathBuf,

    /// Image manifest CSV.
    #[arg(long)]
    manifest: PathBuf,

    /// Precomputed features CSV (path,t_dcp,beta_sd). When omitted the
    /// images are decoded and features are extracted here.
    #[arg(long)]
    features: Option<PathBuf>,

    /// Which altitude subset to evaluate.
    #[arg(long)]
    altitude: String,

    /// Comma-separated estimators, e.g. `gbr,rfr,svr`.
    #[arg(long, default_value = "gbr,rfr,svr")]
    models: String,

    /// Sensor counts: a range `0..4` or a list `0,1,2`.
    #[arg(long, default_value = "0..4")]
    n: String,

    /// Image feature usage: `on`, `off`, or `both`.
    #[arg(long, default_value = "both")]
    images: String,

    #[arg(long)]
    reps: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    /// Sensor/image alignment window, seconds.
    #[arg(long)]
    window: Option<i64>,

    #[arg(long)]
    split_fraction: Option<f64>,

    #[arg(long)]
    out: PathBuf,
}

fn parse_image_modes(spec: &str) -> Result<Vec<bool>> {
    match spec.trim().to_ascii_lowercase().as_str() {
        "on" => Ok(vec![true]),
        "off" => Ok(vec![false]),
        "both" => Ok(vec![false, true]),
        other => Err(Error::InvalidConfig(format!(
            "images mode '{other}' (expected on, off, or both)"
        ))),
    }
}

pub fn run(args: Args, file_config: &FileConfig) -> Result<()> {
    let altitude = AltitudeClass::parse(&args.altitude)?;
    let models = args
        .models
        .split(',')
        .map(RegressorKind::parse)
        .collect::<Result<Vec<_>>>()?;
    let sensor_counts = super::parse_counts(&args.n)?;
    let image_modes = parse_image_modes(&args.images)?;
    let reps = resolve(args.reps, file_config.parsed("experiment.repetitions")?, 50);
    let seed = resolve(args.seed, file_config.parsed("seed")?, 0);
    let window = resolve(
        args.window,
        file_config.parsed("align.window_secs")?,
        DEFAULT_WINDOW_SECS,
    );
    let split_fraction = resolve(
        args.split_fraction,
        file_config.parsed("experiment.split_fraction")?,
        0.75,
    );

    let schema = file_config.sensor_schema()?;
    let load = load_sensor_csv(&args.sensors, &schema)?;
    let stations = load_station_csv(&args.stations)?;
    let images = load_image_manifest(&args.manifest, schema.utc_offset_secs)?;
    let deployment = Deployment::new(stations, load.records, images, "evaluate")?;

    // features: precomputed by path, or extracted from the decoded images
    let features_by_image = match &args.features {
        Some(features_path) => {
            let table: HashMap<PathBuf, _> =
                super::features::read_features_csv(features_path)?
                    .into_iter()
                    .collect();
            deployment
                .images()
                .iter()
                .map(|img| table.get(&img.path).copied())
                .collect::<Vec<_>>()
        }
        None => {
            let paths: Vec<PathBuf> =
                deployment.images().iter().map(|i| i.path.clone()).collect();
            let cfg = file_config.patch_config()?;
            super::features::extract_all(&paths, &cfg)?
                .into_iter()
                .map(Some)
                .collect()
        }
    };

    let input = FusionInput::from_deployment(&deployment, &features_by_image, window)?;
    let config = ExperimentConfig {
        altitude_class: altitude,
        models,
        sensor_counts,
        image_modes,
        split_fraction,
        repetitions: reps,
        seed,
    };
    let table = run_matrix(&config, &input)?;
    let written = report(&table, &args.out)?;

    let mut manifest = Manifest::new("evaluate");
    manifest
        .set("altitude", altitude.as_str())
        .set("models", args.models.as_str())
        .set("sensor_counts", args.n.as_str())
        .set("image_modes", args.images.as_str())
        .set("repetitions", reps as u64)
        .set("seed", seed)
        .set("window_secs", window)
        .set("split_fraction", split_fraction)
        .set("aligned_rows", input.rows.len() as u64)
        .set_path("sensors", &args.sensors);
    manifest.write(&args.out, file_config)?;

    for cell in &table.cells {
        println!(
            "{} n={} images={}: mean MAE {:.4}{}",
            cell.model.as_str(),
            cell.n_sensors,
            if cell.use_images { "on" } else { "off" },
            cell.mean_mae,
            cell.pct_change
                .map(|p| format!(" ({p:+.2}% vs baseline)"))
                .unwrap_or_default()
        );
    }
    println!("wrote {} report files under {}", written.len(), args.out.display());
    Ok(())
}

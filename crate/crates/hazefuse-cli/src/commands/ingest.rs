//! `ingest`: parse and validate raw inputs into canonical CSVs.

use std::path::PathBuf;

use hazefuse::dataset_io::{
    load_image_manifest, load_sensor_csv, load_station_csv, write_image_manifest,
    write_sensor_csv, write_station_csv, Deployment,
};
use hazefuse::error::{Error, Result};

use crate::config::FileConfig;
use crate::manifest::Manifest;

#[derive(clap::Args)]
pub struct Args {
    /// Sensor log CSVs (columns configurable via `schema.*` config keys).
    #[arg(long, required = true, num_args = 1..)]
    sensors: Vec<PathBuf>,

    /// Station geometry CSV: station_id,longitude,latitude.
    #[arg(long)]
    stations: PathBuf,

    /// Image manifest CSV: path,timestamp,altitude_class,camera_tag.
    #[arg(long)]
    images: Option<PathBuf>,

    /// Seconds to subtract from source-local timestamps to reach UTC.
    #[arg(long)]
    utc_offset_secs: Option<i64>,

    #[arg(long)]
    date_label: Option<String>,

    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args, file_config: &FileConfig) -> Result<()> {
    let mut schema = file_config.sensor_schema()?;
    if let Some(offset) = args.utc_offset_secs {
        schema.utc_offset_secs = offset;
    }

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for path in &args.sensors {
        let load = load_sensor_csv(path, &schema)?;
        for d in load.rejects {
            rejects.push((path.clone(), d));
        }
        records.extend(load.records);
    }
    let stations = load_station_csv(&args.stations)?;
    let images = match &args.images {
        Some(path) => load_image_manifest(path, schema.utc_offset_secs)?,
        None => Vec::new(),
    };
    let label = args.date_label.clone().unwrap_or_else(|| {
        args.sensors[0]
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "deployment".into())
    });
    let deployment = Deployment::new(stations, records, images, label)?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_sensor_csv(&args.out.join("sensors.csv"), deployment.records())?;
    write_station_csv(&args.out.join("stations.csv"), deployment.stations())?;
    write_image_manifest(&args.out.join("images.csv"), deployment.images())?;

    let rejects_path = args.out.join("rejects.csv");
    {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&rejects_path).map_err(|e| Error::io(&rejects_path, e))?,
        );
        writeln!(w, "source,line,reason").map_err(|e| Error::io(&rejects_path, e))?;
        for (source, d) in &rejects {
            writeln!(w, "{},{},{:?}", source.display(), d.line, d.reason)
                .map_err(|e| Error::io(&rejects_path, e))?;
        }
    }

    let mut manifest = Manifest::new("ingest");
    manifest
        .set("records", deployment.records().len() as u64)
        .set("stations", deployment.stations().len() as u64)
        .set("images", deployment.images().len() as u64)
        .set("rejects", rejects.len() as u64)
        .set("utc_offset_secs", schema.utc_offset_secs)
        .set_path("out", &args.out);
    manifest.write(&args.out, file_config)?;

    println!(
        "ingested {} records from {} files ({} rejected), {} stations, {} images -> {}",
        deployment.records().len(),
        args.sensors.len(),
        rejects.len(),
        deployment.stations().len(),
        deployment.images().len(),
        args.out.display()
    );
    Ok(())
}

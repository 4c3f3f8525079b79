//! `features`: extract per-image haze features into a CSV.

use std::path::PathBuf;

use hazefuse::dataset_io::load_image_manifest;
use hazefuse::error::{Error, Result};
use hazefuse::haze_features::{extract_features, HazeFeatures, ImageRgb, PatchConfig};
use rayon::prelude::*;

use crate::config::FileConfig;
use crate::manifest::Manifest;

#[derive(clap::Args)]
pub struct Args {
    /// Image manifest CSV (path,timestamp,altitude_class,camera_tag).
    #[arg(long, conflicts_with = "img")]
    manifest: Option<PathBuf>,

    /// Individual image files.
    #[arg(long, num_args = 1..)]
    img: Vec<PathBuf>,

    #[arg(long)]
    patch_radius: Option<usize>,

    #[arg(long)]
    omega: Option<f64>,

    #[arg(long)]
    bright_fraction: Option<f64>,

    #[arg(long)]
    out: PathBuf,
}

fn patch_config(args: &Args, file_config: &FileConfig) -> Result<PatchConfig> {
    let mut cfg = file_config.patch_config()?;
    if let Some(v) = args.patch_radius {
        cfg.patch_radius = v;
    }
    if let Some(v) = args.omega {
        cfg.omega = v;
    }
    if let Some(v) = args.bright_fraction {
        cfg.bright_fraction = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Extract features for a list of images, in input order.
pub fn extract_all(paths: &[PathBuf], cfg: &PatchConfig) -> Result<Vec<HazeFeatures>> {
    paths
        .par_iter()
        .map(|path| extract_features(&ImageRgb::open(path)?, cfg))
        .collect()
}

pub fn write_features_csv(
    path: &std::path::Path,
    rows: &[(PathBuf, HazeFeatures)],
) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    writeln!(w, "path,t_dcp,beta_sd").map_err(|e| Error::io(path, e))?;
    for (img, f) in rows {
        writeln!(w, "{},{},{}", img.display(), f.t_dcp, f.beta_sd)
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a features CSV back into (path, features) pairs.
pub fn read_features_csv(path: &std::path::Path) -> Result<Vec<(PathBuf, HazeFeatures)>> {
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
    let (i_path, i_t, i_b) = (col("path")?, col("t_dcp")?, col("beta_sd")?);
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::InvalidValue(format!("unparseable feature value '{s}'")))
        };
        out.push((
            PathBuf::from(&row[i_path]),
            HazeFeatures {
                t_dcp: parse(&row[i_t])?,
                beta_sd: parse(&row[i_b])?,
            },
        ));
    }
    Ok(out)
}

pub fn run(args: Args, file_config: &FileConfig) -> Result<()> {
    let cfg = patch_config(&args, file_config)?;
    let paths: Vec<PathBuf> = match &args.manifest {
        Some(manifest) => load_image_manifest(manifest, 0)?
            .into_iter()
            .map(|r| r.path)
            .collect(),
        None => args.img.clone(),
    };
    if paths.is_empty() {
        return Err(Error::InvalidConfig(
            "no images given: pass --manifest or --img".into(),
        ));
    }

    let features = extract_all(&paths, &cfg)?;
    let rows: Vec<(PathBuf, HazeFeatures)> = paths.into_iter().zip(features).collect();

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let csv_path = args.out.join("features.csv");
    write_features_csv(&csv_path, &rows)?;

    let mut manifest = Manifest::new("features");
    manifest
        .set("images", rows.len() as u64)
        .set("patch_radius", cfg.patch_radius as u64)
        .set("omega", cfg.omega)
        .set("bright_fraction", cfg.bright_fraction);
    manifest.write(&args.out, file_config)?;

    println!("extracted features for {} images -> {}", rows.len(), csv_path.display());
    Ok(())
}

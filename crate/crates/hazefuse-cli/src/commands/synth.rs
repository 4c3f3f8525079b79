//! `synth`: scenes and fields with known ground truth, so the whole pipeline
//! runs without the real dataset.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use hazefuse::dataset_io::{
    reference_stations, write_image_manifest, write_sensor_csv, write_station_csv, AltitudeClass,
};
use hazefuse::error::{Error, Result};
use hazefuse::synthetic::{
    build_synthetic_deployment, generate_field, generate_scene, render_hazy, FieldConfig,
    SceneConfig, SpatialKernel,
};

use crate::config::{resolve, FileConfig};
use crate::manifest::Manifest;

#[derive(clap::Args)]
pub struct Args {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(clap::Subcommand)]
enum Mode {
    /// Render one scene at several haze levels and record the true β values.
    Render {
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated scattering coefficients.
        #[arg(long, default_value = "0.1,0.3,0.5,0.8,1.2")]
        betas: String,
        #[arg(long, default_value_t = 96)]
        width: usize,
        #[arg(long, default_value_t = 72)]
        height: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a correlated sensor field with rendered images, written in
    /// the same CSV formats `ingest` produces.
    Field {
        #[arg(long)]
        seed: Option<u64>,
        /// Number of stations from the published geometry (2..=10).
        #[arg(long, default_value_t = 10)]
        stations: usize,
        /// Field length in time steps.
        #[arg(long, default_value_t = 7200)]
        samples: usize,
        /// Seconds between sensor readings.
        #[arg(long, default_value_t = 1)]
        cadence: i64,
        /// Correlation decay length, km.
        #[arg(long, default_value_t = 0.5)]
        decay_km: f64,
        /// Spatial covariance kernel: `exp` or `sqexp`.
        #[arg(long, default_value = "exp")]
        kernel: String,
        /// Seconds between rendered images.
        #[arg(long, default_value_t = 1200)]
        image_every: i64,
        #[arg(long, default_value = "high")]
        altitude: String,
        /// Mean PM2.5 level, µg/m³.
        #[arg(long, default_value_t = 50.0)]
        mean_level: f64,
        #[arg(long, default_value_t = 10.0)]
        shared_amplitude: f64,
        #[arg(long, default_value_t = 8.0)]
        spatial_amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_amplitude: f64,
        /// Scattering coefficient per µg/m³ of mean concentration.
        #[arg(long, default_value_t = 0.01)]
        beta_per_concentration: f64,
        #[arg(long, default_value_t = 96)]
        scene_width: usize,
        #[arg(long, default_value_t = 72)]
        scene_height: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_kernel(spec: &str) -> Result<SpatialKernel> {
    match spec.trim().to_ascii_lowercase().as_str() {
        "exp" | "exponential" => Ok(SpatialKernel::Exponential),
        "sqexp" | "squared_exponential" => Ok(SpatialKernel::SquaredExponential),
        other => Err(Error::InvalidConfig(format!(
            "kernel '{other}' (expected exp or sqexp)"
        ))),
    }
}

fn write_beta_truth(path: &Path, rows: &[(i64, f64)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    writeln!(w, "timestamp,beta_true").map_err(|e| Error::io(path, e))?;
    for (t, beta) in rows {
        writeln!(w, "{t},{beta}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn run(args: Args, file_config: &FileConfig) -> Result<()> {
    match args.mode {
        Mode::Render {
            seed,
            betas,
            width,
            height,
            out,
        } => {
            let seed = resolve(seed, file_config.parsed("seed")?, 0);
            let betas = super::parse_floats(&betas)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let scene = generate_scene(&SceneConfig {
                width,
                height,
                seed,
            })?;
            let truth_path = out.join("truth.csv");
            let mut w = std::io::BufWriter::new(
                std::fs::File::create(&truth_path).map_err(|e| Error::io(&truth_path, e))?,
            );
            writeln!(w, "path,beta_true").map_err(|e| Error::io(&truth_path, e))?;
            for (i, &beta) in betas.iter().enumerate() {
                let path = out.join(format!("scene_{i:02}.png"));
                render_hazy(&scene.with_beta(beta)?).save_png(&path)?;
                writeln!(w, "{},{beta}", path.display()).map_err(|e| Error::io(&truth_path, e))?;
            }
            w.flush().map_err(|e| Error::io(&truth_path, e))?;

            let mut manifest = Manifest::new("synth-render");
            manifest
                .set("seed", seed)
                .set("scenes", betas.len() as u64)
                .set("width", width as u64)
                .set("height", height as u64);
            manifest.write(&out, file_config)?;
            println!("rendered {} scenes -> {}", betas.len(), out.display());
            Ok(())
        }
        Mode::Field {
            seed,
            stations,
            samples,
            cadence,
            decay_km,
            kernel,
            image_every,
            altitude,
            mean_level,
            shared_amplitude,
            spatial_amplitude,
            noise_amplitude,
            beta_per_concentration,
            scene_width,
            scene_height,
            out,
        } => {
            let seed = resolve(seed, file_config.parsed("seed")?, 0);
            let altitude = AltitudeClass::parse(&altitude)?;
            let kernel = parse_kernel(&kernel)?;
            let all = reference_stations();
            if stations < 2 || stations > all.len() {
                return Err(Error::InvalidConfig(format!(
                    "stations must be in 2..={}, got {stations}",
                    all.len()
                )));
            }
            let geometry: Vec<_> = all.into_iter().take(stations).collect();
            let field_cfg = FieldConfig {
                n_samples: samples,
                cadence_secs: cadence,
                mean_level,
                shared_amplitude,
                spatial_amplitude,
                noise_amplitude,
                beta_per_concentration,
                kernel,
                ..Default::default()
            };
            let field = generate_field(&geometry, decay_km, seed, &field_cfg)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let synth = build_synthetic_deployment(
                &field,
                &SceneConfig {
                    width: scene_width,
                    height: scene_height,
                    seed,
                },
                &out.join("images"),
                image_every,
                altitude,
                "synthetic",
            )?;

            write_sensor_csv(&out.join("sensors.csv"), synth.deployment.records())?;
            write_station_csv(&out.join("stations.csv"), synth.deployment.stations())?;
            write_image_manifest(&out.join("images.csv"), synth.deployment.images())?;
            write_beta_truth(&out.join("truth_beta.csv"), &synth.image_beta)?;

            let mut manifest = Manifest::new("synth-field");
            manifest
                .set("seed", seed)
                .set("stations", stations as u64)
                .set("samples", samples as u64)
                .set("cadence_secs", cadence)
                .set("decay_km", decay_km)
                .set("image_every_secs", image_every)
                .set("images", synth.deployment.images().len() as u64)
                .set("altitude", altitude.as_str());
            manifest.write(&out, file_config)?;

            println!(
                "generated {} records over {} stations with {} images -> {}",
                synth.deployment.records().len(),
                stations,
                synth.deployment.images().len(),
                out.display()
            );
            Ok(())
        }
    }
}

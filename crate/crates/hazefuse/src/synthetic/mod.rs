//! Forward-rendered hazy scenes and correlated sensor fields.
//!
//! The renderer composes `I = J·t + A·(1−t)` with `t = exp(−β·d)` per pixel,
//! which is the exact inverse problem of the feature extractor: rendering a
//! scene ladder with increasing β must yield monotonically increasing
//! `beta_sd` estimates. Sensor fields get a planted distance-decaying
//! correlation structure via a Gaussian process over the station geometry,
//! plus an optional smooth shared trend, so the whole estimation pipeline can
//! be exercised and verified without the real dataset.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset_io::{
    pairwise_distance, AltitudeClass, Deployment, GeoPoint, ImageRecord, SensorRecord, StationId,
};
use crate::error::{Error, Result};
use crate::haze_features::{AtmosphericLight, ImageRgb};
use crate::seed;

const SEED_TAG_SCENE: u64 = 0x5ce0;
const SEED_TAG_FIELD: u64 = 0xf1e1;

/// Scene radiance, per-pixel depth, true scattering, and airlight.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub radiance: ImageRgb,
    pub depth: Vec<f32>,
    pub beta_true: f64,
    pub atmospheric: AtmosphericLight,
}

impl SyntheticScene {
    pub fn new(
        radiance: ImageRgb,
        depth: Vec<f32>,
        beta_true: f64,
        atmospheric: AtmosphericLight,
    ) -> Result<Self> {
        if depth.len() != radiance.width() * radiance.height() {
            return Err(Error::InvalidValue(format!(
                "depth map length {} != {} pixels",
                depth.len(),
                radiance.width() * radiance.height()
            )));
        }
        if depth.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidValue("depth must be nonnegative".into()));
        }
        if !beta_true.is_finite() || beta_true < 0.0 {
            return Err(Error::InvalidValue(format!(
                "beta_true {beta_true} must be nonnegative"
            )));
        }
        Ok(SyntheticScene {
            radiance,
            depth,
            beta_true,
            atmospheric,
        })
    }

    /// Same scene with a different haze level.
    pub fn with_beta(&self, beta_true: f64) -> Result<Self> {
        Self::new(
            self.radiance.clone(),
            self.depth.clone(),
            beta_true,
            self.atmospheric,
        )
    }
}

/// Geometry of a generated radiance texture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            width: 96,
            height: 72,
            seed: 0,
        }
    }
}

/// Seeded band-limited noise plus geometric shapes. Dark rectangles are
/// stamped in so haze-free patches contain near-zero channels, and bright
/// spots keep the scene from being flat.
pub fn generate_scene(cfg: &SceneConfig) -> Result<SyntheticScene> {
    let (w, h) = (cfg.width, cfg.height);
    if w < 8 || h < 8 {
        return Err(Error::InvalidConfig(format!(
            "scene must be at least 8x8, got {w}x{h}"
        )));
    }
    let mut rng = seed::rng(cfg.seed, &[SEED_TAG_SCENE]);

    // coarse random lattice, bilinearly upsampled per channel
    let cell = 8usize;
    let gw = w / cell + 2;
    let gh = h / cell + 2;
    let lattice: Vec<[f32; 3]> = (0..gw * gh)
        .map(|_| [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()])
        .collect();
    let sample = |gx: usize, gy: usize, c: usize| lattice[gy * gw + gx][c];

    let mut data = vec![0.0f32; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let fx = x as f32 / cell as f32;
            let fy = y as f32 / cell as f32;
            let (x0, y0) = (fx as usize, fy as usize);
            let (tx, ty) = (fx - x0 as f32, fy - y0 as f32);
            for c in 0..3 {
                let top = sample(x0, y0, c) * (1.0 - tx) + sample(x0 + 1, y0, c) * tx;
                let bot = sample(x0, y0 + 1, c) * (1.0 - tx) + sample(x0 + 1, y0 + 1, c) * tx;
                let v = top * (1.0 - ty) + bot * ty;
                data[(y * w + x) * 3 + c] = 0.08 + 0.72 * v;
            }
        }
    }

    // dark and bright rectangles
    let mut stamp = |value: f32, rng: &mut rand_chacha::ChaCha8Rng| {
        let rw = rng.random_range(w / 12..w / 4);
        let rh = rng.random_range(h / 12..h / 4);
        let x0 = rng.random_range(0..w - rw);
        let y0 = rng.random_range(0..h - rh);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                for c in 0..3 {
                    data[(y * w + x) * 3 + c] = value;
                }
            }
        }
    };
    for _ in 0..4 {
        stamp(0.02, &mut rng);
    }
    for _ in 0..2 {
        stamp(0.92, &mut rng);
    }

    let radiance = ImageRgb::new(w, h, data)?;
    let depth = vec![1.0f32; w * h];
    SyntheticScene::new(
        radiance,
        depth,
        0.0,
        AtmosphericLight::new(1.0, 1.0, 1.0)?,
    )
}

/// Compose the atmospheric model over the scene: per pixel
/// `I = J·e^{−β·d} + A·(1 − e^{−β·d})`, clamped to `[0, 1]`.
pub fn render_hazy(scene: &SyntheticScene) -> ImageRgb {
    let (w, h) = (scene.radiance.width(), scene.radiance.height());
    let mut data = Vec::with_capacity(w * h * 3);
    for (i, px) in scene.radiance.data().chunks_exact(3).enumerate() {
        let t = (-scene.beta_true * scene.depth[i] as f64).exp();
        for (c, &j) in px.iter().enumerate() {
            let a = scene.atmospheric.channel(c);
            let v = j as f64 * t + a * (1.0 - t);
            data.push(v.clamp(0.0, 1.0) as f32);
        }
    }
    ImageRgb::new(w, h, data).expect("render stays in bounds")
}

/// Spatial covariance kernel for the correlated component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialKernel {
    /// `exp(−d/L)`: rough field, nearly Markov between stations.
    Exponential,
    /// `exp(−(d/L)²)`: smooth field, every neighbor adds information.
    SquaredExponential,
}

impl SpatialKernel {
    fn correlation(self, d_km: f64, decay_km: f64) -> f64 {
        let r = d_km / decay_km;
        match self {
            SpatialKernel::Exponential => (-r).exp(),
            SpatialKernel::SquaredExponential => (-r * r).exp(),
        }
    }
}

/// Configuration for a generated sensor field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub n_samples: usize,
    pub cadence_secs: i64,
    pub start_timestamp: i64,
    /// Mean PM2.5 level, µg/m³.
    pub mean_level: f64,
    /// Amplitude of the slow trend shared by every station.
    pub shared_amplitude: f64,
    /// Amplitude of the distance-correlated spatial component.
    pub spatial_amplitude: f64,
    /// Amplitude of per-station iid noise.
    pub noise_amplitude: f64,
    /// Scattering coefficient per µg/m³ of mean concentration.
    pub beta_per_concentration: f64,
    pub kernel: SpatialKernel,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            n_samples: 3_600,
            cadence_secs: 1,
            start_timestamp: 0,
            mean_level: 50.0,
            shared_amplitude: 10.0,
            spatial_amplitude: 8.0,
            noise_amplitude: 1.0,
            beta_per_concentration: 0.01,
            kernel: SpatialKernel::Exponential,
        }
    }
}

/// A generated field: station geometry, the full sensor log, and the true
/// scattering coefficient per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticField {
    pub stations: Vec<(StationId, GeoPoint)>,
    pub records: Vec<SensorRecord>,
    /// `(timestamp, beta)` per time step, β proportional to the mean
    /// concentration across stations.
    pub beta_by_timestamp: Vec<(i64, f64)>,
}

/// Cholesky factor of a symmetric positive-semidefinite matrix. Pivots close
/// to zero are treated as exactly zero, so rank-deficient kernels (decay
/// length far beyond the station extent) factor cleanly.
fn cholesky(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s < -1e-9 {
                    return Err(Error::InvalidValue(
                        "station covariance is not positive semidefinite".into(),
                    ));
                }
                l[i][j] = if s <= 1e-12 { 0.0 } else { s.sqrt() };
            } else {
                l[i][j] = if l[j][j] == 0.0 { 0.0 } else { s / l[j][j] };
            }
        }
    }
    Ok(l)
}

/// Generate a correlated field over the given stations. Correlation between
/// stations decays as `exp(−distance/decay_length)`.
pub fn generate_field(
    stations: &[(StationId, GeoPoint)],
    decay_length_km: f64,
    seed: u64,
    cfg: &FieldConfig,
) -> Result<SyntheticField> {
    if decay_length_km.is_nan() || decay_length_km <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "decay length {decay_length_km} must be positive"
        )));
    }
    if stations.is_empty() || cfg.n_samples == 0 {
        return Err(Error::InsufficientData(
            "need at least one station and one sample".into(),
        ));
    }
    let n = stations.len();
    let mut cov = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let d_km = pairwise_distance(stations[i].1, stations[j].1) / 1000.0;
            cov[i][j] = cfg.kernel.correlation(d_km, decay_length_km);
        }
    }
    let chol = cholesky(&cov)?;

    let mut rng = seed::rng(seed, &[SEED_TAG_FIELD]);
    // smooth shared trend: two seeded sinusoids
    let period_a = 1_800.0 + rng.random::<f64>() * 3_600.0;
    let period_b = 300.0 + rng.random::<f64>() * 600.0;
    let phase_a = rng.random::<f64>() * std::f64::consts::TAU;
    let phase_b = rng.random::<f64>() * std::f64::consts::TAU;

    let mut records = Vec::with_capacity(n * cfg.n_samples);
    let mut beta_by_timestamp = Vec::with_capacity(cfg.n_samples);
    let mut z = vec![0.0f64; n];
    for step in 0..cfg.n_samples {
        let t = cfg.start_timestamp + step as i64 * cfg.cadence_secs;
        let secs = (t - cfg.start_timestamp) as f64;
        let trend = 0.6 * (std::f64::consts::TAU * secs / period_a + phase_a).sin()
            + 0.4 * (std::f64::consts::TAU * secs / period_b + phase_b).sin();
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mut mean_accum = 0.0;
        for k in 0..n {
            let spatial: f64 = (0..=k).map(|j| chol[k][j] * z[j]).sum();
            let noise: f64 = if cfg.noise_amplitude > 0.0 {
                let e: f64 = StandardNormal.sample(&mut rng);
                cfg.noise_amplitude * e
            } else {
                0.0
            };
            let pm25 = (cfg.mean_level
                + cfg.shared_amplitude * trend
                + cfg.spatial_amplitude * spatial
                + noise)
                .max(0.0);
            mean_accum += pm25;
            records.push(SensorRecord {
                station: stations[k].0,
                timestamp: t,
                pm25,
                pm10: pm25 * 1.6,
                temperature_c: 22.0 + 4.0 * trend,
                humidity_rh: (55.0 + 12.0 * trend).clamp(0.0, 100.0),
            });
        }
        let beta = cfg.beta_per_concentration * mean_accum / n as f64;
        beta_by_timestamp.push((t, beta.max(0.0)));
    }

    Ok(SyntheticField {
        stations: stations.to_vec(),
        records,
        beta_by_timestamp,
    })
}

/// A field packaged with rendered images: ready for the full pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDeployment {
    pub deployment: Deployment,
    /// True β for each rendered image, by timestamp.
    pub image_beta: Vec<(i64, f64)>,
}

/// Render one image every `image_cadence_secs` of the field into `image_dir`
/// and assemble a full deployment around them.
#[allow(clippy::too_many_arguments)]
pub fn build_synthetic_deployment(
    field: &SyntheticField,
    scene_cfg: &SceneConfig,
    image_dir: &Path,
    image_cadence_secs: i64,
    altitude_class: AltitudeClass,
    date_label: &str,
) -> Result<SyntheticDeployment> {
    if image_cadence_secs <= 0 {
        return Err(Error::InvalidConfig(
            "image cadence must be positive".into(),
        ));
    }
    std::fs::create_dir_all(image_dir).map_err(|e| Error::io(image_dir, e))?;
    let scene = generate_scene(scene_cfg)?;

    let mut images = Vec::new();
    let mut image_beta = Vec::new();
    let mut next_capture = field.beta_by_timestamp.first().map(|&(t, _)| t);
    for &(t, beta) in &field.beta_by_timestamp {
        match next_capture {
            Some(due) if t >= due => {
                let path: PathBuf = image_dir.join(format!("synth_{t}.png"));
                render_hazy(&scene.with_beta(beta)?).save_png(&path)?;
                images.push(ImageRecord {
                    path,
                    timestamp: t,
                    altitude_class,
                    camera_tag: "synthetic".into(),
                });
                image_beta.push((t, beta));
                next_capture = Some(due + image_cadence_secs);
            }
            _ => {}
        }
    }

    let deployment = Deployment::new(
        field.stations.clone(),
        field.records.clone(),
        images,
        date_label,
    )?;
    Ok(SyntheticDeployment {
        deployment,
        image_beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haze_features::{
        extract_features, transmission_map, AtmosphericLight, PatchConfig,
    };
    use crate::spatial_stats;

    fn test_scene(seed: u64) -> SyntheticScene {
        generate_scene(&SceneConfig {
            width: 64,
            height: 48,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn zero_beta_renders_radiance_exactly() {
        let scene = test_scene(1);
        let out = render_hazy(&scene);
        assert_eq!(out.data(), scene.radiance.data());
    }

    #[test]
    fn infinite_haze_renders_airlight_everywhere() {
        let scene = test_scene(2).with_beta(1e6).unwrap();
        let out = render_hazy(&scene);
        for px in out.data().chunks_exact(3) {
            assert!((px[0] - 1.0).abs() < 1e-6);
            assert!((px[1] - 1.0).abs() < 1e-6);
            assert!((px[2] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn uniform_dark_scene_renders_expected_level() {
        // J = 0, A = 1, d = 1, β = 0.5 → every pixel 1 − e^{−0.5}
        let radiance = ImageRgb::new(16, 16, vec![0.0; 16 * 16 * 3]).unwrap();
        let scene = SyntheticScene::new(
            radiance,
            vec![1.0; 256],
            0.5,
            AtmosphericLight::new(1.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let out = render_hazy(&scene);
        let expected = 1.0 - (-0.5f64).exp();
        for &v in out.data() {
            assert!((v as f64 - expected).abs() < 1e-7, "{v} vs {expected}");
        }
    }

    #[test]
    fn airlight_equal_to_radiance_gives_floor_transmission() {
        let radiance = ImageRgb::new(20, 20, vec![0.7; 20 * 20 * 3]).unwrap();
        let scene = SyntheticScene::new(
            radiance,
            vec![1.0; 400],
            0.8,
            AtmosphericLight::new(0.7, 0.7, 0.7).unwrap(),
        )
        .unwrap();
        let rendered = render_hazy(&scene);
        let cfg = PatchConfig::default();
        let tmap = transmission_map(&rendered, &scene.atmospheric, &cfg).unwrap();
        for &v in tmap.data() {
            assert!((v as f64 - (1.0 - cfg.omega)).abs() < 1e-6);
        }
    }

    #[test]
    fn known_transmission_recovered_from_dark_render() {
        // dark radiance, uniform depth, β = −ln 0.3 so t = 0.3 exactly,
        // airlight (1,1,1): the recovered mean transmission must sit at
        // 1 − ω·(1 − t) up to the small radiance leakage J·t
        use rand::Rng;
        let mut rng = crate::seed::rng(9, &[0xda4c]);
        let radiance = ImageRgb::new(
            64,
            48,
            (0..64 * 48 * 3).map(|_| rng.random::<f32>() * 0.05).collect(),
        )
        .unwrap();
        let scene = SyntheticScene::new(
            radiance,
            vec![1.0; 64 * 48],
            -(0.3f64).ln(),
            AtmosphericLight::new(1.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let rendered = render_hazy(&scene);
        let cfg = PatchConfig::default();
        let tmap = transmission_map(&rendered, &scene.atmospheric, &cfg).unwrap();
        let t_dcp = crate::haze_features::mean_transmission(&tmap);
        let expected = 1.0 - cfg.omega * (1.0 - 0.3);
        assert!(
            (t_dcp - expected).abs() < 0.01,
            "recovered {t_dcp} vs expected {expected}"
        );
    }

    #[test]
    fn beta_ladder_recovers_monotone_estimates() {
        let scene = test_scene(3);
        let cfg = PatchConfig::default();
        let mut last = f64::NEG_INFINITY;
        for beta in [0.1, 0.3, 0.5, 0.8, 1.2] {
            let rendered = render_hazy(&scene.with_beta(beta).unwrap());
            let features = extract_features(&rendered, &cfg).unwrap();
            assert!(
                features.beta_sd > last,
                "beta_sd not strictly increasing at beta={beta}: {} <= {last}",
                features.beta_sd
            );
            last = features.beta_sd;
        }
    }

    fn grid_stations(n: usize, spacing_deg: f64) -> Vec<(StationId, GeoPoint)> {
        (0..n)
            .map(|i| {
                (
                    StationId::new(i as u8 + 1).unwrap(),
                    GeoPoint::new(120.0 + spacing_deg * i as f64, 30.0).unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn huge_decay_length_gives_identical_series() {
        let stations = grid_stations(4, 0.002);
        let cfg = FieldConfig {
            n_samples: 200,
            noise_amplitude: 0.0,
            ..Default::default()
        };
        let field = generate_field(&stations, f64::INFINITY, 7, &cfg).unwrap();
        let mut per_station: Vec<Vec<f64>> = vec![vec![]; 4];
        for r in &field.records {
            per_station[r.station.index() as usize - 1].push(r.pm25);
        }
        for k in 1..4 {
            for (a, b) in per_station[0].iter().zip(&per_station[k]) {
                assert_eq!(a, b);
            }
        }
        // large but finite decay length: still nearly identical
        let field = generate_field(&stations, 1e6, 7, &cfg).unwrap();
        let mut per_station: Vec<Vec<f64>> = vec![vec![]; 4];
        for r in &field.records {
            per_station[r.station.index() as usize - 1].push(r.pm25);
        }
        for k in 1..4 {
            for (a, b) in per_station[0].iter().zip(&per_station[k]) {
                assert!((a - b).abs() < 0.1);
            }
        }
    }

    #[test]
    fn distant_stations_decorrelate() {
        // two stations ~111 km apart with a 1 km decay length, no shared trend
        let stations = vec![
            (StationId::new(1).unwrap(), GeoPoint::new(120.0, 30.0).unwrap()),
            (StationId::new(2).unwrap(), GeoPoint::new(121.0, 30.0).unwrap()),
        ];
        let cfg = FieldConfig {
            n_samples: 10_000,
            shared_amplitude: 0.0,
            noise_amplitude: 0.0,
            ..Default::default()
        };
        let field = generate_field(&stations, 1.0, 11, &cfg).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for r in &field.records {
            if r.station.index() == 1 {
                a.push(r.pm25);
            } else {
                b.push(r.pm25);
            }
        }
        let rho = spatial_stats::pearson(&a, &b).unwrap();
        assert!(rho.abs() < 0.05, "expected near-zero correlation, got {rho}");
    }

    #[test]
    fn reference_geometry_field_recovers_negative_distance_slope() {
        let stations = crate::dataset_io::reference_stations();
        let cfg = FieldConfig {
            n_samples: 4_000,
            shared_amplitude: 0.0,
            spatial_amplitude: 10.0,
            noise_amplitude: 0.0,
            ..Default::default()
        };
        let field = generate_field(&stations, 0.6, 13, &cfg).unwrap();
        let deployment =
            Deployment::new(field.stations.clone(), field.records, vec![], "synth").unwrap();
        let matrix = spatial_stats::correlation_matrix(&deployment, 60).unwrap();
        // matrix invariants hold on generated data
        for i in 0..matrix.len() {
            assert_eq!(matrix.value(i, i), Some(1.0));
            for j in 0..matrix.len() {
                assert_eq!(matrix.value(i, j), matrix.value(j, i));
                if let Some(v) = matrix.value(i, j) {
                    assert!((-1.0..=1.0).contains(&v));
                }
            }
        }
        let fit =
            spatial_stats::fit_correlation_vs_distance(&matrix, &deployment.distance_matrix())
                .unwrap();
        assert!(fit.slope_per_km < 0.0, "slope {}", fit.slope_per_km);
    }

    #[test]
    fn field_is_reproducible_under_seed() {
        let stations = grid_stations(3, 0.003);
        let cfg = FieldConfig {
            n_samples: 100,
            ..Default::default()
        };
        let a = generate_field(&stations, 0.5, 42, &cfg).unwrap();
        let b = generate_field(&stations, 0.5, 42, &cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_field(&stations, 0.5, 43, &cfg).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_deployment_renders_and_aligns() {
        let dir = tempfile::tempdir().unwrap();
        let stations = grid_stations(3, 0.002);
        let cfg = FieldConfig {
            n_samples: 600,
            cadence_secs: 1,
            ..Default::default()
        };
        let field = generate_field(&stations, 0.5, 5, &cfg).unwrap();
        let synth = build_synthetic_deployment(
            &field,
            &SceneConfig {
                width: 48,
                height: 36,
                seed: 5,
            },
            dir.path(),
            120,
            AltitudeClass::High,
            "synth",
        )
        .unwrap();
        assert_eq!(synth.deployment.images().len(), 5); // t = 0, 120, 240, 360, 480
        let aligned = synth.deployment.align_images_to_sensors(60).unwrap();
        assert_eq!(aligned.aligned.len(), 5);
        assert!(aligned.excluded.is_empty());
        for img in synth.deployment.images() {
            assert!(img.path.exists());
        }
    }
}

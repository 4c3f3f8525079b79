//! Leave-sensors-out evaluation protocol.
//!
//! Every station takes a turn as the estimation target: its own readings are
//! withheld and the estimator sees the n nearest other stations (ordered by
//! the deployment's distance matrix) plus, optionally, the image feature for
//! the altitude class under test. Samples from all targets are pooled, split
//! 75/25 by image timestamp (samples sharing a timestamp stay together so no
//! instant leaks across the split), and each cell of the
//! (model × n × images) matrix reports test MAE over seeded repetitions.
//! The n=0 no-image cell is the cross-station mean baseline.

mod ks;
mod report;

pub use ks::{ks_two_sample, KS_SIGNIFICANCE};
pub use report::report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{distance_matrix, AltitudeClass, Deployment, GeoPoint, StationId};
use crate::error::{Error, Result};
use crate::haze_features::HazeFeatures;
use crate::regressors::{self, FeatureMatrix, RegressorKind};
use crate::seed;

const SEED_TAG_SPLIT: u64 = 0x3711;
const SEED_TAG_FIT: u64 = 0x0f17;

/// One aligned observation: an image's features plus per-station mean PM2.5
/// around its timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedRow {
    pub timestamp: i64,
    pub altitude_class: AltitudeClass,
    pub features: HazeFeatures,
    pub pm25_by_station: Vec<Option<f64>>,
}

/// Input to the experiment matrix: station geometry plus aligned rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionInput {
    pub stations: Vec<(StationId, GeoPoint)>,
    pub rows: Vec<AlignedRow>,
}

impl FusionInput {
    /// Join a deployment's alignment with per-image features.
    /// `features_by_image` is indexed like `deployment.images()`; images
    /// without features are skipped.
    pub fn from_deployment(
        deployment: &Deployment,
        features_by_image: &[Option<HazeFeatures>],
        window_secs: i64,
    ) -> Result<Self> {
        if features_by_image.len() != deployment.images().len() {
            return Err(Error::LengthMismatch {
                left: features_by_image.len(),
                right: deployment.images().len(),
            });
        }
        let alignment = deployment.align_images_to_sensors(window_secs)?;
        let mut rows = Vec::new();
        for aligned in alignment.aligned {
            if let Some(features) = features_by_image[aligned.image_index] {
                rows.push(AlignedRow {
                    timestamp: aligned.timestamp,
                    altitude_class: deployment.images()[aligned.image_index].altitude_class,
                    features,
                    pm25_by_station: aligned.pm25_by_station,
                });
            }
        }
        Ok(FusionInput {
            stations: deployment.stations().to_vec(),
            rows,
        })
    }
}

/// One pooled sample: a target station at one image timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionSample {
    pub target: StationId,
    pub timestamp: i64,
    /// Readings of the n nearest other stations, ascending distance.
    pub neighbor_readings: Vec<f64>,
    /// `t_dcp` for low-altitude rows, `beta_sd` for high-altitude rows.
    pub image_feature: f64,
    /// Mean over every other station with a reading at this timestamp.
    pub cross_station_mean: f64,
    pub truth: f64,
}

/// Other stations ordered by ascending distance to `target_pos`; ties break
/// toward the lower station index.
fn neighbor_order(distances: &[Vec<f64>], target_pos: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..distances.len()).filter(|&k| k != target_pos).collect();
    order.sort_by(|&a, &b| {
        distances[target_pos][a]
            .partial_cmp(&distances[target_pos][b])
            .expect("distances are finite")
            .then(a.cmp(&b))
    });
    order
}

/// Build the pooled samples for one target station. Rows missing the target,
/// any of the n nearest neighbors, or every other station are dropped.
pub fn build_fusion_dataset(
    input: &FusionInput,
    target: StationId,
    n_sensors: usize,
    altitude_class: AltitudeClass,
) -> Result<Vec<FusionSample>> {
    let n_stations = input.stations.len();
    if n_sensors >= n_stations {
        return Err(Error::InvalidConfig(format!(
            "n={n_sensors} sensors requested with only {n_stations} stations deployed"
        )));
    }
    let target_pos = input
        .stations
        .iter()
        .position(|(id, _)| *id == target)
        .ok_or_else(|| Error::InvalidValue(format!("target {target} not in deployment")))?;
    let distances = distance_matrix(&input.stations);
    let order = neighbor_order(&distances, target_pos);

    let mut samples = Vec::new();
    let mut class_rows = 0usize;
    for row in &input.rows {
        if row.altitude_class != altitude_class {
            continue;
        }
        class_rows += 1;
        let Some(truth) = row.pm25_by_station[target_pos] else {
            continue;
        };
        let neighbor_readings: Vec<f64> = order
            .iter()
            .take(n_sensors)
            .filter_map(|&k| row.pm25_by_station[k])
            .collect();
        if neighbor_readings.len() < n_sensors {
            continue; // a nearest neighbor is missing; drop, never impute
        }
        let others: Vec<f64> = order.iter().filter_map(|&k| row.pm25_by_station[k]).collect();
        if others.is_empty() {
            continue;
        }
        let cross_station_mean = others.iter().sum::<f64>() / others.len() as f64;
        let image_feature = match altitude_class {
            AltitudeClass::Low => row.features.t_dcp,
            AltitudeClass::High => row.features.beta_sd,
        };
        samples.push(FusionSample {
            target,
            timestamp: row.timestamp,
            neighbor_readings,
            image_feature,
            cross_station_mean,
            truth,
        });
    }

    if samples.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no usable {} samples for target {target}: {} aligned rows of that class, {} total rows",
            altitude_class.as_str(),
            class_rows,
            input.rows.len()
        )));
    }
    Ok(samples)
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(&p, &t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

/// Matrix configuration. Defaults mirror the published protocol: all three
/// models, n = 0..4, with and without images, 75/25 splits, 50 repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub altitude_class: AltitudeClass,
    pub models: Vec<RegressorKind>,
    pub sensor_counts: Vec<usize>,
    pub image_modes: Vec<bool>,
    pub split_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(altitude_class: AltitudeClass) -> Self {
        ExperimentConfig {
            altitude_class,
            models: vec![RegressorKind::Gbr, RegressorKind::Rfr, RegressorKind::Svr],
            sensor_counts: (0..=4).collect(),
            image_modes: vec![false, true],
            split_fraction: 0.75,
            repetitions: 50,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split fraction {} outside (0, 1)",
                self.split_fraction
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        if self.models.is_empty() || self.sensor_counts.is_empty() || self.image_modes.is_empty() {
            return Err(Error::InvalidConfig(
                "models, sensor counts, and image modes must be nonempty".into(),
            ));
        }
        Ok(())
    }
}

/// One cell of the result matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultCell {
    pub model: RegressorKind,
    pub n_sensors: usize,
    pub use_images: bool,
    pub mean_mae: f64,
    /// Test MAE of each repetition.
    pub maes: Vec<f64>,
    /// Percentage change of mean MAE against the baseline: the model's n=0
    /// no-image cell for sensor-density rows, the same-n no-image cell for
    /// image rows. Negative means improvement. `None` on baseline cells.
    pub pct_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub altitude_class: AltitudeClass,
    pub repetitions: usize,
    pub seed: u64,
    pub cells: Vec<ResultCell>,
}

impl ResultTable {
    pub fn cell(&self, model: RegressorKind, n: usize, use_images: bool) -> Option<&ResultCell> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.n_sensors == n && c.use_images == use_images)
    }
}

/// Samples for one (target, n) pair, precomputed per sensor count.
struct TargetSamples {
    by_count: Vec<Vec<FusionSample>>, // indexed by position in sensor_counts
}

fn column_names(n_sensors: usize, use_images: bool) -> Vec<String> {
    let mut names: Vec<String> = (1..=n_sensors).map(|k| format!("s{k}")).collect();
    if use_images {
        names.push("img".into());
    }
    names
}

fn sample_features(sample: &FusionSample, use_images: bool) -> Vec<f64> {
    let mut row = sample.neighbor_readings.clone();
    if use_images {
        row.push(sample.image_feature);
    }
    row
}

/// Run the full evaluation matrix.
pub fn run_matrix(config: &ExperimentConfig, input: &FusionInput) -> Result<ResultTable> {
    config.validate()?;
    let max_n = *config.sensor_counts.iter().max().expect("nonempty");
    if max_n >= input.stations.len() {
        return Err(Error::InvalidConfig(format!(
            "sensor count {max_n} needs more than {} stations",
            input.stations.len()
        )));
    }

    // samples per target per sensor count
    let mut per_target: Vec<TargetSamples> = Vec::new();
    for (target, _) in &input.stations {
        let by_count = config
            .sensor_counts
            .iter()
            .map(|&n| build_fusion_dataset(input, *target, n, config.altitude_class))
            .collect::<Result<Vec<_>>>()?;
        per_target.push(TargetSamples { by_count });
    }

    // distinct timestamps of the altitude class under test
    let mut timestamps: Vec<i64> = input
        .rows
        .iter()
        .filter(|r| r.altitude_class == config.altitude_class)
        .map(|r| r.timestamp)
        .collect();
    timestamps.sort_unstable();
    timestamps.dedup();
    if timestamps.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 distinct image timestamps, got {}",
            timestamps.len()
        )));
    }
    let train_count = ((timestamps.len() as f64 * config.split_fraction).floor() as usize)
        .clamp(1, timestamps.len() - 1);

    // per-repetition training timestamp sets, derived from the seed
    let splits: Vec<Vec<i64>> = (0..config.repetitions)
        .map(|rep| {
            use rand::seq::SliceRandom;
            let mut rng = seed::rng(config.seed, &[SEED_TAG_SPLIT, rep as u64]);
            let mut shuffled = timestamps.clone();
            shuffled.shuffle(&mut rng);
            let mut train: Vec<i64> = shuffled[..train_count].to_vec();
            train.sort_unstable();
            train
        })
        .collect();

    // all (model, n, images, repetition) work items
    struct WorkItem {
        model_idx: usize,
        count_idx: usize,
        use_images: bool,
        rep: usize,
    }
    let mut items = Vec::new();
    for model_idx in 0..config.models.len() {
        for count_idx in 0..config.sensor_counts.len() {
            for &use_images in &config.image_modes {
                for rep in 0..config.repetitions {
                    items.push(WorkItem {
                        model_idx,
                        count_idx,
                        use_images,
                        rep,
                    });
                }
            }
        }
    }

    let run_item = |item: &WorkItem| -> Result<f64> {
        let model = config.models[item.model_idx];
        let n_sensors = config.sensor_counts[item.count_idx];
        let train_ts = &splits[item.rep];
        let in_train = |t: i64| train_ts.binary_search(&t).is_ok();

        let mut train_rows = Vec::new();
        let mut train_y = Vec::new();
        let mut test_rows = Vec::new();
        let mut test_y = Vec::new();
        let mut test_baseline = Vec::new();
        for target in &per_target {
            for sample in &target.by_count[item.count_idx] {
                if in_train(sample.timestamp) {
                    train_rows.push(sample_features(sample, item.use_images));
                    train_y.push(sample.truth);
                } else {
                    test_rows.push(sample_features(sample, item.use_images));
                    test_y.push(sample.truth);
                    test_baseline.push(sample.cross_station_mean);
                }
            }
        }
        if test_y.is_empty() || (train_y.is_empty() && !(n_sensors == 0 && !item.use_images)) {
            return Err(Error::InsufficientData(format!(
                "empty split: {} train / {} test samples",
                train_y.len(),
                test_y.len()
            )));
        }

        let pred = if n_sensors == 0 && !item.use_images {
            // no features at all: average the available concentrations
            test_baseline
        } else {
            let names = column_names(n_sensors, item.use_images);
            let x_train = FeatureMatrix::from_rows(names.clone(), &train_rows)?;
            let x_test = FeatureMatrix::from_rows(names, &test_rows)?;
            let fit_seed = seed::derive(
                config.seed,
                &[
                    SEED_TAG_FIT,
                    item.model_idx as u64,
                    n_sensors as u64,
                    item.use_images as u64,
                    item.rep as u64,
                ],
            );
            let fitted = regressors::fit(model, &x_train, &train_y, fit_seed)?;
            fitted.predict(&x_test)?
        };
        mae(&pred, &test_y)
    };

    let maes: Vec<Result<f64>> = items
        .par_iter()
        .map(|item| {
            run_item(item).map_err(|e| {
                Error::InvalidValue(format!(
                    "cell (model={}, n={}, images={}, repetition={}): {e}",
                    config.models[item.model_idx].as_str(),
                    config.sensor_counts[item.count_idx],
                    item.use_images,
                    item.rep
                ))
            })
        })
        .collect();

    // assemble cells in configuration order
    let mut cells = Vec::new();
    let reps = config.repetitions;
    for (flat, chunk) in maes.chunks(reps).enumerate() {
        let item = &items[flat * reps];
        let mut cell_maes = Vec::with_capacity(reps);
        for r in chunk {
            match r {
                Ok(v) => cell_maes.push(*v),
                Err(e) => return Err(Error::InvalidValue(e.to_string())),
            }
        }
        let mean_mae = cell_maes.iter().sum::<f64>() / reps as f64;
        cells.push(ResultCell {
            model: config.models[item.model_idx],
            n_sensors: config.sensor_counts[item.count_idx],
            use_images: item.use_images,
            mean_mae,
            maes: cell_maes,
            pct_change: None,
        });
    }

    let mut table = ResultTable {
        altitude_class: config.altitude_class,
        repetitions: config.repetitions,
        seed: config.seed,
        cells,
    };
    fill_pct_changes(&mut table);
    Ok(table)
}

/// Percentage change `(new − base)/base · 100`; negative = improvement.
pub fn percentage_change(new: f64, base: f64) -> f64 {
    (new - base) / base * 100.0
}

fn fill_pct_changes(table: &mut ResultTable) {
    let lookup: Vec<(RegressorKind, usize, bool, f64)> = table
        .cells
        .iter()
        .map(|c| (c.model, c.n_sensors, c.use_images, c.mean_mae))
        .collect();
    let base_for = |cell: &ResultCell| -> Option<f64> {
        let (want_n, want_img) = if cell.use_images {
            (cell.n_sensors, false)
        } else if cell.n_sensors == 0 {
            return None; // the density baseline itself
        } else {
            (0usize, false)
        };
        lookup
            .iter()
            .find(|(m, n, img, _)| *m == cell.model && *n == want_n && *img == want_img)
            .map(|(_, _, _, mae)| *mae)
    };
    let bases: Vec<Option<f64>> = table.cells.iter().map(base_for).collect();
    for (cell, base) in table.cells.iter_mut().zip(bases) {
        cell.pct_change = base
            .filter(|b| *b > 0.0)
            .map(|b| percentage_change(cell.mean_mae, b));
    }
}

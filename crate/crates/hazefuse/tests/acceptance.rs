//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see every line).
//!
//! Criteria that need the public dataset are gated on the `HVAQ_DATA_DIR`
//! environment variable and print SKIP when it is unset. The directory is
//! expected to hold canonical CSVs produced by `hazefuse ingest`:
//!
//! ```text
//! $HVAQ_DATA_DIR/
//!   oct19/sensors.csv          per-day sensor logs, canonical columns
//!   nov10/sensors.csv
//!   high/sensors.csv  high/stations.csv  high/images.csv   (+ image files)
//!   low/sensors.csv   low/stations.csv   low/images.csv
//!   stations.csv               ten-station geometry
//! ```

// indexed loops are the clearest form for the matrix math in the oracles
#![allow(clippy::needless_range_loop)]

use std::path::{Path, PathBuf};

use hazefuse::calibration::{apply_calibration, PiecewiseLinearCalib};
use hazefuse::dataset_io::{
    distance_matrix, load_image_manifest, load_sensor_csv, load_station_csv,
    published_distances_m, reference_stations, AltitudeClass, Deployment, SensorSchema,
};
use hazefuse::experiment::{
    ks_two_sample, run_matrix, ExperimentConfig, FusionInput, KS_SIGNIFICANCE,
};
use hazefuse::haze_features::{
    dark_channel, estimate_atmospheric_light, extract_features, transmission_map, ImageRgb,
    PatchConfig,
};
use hazefuse::regressors::{
    fit_gbr, fit_svr, fit_tree, FeatureMatrix, GbrConfig, RegressorKind, SvrConfig, TreeParams,
};
use hazefuse::spatial_stats::{factor_correlations, spearman, summary_stats};
use hazefuse::synthetic::{
    build_synthetic_deployment, generate_field, generate_scene, render_hazy, FieldConfig,
    SceneConfig,
};
use hazefuse::{seed, Error};

fn pass(id: u32, summary: &str, detail: &str) {
    println!("[ACCEPTANCE] criterion {id:02} PASS — {summary} ({detail})");
}

fn fail(id: u32, summary: &str, detail: &str) -> ! {
    println!("[ACCEPTANCE] criterion {id:02} FAIL — {summary} ({detail})");
    panic!("criterion {id:02} failed: {summary}: {detail}");
}

fn skip(id: u32, summary: &str) {
    println!(
        "[ACCEPTANCE] criterion {id:02} SKIP — {summary} (set HVAQ_DATA_DIR to the downloaded dataset to run)"
    );
}

fn dataset_dir() -> Option<PathBuf> {
    std::env::var_os("HVAQ_DATA_DIR").map(PathBuf::from)
}

fn rng_image(w: usize, h: usize, master: u64, tag: u64) -> ImageRgb {
    use rand::Rng;
    let mut rng = seed::rng(master, &[tag]);
    ImageRgb::new(w, h, (0..w * h * 3).map(|_| rng.random::<f32>()).collect()).unwrap()
}

#[test]
fn criterion_01_calibration_published_coefficients() {
    let summary = "published calibration at x in {0, 30, 100} gives {16.01, 64.31, 42.48}";
    let calib = PiecewiseLinearCalib::published();
    for (x, expected) in [(0.0, 16.01), (30.0, 64.31), (100.0, 42.48)] {
        let y = apply_calibration(&calib, x).unwrap();
        if (y - expected).abs() > 1e-9 {
            fail(1, summary, &format!("x={x}: got {y}, expected {expected}"));
        }
    }
    pass(1, summary, "exact at f64 precision");
}

#[test]
fn criterion_02_distance_matrix_vs_published_table() {
    let summary = "haversine matrix from published coordinates matches published distances within ±5% for all 45 pairs";
    let computed = distance_matrix(&reference_stations());
    let published = published_distances_m();
    let mut violations = Vec::new();
    for i in 0..10 {
        for j in (i + 1)..10 {
            let rel = (computed[i][j] - published[i][j]) / published[i][j] * 100.0;
            if rel.abs() > 5.0 {
                violations.push(format!(
                    "P{}-P{}: computed {:.1} m vs published {:.0} m ({rel:+.1}%)",
                    i + 1,
                    j + 1,
                    computed[i][j],
                    published[i][j]
                ));
            }
        }
    }
    if violations.is_empty() {
        pass(2, summary, "all 45 pairs within tolerance");
    } else {
        // The published tables are mutually inconsistent: the distances below
        // cannot be reproduced from the published coordinates by any
        // great-circle metric (the haversine itself is verified against an
        // independent law-of-cosines oracle in the dataset_io unit tests).
        fail(
            2,
            summary,
            &format!(
                "{} of 45 pairs deviate beyond ±5%: {}",
                violations.len(),
                violations.join("; ")
            ),
        );
    }
}

struct DatasetPaths {
    root: PathBuf,
}

impl DatasetPaths {
    fn day_deployment(&self, day: &str) -> Result<Deployment, Error> {
        let sensors = load_sensor_csv(
            &self.root.join(day).join("sensors.csv"),
            &SensorSchema::default(),
        )?;
        let stations = load_station_csv(&self.root.join("stations.csv"))?;
        Deployment::new(stations, sensors.records, vec![], day)
    }

    fn subset_input(&self, subset: &str, window: i64) -> Result<FusionInput, Error> {
        let dir = self.root.join(subset);
        let sensors = load_sensor_csv(&dir.join("sensors.csv"), &SensorSchema::default())?;
        let stations = load_station_csv(&dir.join("stations.csv"))?;
        let images = load_image_manifest(&dir.join("images.csv"), 0)?;
        let deployment = Deployment::new(stations, sensors.records, images, subset)?;
        let cfg = PatchConfig::default();
        let features = deployment
            .images()
            .iter()
            .map(|img| {
                let path = if img.path.is_absolute() {
                    img.path.clone()
                } else {
                    dir.join(&img.path)
                };
                extract_features(&ImageRgb::open(&path)?, &cfg).map(Some)
            })
            .collect::<Result<Vec<_>, Error>>()?;
        FusionInput::from_deployment(&deployment, &features, window)
    }
}

#[test]
fn criterion_03_correlation_vs_distance_fit() {
    let summary = "pooled Oct 19 + Nov 10 fit: |slope| ≈ 0.155/km ±20%, R² ≈ 0.421 ±0.1";
    let Some(root) = dataset_dir() else {
        skip(3, summary);
        return;
    };
    let data = DatasetPaths { root };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for day in ["oct19", "nov10"] {
        let deployment = data.day_deployment(day).unwrap();
        let matrix = hazefuse::spatial_stats::correlation_matrix(&deployment, 60).unwrap();
        let distances = deployment.distance_matrix();
        for (i, j, rho) in matrix.present_pairs() {
            xs.push(distances[i][j] / 1000.0);
            ys.push(rho);
        }
    }
    // pooled OLS over both days' (distance, rho) pairs
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|&y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;

    let detail = format!("slope {slope:.4}/km, R² {r2:.4} over {} pairs", xs.len());
    if (slope.abs() - 0.155).abs() > 0.155 * 0.20 {
        fail(3, summary, &detail);
    }
    if (r2 - 0.421).abs() > 0.1 {
        fail(3, summary, &detail);
    }
    pass(3, summary, &detail);
}

#[test]
fn criterion_04_factor_correlations() {
    let summary = "PM2.5–temperature ≈ 0.298 and PM2.5–humidity ≈ 0.306 within ±20%";
    let Some(root) = dataset_dir() else {
        skip(4, summary);
        return;
    };
    let data = DatasetPaths { root };
    let oct = data.day_deployment("oct19").unwrap();
    let nov = data.day_deployment("nov10").unwrap();
    let mut records = oct.records().to_vec();
    records.extend_from_slice(nov.records());
    let merged = Deployment::new(oct.stations().to_vec(), records, vec![], "pooled").unwrap();
    let m = factor_correlations(&merged).unwrap();
    let pm_temp = m[0][1].unwrap();
    let pm_hum = m[0][2].unwrap();
    let detail = format!("PM2.5–temp {pm_temp:.3}, PM2.5–humidity {pm_hum:.3}");
    if (pm_temp - 0.298).abs() > 0.298 * 0.20 || (pm_hum - 0.306).abs() > 0.306 * 0.20 {
        fail(4, summary, &detail);
    }
    pass(4, summary, &detail);
}

#[test]
fn criterion_05_summary_statistics_oct19() {
    let summary = "Oct 19 PM2.5 statistics: σ ≈ 6.68, range ≈ 22.21, mean ≈ 56.90 within ±5%";
    let Some(root) = dataset_dir() else {
        skip(5, summary);
        return;
    };
    let data = DatasetPaths { root };
    let deployment = data.day_deployment("oct19").unwrap();
    let pm25: Vec<f64> = deployment.records().iter().map(|r| r.pm25).collect();
    let s = summary_stats(&pm25).unwrap();
    let detail = format!("σ {:.3}, range {:.3}, mean {:.3}", s.std_dev, s.range, s.mean);
    for (got, expected) in [(s.std_dev, 6.68), (s.range, 22.21), (s.mean, 56.90)] {
        if (got - expected).abs() > expected * 0.05 {
            fail(5, summary, &detail);
        }
    }
    pass(5, summary, &detail);
}

fn evaluate_subset(data: &DatasetPaths, subset: &str, altitude: AltitudeClass) -> ExperimentRun {
    let input = data.subset_input(subset, 600).unwrap();
    let config = ExperimentConfig {
        seed: 2024,
        ..ExperimentConfig::new(altitude)
    };
    let config = ExperimentConfig {
        models: vec![RegressorKind::Gbr],
        ..config
    };
    let table = run_matrix(&config, &input).unwrap();
    ExperimentRun { table }
}

struct ExperimentRun {
    table: hazefuse::experiment::ResultTable,
}

impl ExperimentRun {
    fn mae(&self, n: usize, img: bool) -> f64 {
        self.table
            .cell(RegressorKind::Gbr, n, img)
            .expect("cell present")
            .mean_mae
    }

    fn maes(&self, n: usize, img: bool) -> &[f64] {
        &self
            .table
            .cell(RegressorKind::Gbr, n, img)
            .expect("cell present")
            .maes
    }
}

#[test]
fn criterion_06_07_08_gbr_experiment_matrix() {
    let c6 = "GBR n=0 MAE: high 20.821 → 1.45 with images, low 6.929 → 5.35, ±25%";
    let c7 = "GBR mean MAE nonincreasing in n on both subsets; images help at n=1";
    let c8 = "KS p < 0.10 for images-vs-none in ≥ 7 of the 8 (subset × n) cells";
    let Some(root) = dataset_dir() else {
        skip(6, c6);
        skip(7, c7);
        skip(8, c8);
        return;
    };
    let data = DatasetPaths { root };
    let high = evaluate_subset(&data, "high", AltitudeClass::High);
    let low = evaluate_subset(&data, "low", AltitudeClass::Low);

    // criterion 6
    let checks = [
        ("high n=0 no-image", high.mae(0, false), 20.821),
        ("high n=0 images", high.mae(0, true), 1.45),
        ("low n=0 no-image", low.mae(0, false), 6.929),
        ("low n=0 images", low.mae(0, true), 5.35),
    ];
    let detail: Vec<String> = checks
        .iter()
        .map(|(label, got, want)| format!("{label}: {got:.3} (expected ≈{want})"))
        .collect();
    let detail = detail.join(", ");
    for (_, got, want) in checks {
        if (got - want).abs() > want * 0.25 {
            fail(6, c6, &detail);
        }
    }
    pass(6, c6, &detail);

    // criterion 7
    for (label, run) in [("high", &high), ("low", &low)] {
        let maes: Vec<f64> = (0..=4).map(|n| run.mae(n, false)).collect();
        for w in maes.windows(2) {
            if w[1] > w[0] {
                fail(7, c7, &format!("{label} subset not nonincreasing: {maes:?}"));
            }
        }
        if run.mae(1, true) > run.mae(1, false) {
            fail(
                7,
                c7,
                &format!(
                    "{label} subset: image-augmented n=1 MAE {} > non-image {}",
                    run.mae(1, true),
                    run.mae(1, false)
                ),
            );
        }
    }
    pass(7, c7, "directional checks hold on both subsets");

    // criterion 8
    let mut significant = 0;
    let mut detail = Vec::new();
    for (label, run) in [("high", &high), ("low", &low)] {
        for n in 1..=4usize {
            let (_, p) = ks_two_sample(run.maes(n, false), run.maes(n, true)).unwrap();
            if p < KS_SIGNIFICANCE {
                significant += 1;
            }
            detail.push(format!("{label} n={n}: p={p:.4}"));
        }
    }
    let detail = detail.join(", ");
    if significant < 7 {
        fail(8, c8, &format!("only {significant}/8 significant: {detail}"));
    }
    pass(8, c8, &format!("{significant}/8 significant: {detail}"));
}

// Naive nested-loop oracles, written independently of the library's
// separable filter.
fn dark_channel_oracle(img: &ImageRgb, radius: usize) -> Vec<f32> {
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut m = f32::INFINITY;
            for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                for xx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                    let p = img.pixel(xx, yy);
                    m = m.min(p[0]).min(p[1]).min(p[2]);
                }
            }
            out[y * w + x] = m;
        }
    }
    out
}

#[test]
fn criterion_09_patch_minima_match_naive_oracles() {
    let summary = "dark channel and transmission maps equal naive nested-loop oracles on 30 random 32×32 images";
    let cfg = PatchConfig::default();
    for i in 0..30u64 {
        let img = rng_image(32, 32, 0x09, i);
        let dark = dark_channel(&img, &cfg);
        if dark.data() != dark_channel_oracle(&img, cfg.patch_radius).as_slice() {
            fail(9, summary, &format!("dark channel mismatch on image {i}"));
        }

        let light = estimate_atmospheric_light(&img, &dark, &cfg).unwrap();
        let tmap = transmission_map(&img, &light, &cfg).unwrap();
        // oracle: nested-loop min over capped ratios, then 1 − ω·min
        let (w, h) = (img.width(), img.height());
        for y in 0..h {
            for x in 0..w {
                let mut m = f64::INFINITY;
                for yy in y.saturating_sub(cfg.patch_radius)..=(y + cfg.patch_radius).min(h - 1) {
                    for xx in
                        x.saturating_sub(cfg.patch_radius)..=(x + cfg.patch_radius).min(w - 1)
                    {
                        let p = img.pixel(xx, yy);
                        for c in 0..3 {
                            let ratio =
                                ((p[c] as f64 / light.channel(c)).min(1.0)) as f32;
                            m = m.min(ratio as f64);
                        }
                    }
                }
                let expected = (1.0 - cfg.omega * m) as f32;
                if tmap.value(x, y) != expected {
                    fail(
                        9,
                        summary,
                        &format!("transmission mismatch on image {i} at ({x},{y})"),
                    );
                }
            }
        }
    }
    pass(9, summary, "exact match on all 30 images");
}

#[test]
fn criterion_10_synthetic_haze_ladder_monotone() {
    let summary = "β ladder {0.1, 0.3, 0.5, 0.8, 1.2} yields strictly monotone beta_sd estimates";
    let scene = generate_scene(&SceneConfig {
        width: 96,
        height: 72,
        seed: 10,
    })
    .unwrap();
    let cfg = PatchConfig::default();
    let mut estimates = Vec::new();
    for beta in [0.1, 0.3, 0.5, 0.8, 1.2] {
        let rendered = render_hazy(&scene.with_beta(beta).unwrap());
        estimates.push(extract_features(&rendered, &cfg).unwrap().beta_sd);
    }
    let detail = format!("beta_sd = {estimates:?}");
    for w in estimates.windows(2) {
        if w[1] <= w[0] {
            fail(10, summary, &detail);
        }
    }
    pass(10, summary, &detail);
}

#[test]
fn criterion_11_spearman_matches_rank_then_pearson_oracle() {
    let summary = "Spearman matches rank-then-Pearson oracle within 1e-10 on 100 random pairs including ties";
    use rand::Rng;
    fn midranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count();
                let equal = v.iter().filter(|&&b| b == a).count();
                less as f64 + (equal as f64 + 1.0) / 2.0
            })
            .collect()
    }
    fn pearson_raw(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for i in 0..x.len() {
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
            sxy += (x[i] - mx) * (y[i] - my);
        }
        sxy / (sxx * syy).sqrt()
    }
    let mut rng = seed::rng(0x11, &[0]);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = 30 + case % 40;
        let quantize = case % 2 == 0;
        let sample = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let v = rng.random::<f64>() * 20.0;
                    if quantize {
                        v.round()
                    } else {
                        v
                    }
                })
                .collect()
        };
        let x = sample(&mut rng);
        let y = sample(&mut rng);
        let ours = spearman(&x, &y).unwrap();
        let oracle = pearson_raw(&midranks(&x), &midranks(&y));
        let diff = (ours - oracle).abs();
        worst = worst.max(diff);
        if diff > 1e-10 {
            fail(11, summary, &format!("case {case}: |{ours} - {oracle}| = {diff:e}"));
        }
    }
    pass(11, summary, &format!("worst |diff| = {worst:.2e}"));
}

#[test]
fn criterion_12_ks_statistic_matches_bruteforce_sweep() {
    let summary = "KS statistic matches brute-force ECDF sweep within 1e-12 on 100 random sample pairs";
    use rand::Rng;
    let mut rng = seed::rng(0x12, &[0]);
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let n = 8 + (case % 40) as usize;
        let m = 8 + ((case * 3) % 35) as usize;
        let quantize = case % 3 == 0;
        let sample = |len: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            (0..len)
                .map(|_| {
                    let v = rng.random::<f64>() * 6.0 - 1.0;
                    if quantize {
                        (v * 3.0).round() / 3.0
                    } else {
                        v
                    }
                })
                .collect()
        };
        let a = sample(n, &mut rng);
        let b = sample(m, &mut rng);
        let (stat, _) = ks_two_sample(&a, &b).unwrap();
        // brute force: evaluate both ECDFs at every pooled breakpoint
        let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        let mut oracle = 0.0f64;
        for &x in a.iter().chain(&b) {
            oracle = oracle.max((ecdf(&a, x) - ecdf(&b, x)).abs());
        }
        let diff = (stat - oracle).abs();
        worst = worst.max(diff);
        if diff > 1e-12 {
            fail(12, summary, &format!("case {case}: {stat} vs {oracle}"));
        }
    }
    pass(12, summary, &format!("worst |diff| = {worst:.2e}"));
}

// Exhaustive recursive splitter, independent of the library's prefix-sum
// search: enumerate every (feature, midpoint) candidate directly.
fn exhaustive_tree_predictions(
    x: &FeatureMatrix,
    y: &[f64],
    max_depth: usize,
) -> Vec<f64> {
    fn sse(y: &[f64], idx: &[usize]) -> f64 {
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - mean).powi(2)).sum()
    }
    fn predict(
        x: &FeatureMatrix,
        y: &[f64],
        idx: Vec<usize>,
        depth: usize,
        max_depth: usize,
        out: &mut [f64],
    ) {
        let pure = idx.iter().all(|&i| y[i] == y[idx[0]]);
        let mut best: Option<(f64, usize, f64)> = None;
        if depth < max_depth && idx.len() >= 2 && !pure {
            for f in 0..x.n_cols() {
                let mut vals: Vec<f64> = idx.iter().map(|&i| x.value(i, f)).collect();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                vals.dedup();
                for w in vals.windows(2) {
                    let thr = (w[0] + w[1]) / 2.0;
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        idx.iter().partition(|&&i| x.value(i, f) <= thr);
                    if l.is_empty() || r.is_empty() {
                        continue;
                    }
                    let child = sse(y, &l) + sse(y, &r);
                    if best.map(|(b, _, _)| child < b - 1e-12 * (1.0 + b.abs())).unwrap_or(true) {
                        best = Some((child, f, thr));
                    }
                }
            }
        }
        match best {
            None => {
                let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
                for i in idx {
                    out[i] = mean;
                }
            }
            Some((_, f, thr)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| x.value(i, f) <= thr);
                predict(x, y, l, depth + 1, max_depth, out);
                predict(x, y, r, depth + 1, max_depth, out);
            }
        }
    }
    let mut out = vec![0.0; x.n_rows()];
    predict(x, y, (0..x.n_rows()).collect(), 0, max_depth, &mut out);
    out
}

fn random_regression_problem(n: usize, p: usize, tag: u64) -> (FeatureMatrix, Vec<f64>) {
    use rand::Rng;
    let mut rng = seed::rng(0x13, &[tag]);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.random::<f64>() * 8.0).collect())
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().enumerate().map(|(k, v)| v * (k + 1) as f64).sum::<f64>()
            + rng.random::<f64>() * 2.0)
        .collect();
    let names = (0..p).map(|i| format!("f{i}")).collect();
    (FeatureMatrix::from_rows(names, &rows).unwrap(), y)
}

#[test]
fn criterion_13_gbr_loss_and_tree_splitter() {
    let summary = "GBR loss nonincreasing over 100 stages on 20 problems; splitter equals exhaustive enumeration (≤ 50×5)";
    use rand::Rng;
    let mut rng = seed::rng(0x13b, &[0]);
    for case in 0..20u64 {
        let n = 10 + (rng.random::<u32>() % 41) as usize; // ≤ 50 samples
        let p = 1 + (rng.random::<u32>() % 5) as usize; // ≤ 5 features
        let (x, y) = random_regression_problem(n, p, case);

        let model = fit_gbr(&x, &y, &GbrConfig::default()).unwrap();
        let staged = model.staged_training_mse();
        if staged.len() != 101 {
            fail(13, summary, &format!("case {case}: {} stages", staged.len()));
        }
        for (k, w) in staged.windows(2).enumerate() {
            if w[1] > w[0] + 1e-12 {
                fail(
                    13,
                    summary,
                    &format!("case {case}: loss rose at stage {k}: {} -> {}", w[0], w[1]),
                );
            }
        }

        let depth = 1 + (case % 3) as usize;
        let tree = fit_tree(
            &x,
            &y,
            &TreeParams {
                max_depth: Some(depth),
                min_samples_leaf: 1,
            },
        )
        .unwrap();
        let oracle = exhaustive_tree_predictions(&x, &y, depth);
        for i in 0..x.n_rows() {
            let got = tree.predict_row(x.row(i));
            if (got - oracle[i]).abs() > 1e-9 {
                fail(
                    13,
                    summary,
                    &format!("case {case} row {i}: tree {got} vs exhaustive {}", oracle[i]),
                );
            }
        }
    }
    pass(13, summary, "all 20 problems agree");
}

/// Projected-gradient oracle for the SVR dual: minimize ½αᵀQα + pᵀα over
/// the box [0, C]^{2n} intersected with zᵀα = 0. The projection solves a
/// 1-D root-find over the equality multiplier.
fn projected_gradient_dual(
    kernel: &[Vec<f64>],
    y: &[f64],
    cost: f64,
    epsilon: f64,
    iterations: usize,
) -> f64 {
    let n = y.len();
    let m = 2 * n;
    let z = |i: usize| if i < n { 1.0 } else { -1.0 };
    let s = |i: usize| if i < n { i } else { i - n };
    let q = |i: usize, j: usize| z(i) * z(j) * kernel[s(i)][s(j)];
    let p: Vec<f64> = (0..m)
        .map(|i| if i < n { epsilon - y[i] } else { epsilon + y[i - n] })
        .collect();

    let project = |v: &[f64]| -> Vec<f64> {
        // find λ with Σ z_i · clip(v_i − λ z_i) = 0 by bisection
        let (mut lo, mut hi) = (-1e6, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let sum: f64 = (0..m)
                .map(|i| z(i) * (v[i] - mid * z(i)).clamp(0.0, cost))
                .sum();
            if sum > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        (0..m).map(|i| (v[i] - lambda * z(i)).clamp(0.0, cost)).collect()
    };

    // step from a row-sum bound on the largest eigenvalue
    let lipschitz: f64 = (0..m)
        .map(|i| (0..m).map(|j| q(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / lipschitz.max(1e-9);

    let mut alpha = project(&vec![0.0; m]);
    for _ in 0..iterations {
        let mut grad = p.clone();
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                acc += q(i, j) * alpha[j];
            }
            grad[i] += acc;
        }
        let moved: Vec<f64> = (0..m).map(|i| alpha[i] - step * grad[i]).collect();
        alpha = project(&moved);
    }

    let mut objective = 0.0;
    for i in 0..m {
        let mut acc = 0.0;
        for j in 0..m {
            acc += q(i, j) * alpha[j];
        }
        objective += 0.5 * alpha[i] * acc + p[i] * alpha[i];
    }
    objective
}

#[test]
fn criterion_14_svr_dual_objective_vs_projected_gradient() {
    let summary = "SVR dual objective within 1e-3 of the projected-gradient QP oracle on 20 problems (≤ 30 samples)";
    use rand::Rng;
    let mut rng = seed::rng(0x14, &[0]);
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let n = 5 + (rng.random::<u32>() % 26) as usize; // ≤ 30 samples
        let p = 1 + (rng.random::<u32>() % 3) as usize;
        let (x, raw_y) = random_regression_problem(n, p, 1_000 + case);
        // center and shrink targets so the ε-tube is active
        let mean = raw_y.iter().sum::<f64>() / n as f64;
        let y: Vec<f64> = raw_y.iter().map(|v| (v - mean) * 0.2).collect();

        let cfg = SvrConfig::default();
        let model = fit_svr(&x, &y, &cfg).unwrap();

        // rebuild the exact standardized kernel the solver saw
        let rows: Vec<Vec<f64>> = (0..n).map(|i| model.standardize_row(x.row(i))).collect();
        let gamma = model.gamma();
        let kernel: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d2: f64 = rows[i]
                            .iter()
                            .zip(&rows[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum();
                        (-gamma * d2).exp()
                    })
                    .collect()
            })
            .collect();
        let oracle = projected_gradient_dual(&kernel, &y, cfg.cost, cfg.epsilon, 20_000);
        let diff = (model.dual_objective() - oracle).abs();
        worst = worst.max(diff);
        if diff > 1e-3 {
            fail(
                14,
                summary,
                &format!(
                    "case {case} (n={n}): solver {} vs oracle {oracle} (diff {diff:.2e})",
                    model.dual_objective()
                ),
            );
        }
    }
    pass(14, summary, &format!("worst |diff| = {worst:.2e}"));
}

/// One full synthetic pipeline pass: field → rendered images on disk →
/// canonical CSVs → reload → feature extraction → evaluation → reports.
fn synthetic_pipeline_run(root: &Path, master_seed: u64) -> Vec<(String, Vec<u8>)> {
    use hazefuse::dataset_io::{write_image_manifest, write_sensor_csv, write_station_csv};

    let stations: Vec<_> = reference_stations().into_iter().take(6).collect();
    let field = generate_field(
        &stations,
        0.5,
        master_seed,
        &FieldConfig {
            n_samples: 3_600,
            cadence_secs: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let synth = build_synthetic_deployment(
        &field,
        &SceneConfig {
            width: 64,
            height: 48,
            seed: master_seed,
        },
        &root.join("images"),
        600,
        AltitudeClass::High,
        "synthetic",
    )
    .unwrap();

    write_sensor_csv(&root.join("sensors.csv"), synth.deployment.records()).unwrap();
    write_station_csv(&root.join("stations.csv"), synth.deployment.stations()).unwrap();
    write_image_manifest(&root.join("images.csv"), synth.deployment.images()).unwrap();

    // reload through the same readers the CLI uses
    let sensors = load_sensor_csv(&root.join("sensors.csv"), &SensorSchema::default()).unwrap();
    let geometry = load_station_csv(&root.join("stations.csv")).unwrap();
    let images = load_image_manifest(&root.join("images.csv"), 0).unwrap();
    let deployment = Deployment::new(geometry, sensors.records, images, "synthetic").unwrap();

    let cfg = PatchConfig::default();
    let features = deployment
        .images()
        .iter()
        .map(|img| Some(extract_features(&ImageRgb::open(&img.path).unwrap(), &cfg).unwrap()))
        .collect::<Vec<_>>();
    let input = FusionInput::from_deployment(&deployment, &features, 300).unwrap();

    let config = ExperimentConfig {
        models: vec![RegressorKind::Gbr, RegressorKind::Rfr],
        sensor_counts: vec![0, 1, 2],
        repetitions: 5,
        seed: master_seed,
        ..ExperimentConfig::new(AltitudeClass::High)
    };
    let table = run_matrix(&config, &input).unwrap();
    let out = root.join("reports");
    let written = hazefuse::experiment::report(&table, &out).unwrap();

    let mut bytes = Vec::new();
    for path in written {
        let rel = path.strip_prefix(&out).unwrap().to_string_lossy().into_owned();
        bytes.push((rel, std::fs::read(&path).unwrap()));
    }
    bytes.sort_by(|a, b| a.0.cmp(&b.0));
    bytes
}

#[test]
fn criterion_15_end_to_end_determinism() {
    let summary = "two full synthetic pipeline runs with the same seed produce byte-identical result CSVs";
    let dir = tempfile::tempdir().unwrap();
    let a = synthetic_pipeline_run(&dir.path().join("a"), 4242);
    let b = synthetic_pipeline_run(&dir.path().join("b"), 4242);
    if a.len() != b.len() {
        fail(15, summary, &format!("{} vs {} report files", a.len(), b.len()));
    }
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        if name_a != name_b {
            fail(15, summary, &format!("file set differs: {name_a} vs {name_b}"));
        }
        if bytes_a != bytes_b {
            fail(15, summary, &format!("{name_a} differs between runs"));
        }
    }
    pass(15, summary, &format!("{} report files byte-identical", a.len()));
}

//! Spatial structure of the sensor field.
//!
//! Station pairs are compared with Spearman rank correlation over
//! co-resampled PM2.5 series, the resulting correlations are regressed on
//! pairwise distance, and per-series summary statistics mirror the published
//! deployment tables. Ties get average ranks, so the rank correlation is the
//! Pearson correlation of midranks.

use std::collections::BTreeMap;

use crate::dataset_io::{Deployment, StationId};
use crate::error::{Error, Result};

/// Default resampling bucket for correlation matrices, seconds.
pub const DEFAULT_RESAMPLE_SECS: i64 = 60;

/// Average ranks (midranks) of a sample; ties share the mean of their ranks.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mean_x) * (a - mean_x);
        syy += (b - mean_y) * (b - mean_y);
        sxy += (a - mean_x) * (b - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("first vector is constant".into()));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "second vector is constant".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Pairwise Spearman correlations between stations. Entries without enough
/// overlapping coverage are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub stations: Vec<StationId>,
    values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// Upper-triangle `(i, j, rho)` entries that are present.
    pub fn present_pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if let Some(rho) = self.values[i][j] {
                    out.push((i, j, rho));
                }
            }
        }
        out
    }
}

/// Per-station PM2.5 means over fixed time buckets.
fn bucket_means(deployment: &Deployment, resample_secs: i64) -> Vec<BTreeMap<i64, f64>> {
    let n = deployment.stations().len();
    let mut sums: Vec<BTreeMap<i64, (f64, u32)>> = vec![BTreeMap::new(); n];
    for r in deployment.records() {
        if let Some(pos) = deployment.station_position(r.station) {
            let bucket = r.timestamp.div_euclid(resample_secs);
            let e = sums[pos].entry(bucket).or_insert((0.0, 0));
            e.0 += r.pm25;
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|m| {
            m.into_iter()
                .map(|(k, (s, c))| (k, s / c as f64))
                .collect()
        })
        .collect()
}

/// Spearman correlation for each station pair over co-resampled PM2.5 series.
/// Buckets missing on either side are dropped pairwise; a pair with fewer
/// than two common buckets (or a constant series) is flagged missing.
pub fn correlation_matrix(deployment: &Deployment, resample_secs: i64) -> Result<CorrelationMatrix> {
    if resample_secs <= 0 {
        return Err(Error::InvalidConfig(format!(
            "resample bucket must be positive, got {resample_secs}"
        )));
    }
    let n = deployment.stations().len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 stations, got {n}"
        )));
    }
    let means = bucket_means(deployment, resample_secs);
    let mut values = vec![vec![None; n]; n];
    for (i, row) in values.iter_mut().enumerate() {
        row[i] = Some(1.0);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for (bucket, &x) in &means[i] {
                if let Some(&y) = means[j].get(bucket) {
                    xs.push(x);
                    ys.push(y);
                }
            }
            let rho = if xs.len() < 2 {
                None
            } else {
                spearman(&xs, &ys).ok()
            };
            values[i][j] = rho;
            values[j][i] = rho;
        }
    }
    Ok(CorrelationMatrix {
        stations: deployment.stations().iter().map(|(id, _)| *id).collect(),
        values,
    })
}

/// OLS fit of correlation against distance, slope in 1/km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceCorrelationFit {
    pub slope_per_km: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_pairs: usize,
}

/// Regress upper-triangle correlations on pairwise distance (km).
pub fn fit_correlation_vs_distance(
    matrix: &CorrelationMatrix,
    distances_m: &[Vec<f64>],
) -> Result<DistanceCorrelationFit> {
    let pairs = matrix.present_pairs();
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 station pairs, got {}",
            pairs.len()
        )));
    }
    let xs: Vec<f64> = pairs
        .iter()
        .map(|&(i, j, _)| distances_m[i][j] / 1000.0)
        .collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, _, rho)| rho).collect();

    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all pairwise distances equal; slope undefined".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(&ys) {
        ss_res += (y - slope * x - intercept).powi(2);
        ss_tot += (y - mean_y).powi(2);
    }
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DistanceCorrelationFit {
        slope_per_km: slope,
        intercept,
        r_squared,
        n_pairs: pairs.len(),
    })
}

/// Population standard deviation, max−min range, and mean of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub std_dev: f64,
    pub range: f64,
    pub mean: f64,
}

pub fn summary_stats(series: &[f64]) -> Result<SummaryStats> {
    if series.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in series {
        min = min.min(v);
        max = max.max(v);
    }
    Ok(SummaryStats {
        std_dev: var.sqrt(),
        range: max - min,
        mean,
    })
}

pub const FACTOR_LABELS: [&str; 3] = ["pm25", "temperature", "humidity"];

/// 3×3 matrix of squared correlation coefficients over the co-sampled
/// (PM2.5, temperature, humidity) triplets of a deployment. Every record is
/// one triplet. Constant factors are flagged `None`.
pub fn factor_correlations(deployment: &Deployment) -> Result<[[Option<f64>; 3]; 3]> {
    let records = deployment.records();
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 records, got {}",
            records.len()
        )));
    }
    let columns: [Vec<f64>; 3] = [
        records.iter().map(|r| r.pm25).collect(),
        records.iter().map(|r| r.temperature_c).collect(),
        records.iter().map(|r| r.humidity_rh).collect(),
    ];
    let mut out = [[None; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = Some(1.0);
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let r2 = pearson(&columns[i], &columns[j]).ok().map(|r| r * r);
            out[i][j] = r2;
            out[j][i] = r2;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::{GeoPoint, SensorRecord};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn spearman_monotone_pairs() {
        let x: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert!((spearman(&x, &rev).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_errors() {
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    // Oracle: rank (with midranks) then textbook Pearson, written separately.
    fn rank_then_pearson(x: &[f64], y: &[f64]) -> f64 {
        fn ranks(v: &[f64]) -> Vec<f64> {
            v.iter()
                .map(|&a| {
                    let less = v.iter().filter(|&&b| b < a).count();
                    let equal = v.iter().filter(|&&b| b == a).count();
                    // midrank: average of positions less+1 ..= less+equal
                    less as f64 + (equal as f64 + 1.0) / 2.0
                })
                .collect()
        }
        let rx = ranks(x);
        let ry = ranks(y);
        let n = x.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for i in 0..x.len() {
            sxx += (rx[i] - mx).powi(2);
            syy += (ry[i] - my).powi(2);
            sxy += (rx[i] - mx) * (ry[i] - my);
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn spearman_matches_rank_then_pearson_oracle_with_ties() {
        let mut rng = crate::seed::rng(17, &[1]);
        for case in 0..100u64 {
            let n = 50;
            // quantize to force ties in roughly half the cases
            let quantize = case % 2 == 0;
            let gen = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
                (0..n)
                    .map(|_| {
                        let v = rng.random::<f64>() * 10.0;
                        if quantize {
                            v.round()
                        } else {
                            v
                        }
                    })
                    .collect()
            };
            let x = gen(&mut rng);
            let y = gen(&mut rng);
            let ours = spearman(&x, &y).unwrap();
            let oracle = rank_then_pearson(&x, &y);
            assert!((ours - oracle).abs() < 1e-10, "case {case}: {ours} vs {oracle}");
        }
    }

    #[test]
    fn spearman_no_ties_matches_rank_difference_formula() {
        // without ties the classic 1 - 6 Σd²/(N(N²-1)) form is exact
        let x = vec![3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0];
        let y = vec![2.0, 7.0, 1.0, 8.0, 2.5, 0.5, 9.0];
        let rx = average_ranks(&x);
        let ry = average_ranks(&y);
        let n = x.len() as f64;
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
        let classic = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
        assert!((spearman(&x, &y).unwrap() - classic).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spearman_symmetric_and_monotone_invariant(seed in 0u64..300) {
            let mut rng = crate::seed::rng(seed, &[2]);
            let x: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            let a = spearman(&x, &y).unwrap();
            prop_assert!((a - spearman(&y, &x).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
            // strictly monotone transform of either argument
            let x2: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let y2: Vec<f64> = y.iter().map(|v| 3.0 * v + 7.0).collect();
            prop_assert!((a - spearman(&x2, &y2).unwrap()).abs() < 1e-12);
        }
    }

    fn deployment_from_series(series: &[Vec<f64>]) -> Deployment {
        let stations: Vec<_> = (0..series.len())
            .map(|i| {
                (
                    StationId::new(i as u8 + 1).unwrap(),
                    GeoPoint::new(120.0 + 0.001 * i as f64, 30.0).unwrap(),
                )
            })
            .collect();
        let mut records = Vec::new();
        for (i, s) in series.iter().enumerate() {
            for (t, &v) in s.iter().enumerate() {
                records.push(SensorRecord {
                    station: StationId::new(i as u8 + 1).unwrap(),
                    timestamp: t as i64 * 60,
                    pm25: v,
                    pm10: v,
                    temperature_c: 20.0,
                    humidity_rh: 50.0,
                });
            }
        }
        Deployment::new(stations, records, vec![], "test").unwrap()
    }

    #[test]
    fn matrix_identical_and_reversed_series() {
        let base: Vec<f64> = (0..100).map(|i| 30.0 + i as f64 * 0.5).collect();
        let reversed: Vec<f64> = base.iter().rev().copied().collect();
        let d = deployment_from_series(&[base.clone(), base.clone(), reversed]);
        let m = correlation_matrix(&d, 60).unwrap();
        assert!((m.value(0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((m.value(0, 2).unwrap() + 1.0).abs() < 1e-12);
        for i in 0..3 {
            assert_eq!(m.value(i, i), Some(1.0));
            for j in 0..3 {
                assert_eq!(m.value(i, j), m.value(j, i));
            }
        }
    }

    #[test]
    fn matrix_flags_pairs_without_overlap() {
        // station 2 only reports far outside station 1's coverage
        let stations = vec![
            (StationId::new(1).unwrap(), GeoPoint::new(120.0, 30.0).unwrap()),
            (StationId::new(2).unwrap(), GeoPoint::new(120.1, 30.0).unwrap()),
        ];
        let mut records = Vec::new();
        for t in 0..50 {
            records.push(SensorRecord {
                station: StationId::new(1).unwrap(),
                timestamp: t * 60,
                pm25: t as f64,
                pm10: 0.0,
                temperature_c: 20.0,
                humidity_rh: 50.0,
            });
            records.push(SensorRecord {
                station: StationId::new(2).unwrap(),
                timestamp: 1_000_000 + t * 60,
                pm25: t as f64,
                pm10: 0.0,
                temperature_c: 20.0,
                humidity_rh: 50.0,
            });
        }
        let d = Deployment::new(stations, records, vec![], "t").unwrap();
        let m = correlation_matrix(&d, 60).unwrap();
        assert_eq!(m.value(0, 1), None);
    }

    // 3x3 Cholesky for planting a correlation structure.
    fn chol3(c: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut l = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let mut s = c[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    l[i][j] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        l
    }

    #[test]
    fn matrix_recovers_planted_correlation_ordering() {
        use rand_distr::{Distribution, StandardNormal};
        let target = [[1.0, 0.9, 0.5], [0.9, 1.0, 0.1], [0.5, 0.1, 1.0]];
        let l = chol3(target);
        let mut rng = crate::seed::rng(99, &[4]);
        let n = 10_000;
        let mut series: Vec<Vec<f64>> = vec![Vec::new(); 3];
        for _ in 0..n {
            let z: [f64; 3] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            for i in 0..3 {
                let v: f64 = (0..3).map(|k| l[i][k] * z[k]).sum();
                series[i].push((50.0 + 10.0 * v).max(0.0));
            }
        }
        let d = deployment_from_series(&series);
        let m = correlation_matrix(&d, 60).unwrap();
        let r12 = m.value(0, 1).unwrap();
        let r13 = m.value(0, 2).unwrap();
        let r23 = m.value(1, 2).unwrap();
        assert!(r12 > r13 && r13 > r23, "ordering violated: {r12} {r13} {r23}");
        assert!((r12 - 0.9).abs() < 0.05, "{r12}");
        assert!((r13 - 0.5).abs() < 0.05, "{r13}");
        assert!((r23 - 0.1).abs() < 0.05, "{r23}");
    }

    #[test]
    fn fit_exact_line() {
        // rho = 1 - 0.2 d_km exactly
        let stations = vec![
            StationId::new(1).unwrap(),
            StationId::new(2).unwrap(),
            StationId::new(3).unwrap(),
        ];
        let d_m = vec![
            vec![0.0, 1000.0, 3000.0],
            vec![1000.0, 0.0, 2000.0],
            vec![3000.0, 2000.0, 0.0],
        ];
        let mut values = vec![vec![None; 3]; 3];
        for i in 0..3 {
            values[i][i] = Some(1.0);
            for j in (i + 1)..3 {
                let rho = 1.0 - 0.2 * d_m[i][j] / 1000.0;
                values[i][j] = Some(rho);
                values[j][i] = Some(rho);
            }
        }
        let m = CorrelationMatrix {
            stations,
            values,
        };
        let fit = fit_correlation_vs_distance(&m, &d_m).unwrap();
        assert!((fit.slope_per_km + 0.2).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_matches_normal_equations_oracle() {
        let mut rng = crate::seed::rng(31, &[6]);
        let n = 8;
        let ids: Vec<StationId> = (1..=n as u8).map(|i| StationId::new(i).unwrap()).collect();
        let mut d_m = vec![vec![0.0; n]; n];
        let mut values = vec![vec![None; n]; n];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            values[i][i] = Some(1.0);
            for j in (i + 1)..n {
                let dist = 100.0 + rng.random::<f64>() * 2000.0;
                let rho = rng.random::<f64>() * 2.0 - 1.0;
                d_m[i][j] = dist;
                d_m[j][i] = dist;
                values[i][j] = Some(rho);
                values[j][i] = Some(rho);
                xs.push(dist / 1000.0);
                ys.push(rho);
            }
        }
        let m = CorrelationMatrix {
            stations: ids,
            values,
        };
        let fit = fit_correlation_vs_distance(&m, &d_m).unwrap();

        // normal equations + direct R²
        let nn = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|v| v * v).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        let intercept = (sy - slope * sx) / nn;
        let my = sy / nn;
        let ss_res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| (y - slope * x - intercept).powi(2))
            .sum();
        let ss_tot: f64 = ys.iter().map(|&y| (y - my).powi(2)).sum();
        assert!((fit.slope_per_km - slope).abs() < 1e-9);
        assert!((fit.intercept - intercept).abs() < 1e-9);
        assert!((fit.r_squared - (1.0 - ss_res / ss_tot)).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_equal_distances() {
        let ids = vec![
            StationId::new(1).unwrap(),
            StationId::new(2).unwrap(),
            StationId::new(3).unwrap(),
        ];
        let d_m = vec![
            vec![0.0, 500.0, 500.0],
            vec![500.0, 0.0, 500.0],
            vec![500.0, 500.0, 0.0],
        ];
        let mut values = vec![vec![Some(0.5); 3]; 3];
        for i in 0..3 {
            values[i][i] = Some(1.0);
        }
        let m = CorrelationMatrix {
            stations: ids,
            values,
        };
        assert!(fit_correlation_vs_distance(&m, &d_m).is_err());
    }

    #[test]
    fn summary_stats_cases() {
        let c = summary_stats(&[7.5, 7.5, 7.5]).unwrap();
        assert_eq!((c.std_dev, c.range, c.mean), (0.0, 0.0, 7.5));

        let s = summary_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert!((s.std_dev - 0.816_496_580_927_726).abs() < 1e-12); // population sigma
        assert_eq!(s.range, 2.0);
        assert_eq!(s.mean, 2.0);

        assert!(summary_stats(&[]).is_err());
    }

    proptest! {
        #[test]
        fn summary_stats_sigma_bounded_by_range(seed in 0u64..300) {
            let mut rng = crate::seed::rng(seed, &[8]);
            let n = 2 + (seed % 40) as usize;
            let series: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 100.0).collect();
            let s = summary_stats(&series).unwrap();
            prop_assert!(s.range >= 0.0);
            prop_assert!(s.std_dev <= s.range + 1e-12);
        }
    }

    #[test]
    fn factor_duplicated_series_gives_unit_entry() {
        let stations = vec![(
            StationId::new(1).unwrap(),
            GeoPoint::new(120.0, 30.0).unwrap(),
        )];
        let records: Vec<SensorRecord> = (0..50)
            .map(|t| SensorRecord {
                station: StationId::new(1).unwrap(),
                timestamp: t,
                pm25: (t % 13) as f64 + 10.0,
                pm10: 0.0,
                temperature_c: (t % 13) as f64 + 10.0, // duplicates pm25
                humidity_rh: (t % 7) as f64 * 5.0,
            })
            .collect();
        let d = Deployment::new(stations, records, vec![], "t").unwrap();
        let m = factor_correlations(&d).unwrap();
        assert!((m[0][1].unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m[0][1], m[1][0]);
        assert_eq!(m[0][0], Some(1.0));
    }

    #[test]
    fn factor_independent_noise_is_near_zero() {
        let mut rng = crate::seed::rng(3, &[12]);
        let stations = vec![(
            StationId::new(1).unwrap(),
            GeoPoint::new(120.0, 30.0).unwrap(),
        )];
        let records: Vec<SensorRecord> = (0..10_000)
            .map(|t| SensorRecord {
                station: StationId::new(1).unwrap(),
                timestamp: t,
                pm25: rng.random::<f64>() * 100.0,
                pm10: 0.0,
                temperature_c: rng.random::<f64>() * 30.0,
                humidity_rh: rng.random::<f64>() * 100.0,
            })
            .collect();
        let d = Deployment::new(stations, records, vec![], "t").unwrap();
        let m = factor_correlations(&d).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(m[i][j].unwrap() < 0.01, "({i},{j}) = {:?}", m[i][j]);
                }
            }
        }
    }

    #[test]
    fn factor_constant_column_is_flagged() {
        let stations = vec![(
            StationId::new(1).unwrap(),
            GeoPoint::new(120.0, 30.0).unwrap(),
        )];
        let records: Vec<SensorRecord> = (0..10)
            .map(|t| SensorRecord {
                station: StationId::new(1).unwrap(),
                timestamp: t,
                pm25: t as f64,
                pm10: 0.0,
                temperature_c: 21.5, // constant
                humidity_rh: (t % 3) as f64 * 10.0,
            })
            .collect();
        let d = Deployment::new(stations, records, vec![], "t").unwrap();
        let m = factor_correlations(&d).unwrap();
        assert_eq!(m[0][1], None);
        assert!(m[0][2].is_some());
    }
}

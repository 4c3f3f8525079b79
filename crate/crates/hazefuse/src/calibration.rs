//! Co-location calibration of raw particle-counter readings.
//!
//! A counter is parked next to a reference-grade monitor, the paired series
//! is split at a concentration breakpoint, and each segment gets its own
//! ordinary-least-squares line. The published fit for the deployment's
//! counters is `y = 1.61x + 16.01` for `0 ≤ x ≤ 30` and `y = 0.13x + 29.48`
//! above, with the discontinuity at the breakpoint kept as published.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default breakpoint between the two linear segments, µg/m³.
pub const DEFAULT_BREAKPOINT: f64 = 30.0;

/// Two-segment piecewise-linear calibration. The breakpoint itself belongs
/// to the lower segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearCalib {
    pub breakpoint: f64,
    pub slope_lo: f64,
    pub intercept_lo: f64,
    pub slope_hi: f64,
    pub intercept_hi: f64,
}

impl PiecewiseLinearCalib {
    pub fn new(
        breakpoint: f64,
        slope_lo: f64,
        intercept_lo: f64,
        slope_hi: f64,
        intercept_hi: f64,
    ) -> Result<Self> {
        if breakpoint.is_nan() || breakpoint <= 0.0 {
            return Err(Error::InvalidValue(format!(
                "breakpoint {breakpoint} must be positive"
            )));
        }
        Ok(PiecewiseLinearCalib {
            breakpoint,
            slope_lo,
            intercept_lo,
            slope_hi,
            intercept_hi,
        })
    }

    /// The fit published for the deployment's SDS011 counters.
    pub fn published() -> Self {
        PiecewiseLinearCalib {
            breakpoint: DEFAULT_BREAKPOINT,
            slope_lo: 1.61,
            intercept_lo: 16.01,
            slope_hi: 0.13,
            intercept_hi: 29.48,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration is serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let calib: PiecewiseLinearCalib =
            serde_json::from_str(s).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if calib.breakpoint.is_nan() || calib.breakpoint <= 0.0 {
            return Err(Error::InvalidValue("breakpoint must be positive".into()));
        }
        Ok(calib)
    }
}

/// Timestamped pairs of (raw counter reading, reference reading).
#[derive(Debug, Clone, PartialEq)]
pub struct CoLocationSeries {
    timestamps: Vec<i64>,
    raw: Vec<f64>,
    reference: Vec<f64>,
}

impl CoLocationSeries {
    pub fn new(timestamps: Vec<i64>, raw: Vec<f64>, reference: Vec<f64>) -> Result<Self> {
        if timestamps.len() != raw.len() || raw.len() != reference.len() {
            return Err(Error::LengthMismatch {
                left: raw.len(),
                right: reference.len(),
            });
        }
        Ok(CoLocationSeries {
            timestamps,
            raw,
            reference,
        })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }
}

/// Ordinary least squares of y on x. Returns (slope, intercept).
fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all x values identical; slope undefined".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, mean_y - slope * mean_x))
}

/// Fit both segments by OLS on the pairs partitioned at the breakpoint
/// (raw ≤ breakpoint goes to the lower segment).
pub fn fit_piecewise(series: &CoLocationSeries, breakpoint: f64) -> Result<PiecewiseLinearCalib> {
    if breakpoint.is_nan() || breakpoint <= 0.0 {
        return Err(Error::InvalidValue(format!(
            "breakpoint {breakpoint} must be positive"
        )));
    }
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (vec![], vec![], vec![], vec![]);
    for (&x, &y) in series.raw.iter().zip(&series.reference) {
        if x <= breakpoint {
            lo_x.push(x);
            lo_y.push(y);
        } else {
            hi_x.push(x);
            hi_y.push(y);
        }
    }
    if lo_x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "lower segment (raw <= {breakpoint}) has {} samples, need at least 2",
            lo_x.len()
        )));
    }
    if hi_x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "upper segment (raw > {breakpoint}) has {} samples, need at least 2",
            hi_x.len()
        )));
    }
    let (slope_lo, intercept_lo) = ols(&lo_x, &lo_y)?;
    let (slope_hi, intercept_hi) = ols(&hi_x, &hi_y)?;
    PiecewiseLinearCalib::new(breakpoint, slope_lo, intercept_lo, slope_hi, intercept_hi)
}

/// Apply a calibration to one raw reading.
pub fn apply_calibration(calib: &PiecewiseLinearCalib, raw: f64) -> Result<f64> {
    if !raw.is_finite() || raw < 0.0 {
        return Err(Error::InvalidValue(format!(
            "raw reading {raw} must be nonnegative"
        )));
    }
    Ok(if raw <= calib.breakpoint {
        calib.slope_lo * raw + calib.intercept_lo
    } else {
        calib.slope_hi * raw + calib.intercept_hi
    })
}

/// Root mean squared error between two equal-length series.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    let sum_sq: f64 = pred
        .iter()
        .zip(truth)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum();
    Ok((sum_sq / pred.len() as f64).sqrt())
}

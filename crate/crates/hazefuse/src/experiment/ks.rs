//! Two-sample Kolmogorov-Smirnov test.
//!
//! The statistic is the maximum gap between the two empirical CDFs; the
//! p-value comes from the asymptotic Kolmogorov distribution evaluated at
//! `sqrt(n·m/(n+m)) · D`. The decision threshold used downstream is p < 0.10.

use crate::error::{Error, Result};

/// Significance threshold applied when reading p-value tables.
pub const KS_SIGNIFICANCE: f64 = 0.10;

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    out
}

/// Asymptotic Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=1000 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test: returns `(statistic, p_value)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData(
            "KS test needs two nonempty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue("non-finite sample value".into()));
    }
    let xs = sorted(a);
    let ys = sorted(b);
    let (n, m) = (xs.len(), ys.len());

    let mut i = 0usize;
    let mut j = 0usize;
    let mut stat = 0.0f64;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        let gap = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        if gap > stat {
            stat = gap;
        }
    }

    let effective = ((n * m) as f64 / (n + m) as f64).sqrt();
    Ok((stat, kolmogorov_sf(effective * stat)))
}

pub mod calibrate;
pub mod correlate;
pub mod evaluate;
pub mod features;
pub mod ingest;
pub mod report;
pub mod synth;

use hazefuse::error::{Error, Result};

/// Parse a sensor-count spec: an inclusive range `0..4` or a list `0,1,2`.
pub fn parse_counts(spec: &str) -> Result<Vec<usize>> {
    let spec = spec.trim();
    let bad = || Error::InvalidConfig(format!("unparseable sensor counts '{spec}'"));
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    let mut counts = Vec::new();
    for part in spec.split(',') {
        counts.push(part.trim().parse().map_err(|_| bad())?);
    }
    counts.sort_unstable();
    counts.dedup();
    if counts.is_empty() {
        return Err(bad());
    }
    Ok(counts)
}

/// Parse a comma-separated float list.
pub fn parse_floats(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("unparseable number '{p}' in '{spec}'")))
        })
        .collect()
}

//! CSV ingestion and canonical CSV output.
//!
//! Sensor logs come with a configurable header map since published logs vary
//! in column naming. All output files use a fixed, documented column order:
//!
//! - sensors:  `timestamp,station_id,pm25,pm10,temperature,humidity`
//! - stations: `station_id,longitude,latitude`
//! - images:   `path,timestamp,altitude_class,camera_tag`
//!
//! Timestamps are normalized to UTC seconds at ingest; the source timezone is
//! declared in the schema as a fixed offset.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AltitudeClass, GeoPoint, ImageRecord, SensorRecord, StationId};
use crate::error::{Error, Result};

/// Column map plus timezone for a sensor log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSchema {
    pub timestamp: String,
    pub station_id: String,
    pub pm25: String,
    pub pm10: String,
    pub temperature: String,
    pub humidity: String,
    /// Seconds to subtract from parsed local times to reach UTC.
    pub utc_offset_secs: i64,
}

impl Default for SensorSchema {
    fn default() -> Self {
        SensorSchema {
            timestamp: "timestamp".into(),
            station_id: "station_id".into(),
            pm25: "pm25".into(),
            pm10: "pm10".into(),
            temperature: "temperature".into(),
            humidity: "humidity".into(),
            utc_offset_secs: 0,
        }
    }
}

/// A rejected row and why it was rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub line: u64,
    pub reason: String,
}

/// Loader output: accepted records sorted by `(station, timestamp)` plus
/// row-level diagnostics for everything rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLoad {
    pub records: Vec<SensorRecord>,
    pub rejects: Vec<RowDiagnostic>,
}

/// Days from civil date to the Unix epoch (proleptic Gregorian).
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (m as i64 + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Parse a timestamp cell: integer epoch seconds, or `YYYY-MM-DD HH:MM:SS`
/// (also accepts `/` date separators and a `T` between date and time).
pub fn parse_timestamp(cell: &str, utc_offset_secs: i64) -> Result<i64> {
    let s = cell.trim();
    if let Ok(epoch) = s.parse::<i64>() {
        return Ok(epoch);
    }
    let bad = || Error::InvalidValue(format!("unparseable timestamp '{cell}'"));
    let normalized = s.replace('/', "-").replace('T', " ");
    let (date, time) = normalized.split_once(' ').ok_or_else(bad)?;
    let mut dp = date.split('-');
    let y: i64 = dp.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let mo: u32 = dp.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let d: u32 = dp.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if dp.next().is_some() || !(1..=12).contains(&mo) || !(1..=31).contains(&d) {
        return Err(bad());
    }
    let mut tp = time.trim().split(':');
    let h: i64 = tp.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let mi: i64 = tp.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let sec: i64 = match tp.next() {
        Some(v) => v.parse().map_err(|_| bad())?,
        None => 0,
    };
    if tp.next().is_some() || !(0..24).contains(&h) || !(0..60).contains(&mi) || !(0..60).contains(&sec)
    {
        return Err(bad());
    }
    Ok(days_from_civil(y, mo, d) * 86_400 + h * 3600 + mi * 60 + sec - utc_offset_secs)
}

/// Parse a station cell: `3`, `P3`, or `p3`.
fn parse_station(cell: &str) -> Result<StationId> {
    let s = cell.trim();
    let digits = s.strip_prefix(['P', 'p']).unwrap_or(s);
    let idx: u8 = digits
        .parse()
        .map_err(|_| Error::InvalidValue(format!("unparseable station id '{cell}'")))?;
    StationId::new(idx)
}

fn parse_f64(cell: &str, what: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidValue(format!("unparseable {what} '{cell}'")))
}

fn header_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
            path: path.to_path_buf(),
        })
}

/// Load a sensor log. Malformed rows are skipped and reported; a missing
/// required column is a hard failure.
pub fn load_sensor_csv(path: &Path, schema: &SensorSchema) -> Result<SensorLoad> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();

    let idx_ts = header_index(&headers, &schema.timestamp, path)?;
    let idx_station = header_index(&headers, &schema.station_id, path)?;
    let idx_pm25 = header_index(&headers, &schema.pm25, path)?;
    let idx_pm10 = header_index(&headers, &schema.pm10, path)?;
    let idx_temp = header_index(&headers, &schema.temperature, path)?;
    let idx_hum = header_index(&headers, &schema.humidity, path)?;
    let width = [idx_ts, idx_station, idx_pm25, idx_pm10, idx_temp, idx_hum]
        .into_iter()
        .max()
        .unwrap()
        + 1;

    let mut records = Vec::new();
    let mut rejects = Vec::new();

    for row in reader.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let mut reject = |reason: String| rejects.push(RowDiagnostic { line, reason });

        if row.len() < width {
            reject(format!("expected at least {width} fields, got {}", row.len()));
            continue;
        }
        let parsed = (|| -> Result<SensorRecord> {
            let record = SensorRecord {
                station: parse_station(&row[idx_station])?,
                timestamp: parse_timestamp(&row[idx_ts], schema.utc_offset_secs)?,
                pm25: parse_f64(&row[idx_pm25], "pm25")?,
                pm10: parse_f64(&row[idx_pm10], "pm10")?,
                temperature_c: parse_f64(&row[idx_temp], "temperature")?,
                humidity_rh: parse_f64(&row[idx_hum], "humidity")?,
            };
            record.validate()?;
            Ok(record)
        })();
        match parsed {
            Ok(r) => records.push(r),
            Err(e) => reject(e.to_string()),
        }
    }

    records.sort_by_key(|r| (r.station, r.timestamp));
    Ok(SensorLoad { records, rejects })
}

/// Write records in the canonical sensor column order.
pub fn write_sensor_csv(path: &Path, records: &[SensorRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "timestamp,station_id,pm25,pm10,temperature,humidity")
        .map_err(|e| Error::io(path, e))?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.timestamp, r.station, r.pm25, r.pm10, r.temperature_c, r.humidity_rh
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Load station geometry: `station_id,longitude,latitude`.
pub fn load_station_csv(path: &Path) -> Result<Vec<(StationId, GeoPoint)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let idx_id = header_index(&headers, "station_id", path)?;
    let idx_lon = header_index(&headers, "longitude", path)?;
    let idx_lat = header_index(&headers, "latitude", path)?;

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        out.push((
            parse_station(&row[idx_id])?,
            GeoPoint::new(
                parse_f64(&row[idx_lon], "longitude")?,
                parse_f64(&row[idx_lat], "latitude")?,
            )?,
        ));
    }
    Ok(out)
}

pub fn write_station_csv(path: &Path, stations: &[(StationId, GeoPoint)]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "station_id,longitude,latitude").map_err(|e| Error::io(path, e))?;
    for (id, p) in stations {
        writeln!(w, "{},{},{}", id, p.longitude_deg, p.latitude_deg)
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Load an image manifest: `path,timestamp,altitude_class,camera_tag`.
pub fn load_image_manifest(path: &Path, utc_offset_secs: i64) -> Result<Vec<ImageRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let idx_path = header_index(&headers, "path", path)?;
    let idx_ts = header_index(&headers, "timestamp", path)?;
    let idx_alt = header_index(&headers, "altitude_class", path)?;
    let idx_tag = header_index(&headers, "camera_tag", path)?;

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        out.push(ImageRecord {
            path: PathBuf::from(&row[idx_path]),
            timestamp: parse_timestamp(&row[idx_ts], utc_offset_secs)?,
            altitude_class: AltitudeClass::parse(&row[idx_alt])?,
            camera_tag: row[idx_tag].to_string(),
        });
    }
    Ok(out)
}

pub fn write_image_manifest(path: &Path, images: &[ImageRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "path,timestamp,altitude_class,camera_tag").map_err(|e| Error::io(path, e))?;
    for img in images {
        writeln!(
            w,
            "{},{},{},{}",
            img.path.display(),
            img.timestamp,
            img.altitude_class.as_str(),
            img.camera_tag
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

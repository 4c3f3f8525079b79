//! Sensor logs, image manifests, and station geometry.
//!
//! Everything here is a pure read-transform: loaders parse and validate files
//! into immutable structures, alignment pairs images with per-station sensor
//! means, and the distance helpers compute great-circle geometry. Deployments
//! are immutable after construction and safe to share across threads.

mod csv_io;
mod reference;

pub use csv_io::{
    load_image_manifest, load_sensor_csv, load_station_csv, write_image_manifest,
    write_sensor_csv, write_station_csv, RowDiagnostic, SensorLoad, SensorSchema,
};
pub use reference::{published_distances_m, reference_stations, PUBLISHED_STATION_COUNT};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Station index, 1-based. Deployments use P1..P10, numbered by distance
/// from the camera location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(u8);

impl StationId {
    pub const MAX_INDEX: u8 = 10;

    pub fn new(index: u8) -> Result<Self> {
        if index == 0 || index > Self::MAX_INDEX {
            return Err(Error::InvalidValue(format!(
                "station index {index} outside 1..={}",
                Self::MAX_INDEX
            )));
        }
        Ok(StationId(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// WGS84 coordinates in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub longitude_deg: f64,
    pub latitude_deg: f64,
}

impl GeoPoint {
    pub fn new(longitude_deg: f64, latitude_deg: f64) -> Result<Self> {
        if !(-180.0..=180.0).contains(&longitude_deg) {
            return Err(Error::InvalidValue(format!(
                "longitude {longitude_deg} outside [-180, 180]"
            )));
        }
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(Error::InvalidValue(format!(
                "latitude {latitude_deg} outside [-90, 90]"
            )));
        }
        Ok(GeoPoint {
            longitude_deg,
            latitude_deg,
        })
    }
}

/// One reading from a station: PM concentrations plus weather factors,
/// timestamped in UTC seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorRecord {
    pub station: StationId,
    pub timestamp: i64,
    pub pm25: f64,
    pub pm10: f64,
    pub temperature_c: f64,
    pub humidity_rh: f64,
}

impl SensorRecord {
    /// Check the per-record invariants. PM2.5 and PM10 are validated
    /// independently; raw counters may disagree between size bins.
    pub fn validate(&self) -> Result<()> {
        if !self.pm25.is_finite() || self.pm25 < 0.0 {
            return Err(Error::InvalidValue(format!("pm25 {} < 0", self.pm25)));
        }
        if !self.pm10.is_finite() || self.pm10 < 0.0 {
            return Err(Error::InvalidValue(format!("pm10 {} < 0", self.pm10)));
        }
        if !self.humidity_rh.is_finite() || !(0.0..=100.0).contains(&self.humidity_rh) {
            return Err(Error::InvalidValue(format!(
                "humidity {} outside [0, 100]",
                self.humidity_rh
            )));
        }
        if !self.temperature_c.is_finite() {
            return Err(Error::InvalidValue("temperature not finite".into()));
        }
        Ok(())
    }
}

/// Whether an image came from the airborne camera or the fixed ground camera.
/// The altitude class decides which haze feature feeds fusion downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AltitudeClass {
    High,
    Low,
}

impl AltitudeClass {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(AltitudeClass::High),
            "low" => Ok(AltitudeClass::Low),
            other => Err(Error::InvalidValue(format!(
                "altitude class '{other}' (expected 'high' or 'low')"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AltitudeClass::High => "high",
            AltitudeClass::Low => "low",
        }
    }
}

/// Manifest entry for one captured image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub path: PathBuf,
    pub timestamp: i64,
    pub altitude_class: AltitudeClass,
    pub camera_tag: String,
}

/// A full deployment: station geometry, a time-ordered sensor log, and the
/// image manifest. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    stations: Vec<(StationId, GeoPoint)>,
    records: Vec<SensorRecord>,
    images: Vec<ImageRecord>,
    pub date_label: String,
}

impl Deployment {
    /// Build a deployment. Records are sorted by `(timestamp, station)`;
    /// every record must reference a declared station, and station ids must
    /// be unique.
    pub fn new(
        stations: Vec<(StationId, GeoPoint)>,
        mut records: Vec<SensorRecord>,
        images: Vec<ImageRecord>,
        date_label: impl Into<String>,
    ) -> Result<Self> {
        let mut seen = [false; StationId::MAX_INDEX as usize + 1];
        for (id, _) in &stations {
            let slot = &mut seen[id.index() as usize];
            if *slot {
                return Err(Error::InvalidValue(format!("duplicate station {id}")));
            }
            *slot = true;
        }
        for r in &records {
            r.validate()?;
            if !seen[r.station.index() as usize] {
                return Err(Error::InvalidValue(format!(
                    "record at t={} references undeclared station {}",
                    r.timestamp, r.station
                )));
            }
        }
        records.sort_by_key(|r| (r.timestamp, r.station));
        Ok(Deployment {
            stations,
            records,
            images,
            date_label: date_label.into(),
        })
    }

    pub fn stations(&self) -> &[(StationId, GeoPoint)] {
        &self.stations
    }

    pub fn records(&self) -> &[SensorRecord] {
        &self.records
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    /// Position of a station in the `stations()` ordering.
    pub fn station_position(&self, id: StationId) -> Option<usize> {
        self.stations.iter().position(|(s, _)| *s == id)
    }

    /// Pairwise great-circle distances between declared stations, in meters,
    /// indexed like `stations()`.
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        distance_matrix(&self.stations)
    }

    /// Pair every image with per-station mean PM2.5 over `±window_secs`.
    pub fn align_images_to_sensors(&self, window_secs: i64) -> Result<AlignmentResult> {
        align_images_to_sensors(self, window_secs)
    }
}

/// Great-circle (haversine) distance in meters.
pub fn pairwise_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.latitude_deg.to_radians();
    let lat2 = b.latitude_deg.to_radians();
    let dlat = (b.latitude_deg - a.latitude_deg).to_radians();
    let dlon = (b.longitude_deg - a.longitude_deg).to_radians();

    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    let c = 2.0 * h.sqrt().atan2((1.0 - h).sqrt());
    EARTH_RADIUS_M * c
}

/// Symmetric zero-diagonal distance matrix for a station list.
pub fn distance_matrix(stations: &[(StationId, GeoPoint)]) -> Vec<Vec<f64>> {
    let n = stations.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pairwise_distance(stations[i].1, stations[j].1);
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    m
}

/// One image paired with per-station mean PM2.5 around its timestamp.
/// `pm25_by_station` is indexed like `Deployment::stations()`; stations with
/// no record inside the window are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedImage {
    pub image_index: usize,
    pub timestamp: i64,
    pub pm25_by_station: Vec<Option<f64>>,
}

/// Alignment output: usable images plus diagnostics for excluded ones.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub aligned: Vec<AlignedImage>,
    pub excluded: Vec<String>,
}

fn align_images_to_sensors(deployment: &Deployment, window_secs: i64) -> Result<AlignmentResult> {
    if window_secs <= 0 {
        return Err(Error::InvalidConfig(format!(
            "alignment window must be positive, got {window_secs}"
        )));
    }

    let records = deployment.records();
    let n_stations = deployment.stations().len();
    let mut aligned = Vec::new();
    let mut excluded = Vec::new();

    for (image_index, img) in deployment.images().iter().enumerate() {
        let lo = img.timestamp - window_secs;
        let hi = img.timestamp + window_secs;
        // records are sorted by timestamp
        let start = records.partition_point(|r| r.timestamp < lo);
        let end = records.partition_point(|r| r.timestamp <= hi);

        let mut sums = vec![0.0f64; n_stations];
        let mut counts = vec![0usize; n_stations];
        for r in &records[start..end] {
            if let Some(pos) = deployment.station_position(r.station) {
                sums[pos] += r.pm25;
                counts[pos] += 1;
            }
        }

        if counts.iter().all(|&c| c == 0) {
            excluded.push(format!(
                "image {} (t={}) has no sensor records within ±{}s",
                img.path.display(),
                img.timestamp,
                window_secs
            ));
            continue;
        }

        let pm25_by_station = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { None } else { Some(s / c as f64) })
            .collect();
        aligned.push(AlignedImage {
            image_index,
            timestamp: img.timestamp,
            pm25_by_station,
        });
    }

    Ok(AlignmentResult { aligned, excluded })
}

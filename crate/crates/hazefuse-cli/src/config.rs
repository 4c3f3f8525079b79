//! Run configuration: a flat `key = value` file merged with CLI flags.
//!
//! Precedence is flag > config file > built-in default. Lines starting with
//! `#` are comments. Keys are dotted, e.g. `schema.pm25` or `patch.omega`.

use std::collections::BTreeMap;
use std::path::Path;

use hazefuse::dataset_io::SensorSchema;
use hazefuse::error::{Error, Result};
use hazefuse::haze_features::PatchConfig;

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidConfig(format!(
                    "{}:{}: expected 'key = value', got '{line}'",
                    path.display(),
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("config key '{key}' has unparseable value '{raw}'"))
            }),
        }
    }

    /// Snapshot of every key for the run manifest.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn sensor_schema(&self) -> Result<SensorSchema> {
        let mut schema = SensorSchema::default();
        if let Some(v) = self.get("schema.timestamp") {
            schema.timestamp = v.to_string();
        }
        if let Some(v) = self.get("schema.station_id") {
            schema.station_id = v.to_string();
        }
        if let Some(v) = self.get("schema.pm25") {
            schema.pm25 = v.to_string();
        }
        if let Some(v) = self.get("schema.pm10") {
            schema.pm10 = v.to_string();
        }
        if let Some(v) = self.get("schema.temperature") {
            schema.temperature = v.to_string();
        }
        if let Some(v) = self.get("schema.humidity") {
            schema.humidity = v.to_string();
        }
        if let Some(v) = self.parsed::<i64>("schema.utc_offset_secs")? {
            schema.utc_offset_secs = v;
        }
        Ok(schema)
    }

    pub fn patch_config(&self) -> Result<PatchConfig> {
        let mut patch = PatchConfig::default();
        if let Some(v) = self.parsed::<usize>("patch.radius")? {
            patch.patch_radius = v;
        }
        if let Some(v) = self.parsed::<f64>("patch.omega")? {
            patch.omega = v;
        }
        if let Some(v) = self.parsed::<f64>("patch.bright_fraction")? {
            patch.bright_fraction = v;
        }
        patch.validate()?;
        Ok(patch)
    }
}

/// flag > config file > default
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

//! Run manifests: one `manifest.json` beside every command's outputs with a
//! snapshot of the resolved settings, the crate version, and the seed.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use hazefuse::error::{Error, Result};
use serde_json::{json, Map, Value};

pub struct Manifest {
    command: &'static str,
    settings: Map<String, Value>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Manifest {
            command,
            settings: Map::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.settings.insert(key.to_string(), value.into());
        self
    }

    pub fn set_path(&mut self, key: &str, path: &Path) -> &mut Self {
        self.set(key, path.display().to_string())
    }

    pub fn write(&self, out_dir: &Path, file_config: &crate::config::FileConfig) -> Result<()> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let config_snapshot: Map<String, Value> = file_config
            .entries()
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .collect();
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "created_unix": created,
            "settings": Value::Object(self.settings.clone()),
            "config_file": Value::Object(config_snapshot),
        });
        let path = out_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&doc).expect("serializable"))
            .map_err(|e| Error::io(&path, e))
    }
}

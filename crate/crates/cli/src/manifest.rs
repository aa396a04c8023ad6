use crate::error::{io_error, CliResult};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Everything needed to reproduce the files a command wrote.
///
/// No timestamps or host details: two runs with equal manifests produce
/// byte-identical outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: &impl Serialize) -> Self {
        Self {
            command: command.to_string(),
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            seeds: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            outputs: Vec::new(),
            version: format!("medgtest {}", env!("CARGO_PKG_VERSION")),
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    /// Writes `contents` to `path` and records it as an output.
    pub fn emit(&mut self, path: &Path, contents: &str) -> CliResult<()> {
        std::fs::write(path, contents).map_err(io_error(path))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Writes the manifest as `<primary>.manifest.json` and returns its path.
    pub fn finish(self, primary: &Path) -> CliResult<PathBuf> {
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let mut text = serde_json::to_string_pretty(&self).expect("manifest is plain data");
        text.push('\n');
        std::fs::write(&path, text).map_err(io_error(&path))?;
        Ok(path)
    }
}

/// Sibling path with an extra suffix, e.g. `run.json` → `run.json.log.json`.
pub fn sibling(primary: &Path, suffix: &str) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

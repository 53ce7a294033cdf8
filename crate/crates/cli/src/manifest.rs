//! Provenance record written with every output artifact.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use skgkit::format::SEPARATORS_VERSION;

use crate::config::Config;
use crate::io::{sidecar, to_json, write_bytes};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: &'static str,
    pub separators_version: &'static str,
    pub config: Config,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Seconds since the Unix epoch; the only field that varies between
    /// otherwise identical runs.
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config, inputs: &[&Path], outputs: &[&Path]) -> Self {
        let show = |ps: &[&Path]| ps.iter().map(|p| p.display().to_string()).collect();
        RunManifest {
            command: command.to_string(),
            toolkit_version: TOOLKIT_VERSION,
            separators_version: SEPARATORS_VERSION,
            config: config.clone(),
            inputs: show(inputs),
            outputs: show(outputs),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// Writes `<output>.manifest.json` beside a file output, or to the
    /// explicit path. Nothing is written for stdout without an explicit path.
    pub fn write_beside(&self, output: &Path, explicit: Option<&Path>) -> anyhow::Result<Option<PathBuf>> {
        let Some(path) = explicit
            .map(Path::to_path_buf)
            .or_else(|| sidecar(output, ".manifest.json"))
        else {
            return Ok(None);
        };
        write_bytes(&path, &to_json(self)?)?;
        Ok(Some(path))
    }
}

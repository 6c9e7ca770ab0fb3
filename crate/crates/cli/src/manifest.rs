use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub sbsim: &'static str,
    pub config_format: u32,
    pub episode_format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            sbsim: env!("CARGO_PKG_VERSION"),
            config_format: sbsim_core::config::CONFIG_VERSION,
            episode_format: sbsim_core::episode::EPISODE_VERSION,
        }
    }
}

/// Record of one CLI invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// sha256 of the primary input file.
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub start: String,
    pub end: String,
    pub outputs: Vec<PathBuf>,
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, start: DateTime<Utc>) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            config_hash: None,
            seed: None,
            versions: Versions::default(),
            start: timestamp(start),
            end: String::new(),
            outputs: Vec::new(),
        }
    }

    /// Stamps the end time and writes through a temporary file in the
    /// target directory, renamed into place.
    pub fn write(mut self, path: &Path) -> Result<()> {
        self.end = timestamp(Utc::now());
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer_pretty(&mut tmp, &self)?;
        tmp.write_all(b"\n")?;
        tmp.persist(path)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}

/// `dir/manifest.json` for directory outputs, `file.manifest.json` otherwise.
pub fn default_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("manifest.json")
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        out.with_file_name(name)
    }
}

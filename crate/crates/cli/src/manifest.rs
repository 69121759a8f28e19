//! Run manifests: a JSON record written next to every artifact a command
//! produces, holding enough to rerun the command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector, program name excluded.
    pub args: Vec<String>,
    /// Hex hashes of the configurations the command read.
    pub config_hashes: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: Vec<PathBuf>,
    pub wall_clock_secs: f64,
    pub engine_version: String,
}

impl RunManifest {
    pub fn start(command: &str) -> (Self, Instant) {
        let m = Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config_hashes: BTreeMap::new(),
            seeds: BTreeMap::new(),
            artifacts: Vec::new(),
            wall_clock_secs: 0.0,
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        (m, Instant::now())
    }

    pub fn config(&mut self, name: &str, hash: u64) {
        self.config_hashes.insert(name.to_string(), format!("{hash:016x}"));
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_string(), seed);
    }

    /// `<artifact>.manifest.json`, or `manifest.json` inside a directory artifact.
    pub fn path_for(artifact: &Path) -> PathBuf {
        if artifact.is_dir() {
            return artifact.join("manifest.json");
        }
        let mut name = artifact.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        artifact.with_file_name(name)
    }

    /// Stamps the elapsed time and writes the manifest for the first artifact.
    pub fn finish(mut self, started: Instant) -> std::io::Result<PathBuf> {
        self.wall_clock_secs = started.elapsed().as_secs_f64();
        let first = self.artifacts.first().cloned().unwrap_or_else(|| PathBuf::from("."));
        let path = Self::path_for(&first);
        let json = serde_json::to_string_pretty(&self).expect("manifest serialises");
        std::fs::write(&path, json + "\n")?;
        Ok(path)
    }
}

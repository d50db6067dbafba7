// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// Everything needed to regenerate a run's record files byte for byte.
/// Timestamps are informational only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub master_seed: u64,
    pub parameters: BTreeMap<String, Value>,
    pub started: String,
    pub finished: String,
    pub output_paths: Vec<String>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    /// Starts a manifest stamped with the current time.
    pub fn start(tool_version: &str, command: &str, master_seed: u64) -> Self {
        let started = now();
        Self {
            tool_version: tool_version.to_string(),
            command: command.to_string(),
            master_seed,
            parameters: BTreeMap::new(),
            finished: started.clone(),
            started,
            output_paths: Vec::new(),
        }
    }

    pub fn with_parameter(mut self, key: &str, value: impl Serialize) -> Result<Self> {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn finish(&mut self, output_paths: impl IntoIterator<Item = String>) {
        self.output_paths.extend(output_paths);
        self.finished = now();
    }
}

pub fn emit_manifest(manifest: &RunManifest, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip_has_seed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut m = RunManifest::start("0.1.0", "sweep", 42)
            .with_parameter("v_grid", [0.1, 0.5, 0.95])
            .unwrap();
        m.finish(["out.csv".to_string()]);
        emit_manifest(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let json: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["master_seed"], 42);
        assert_eq!(json["parameters"]["v_grid"][2], 0.95);
        assert_eq!(load_manifest(&path).unwrap(), m);
    }

    #[test]
    fn io_failure_surfaces() {
        let m = RunManifest::start("0.1.0", "simulate", 1);
        assert!(emit_manifest(&m, Path::new("/nonexistent-dir/m.json")).is_err());
    }
}

//! Deterministic result export: artifact files, `report.json`, and the
//! run manifest. Identical config plus seed reproduces byte-identical
//! output; every float in the files goes through fixed formatting and
//! there is no wall-clock anywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cases::CaseRun;
use crate::error::Result;

/// Writes a finished run into `dir` and returns the paths written,
/// `report.json` last.
pub fn export(run: &CaseRun, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in &run.files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.bytes)?;
        written.push(path);
    }
    let mut json = serde_json::to_string_pretty(&run.report)
        .map_err(|e| crate::error::HarnessError::Runtime(e.to_string()))?;
    json.push('\n');
    let report_path = dir.join("report.json");
    std::fs::write(&report_path, json)?;
    written.push(report_path);
    Ok(written)
}

/// One manifest row per scenario of a `simulate` invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub case: String,
    pub seed: u64,
    /// Seed actually used after per-index isolation (seed ^ index).
    pub effective_seed: u64,
    pub report: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenarios: Vec<ManifestEntry>,
}

pub fn write_manifest(dir: &Path, entries: Vec<ManifestEntry>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest {
        scenarios: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| crate::error::HarnessError::Runtime(e.to_string()))?;
    json.push('\n');
    let path = dir.join("manifest.json");
    std::fs::write(&path, json)?;
    Ok(path)
}

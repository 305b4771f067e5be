use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::sha256_hex;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Every regular file of an output directory except the manifest itself,
/// sorted by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

fn scan(dir: &Path) -> Result<Manifest> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(Error::at_path(dir))? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == MANIFEST_FILE || !entry.file_type()?.is_file() {
            continue;
        }
        let bytes = std::fs::read(entry.path()).map_err(Error::at_path(entry.path()))?;
        files.push(ManifestEntry {
            path: name,
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(Manifest { files })
}

pub fn write_manifest(dir: &Path) -> Result<Manifest> {
    let m = scan(dir)?;
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").map_err(Error::at_path(&path))?;
    Ok(m)
}

/// Problems with a directory's manifest: missing files, orphans and
/// checksum mismatches. Empty when the manifest is closed and current.
pub fn check_manifest(dir: &Path) -> Result<Vec<String>> {
    let path = dir.join(MANIFEST_FILE);
    let recorded: Manifest = serde_json::from_slice(&std::fs::read(&path).map_err(Error::at_path(&path))?)?;
    let actual = scan(dir)?;
    let mut problems = Vec::new();
    for e in &recorded.files {
        match actual.files.iter().find(|a| a.path == e.path) {
            None => problems.push(format!("missing: {}", e.path)),
            Some(a) if a != e => problems.push(format!("changed: {}", e.path)),
            Some(_) => {}
        }
    }
    for a in &actual.files {
        if !recorded.files.iter().any(|e| e.path == a.path) {
            problems.push(format!("orphan: {}", a.path));
        }
    }
    Ok(problems)
}

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory, '/'-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub status: String,
    pub error: Option<String>,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub files: Vec<ManifestEntry>,
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<ManifestEntry>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            walk(root, &path, out)?;
            continue;
        }
        let rel = path.strip_prefix(root).map_err(|e| Error::Io(e.to_string()))?;
        let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        let rel = rel.join("/");
        if rel == MANIFEST_NAME {
            continue;
        }
        out.push(ManifestEntry {
            sha256: hash_file(&path)?,
            bytes: e.metadata()?.len(),
            path: rel,
        });
    }
    Ok(())
}

impl Manifest {
    /// Hashes every file under `dir` except the manifest itself.
    pub fn collect(dir: &Path, status: &str, error: Option<String>) -> Result<Manifest> {
        let mut files = Vec::new();
        walk(dir, dir, &mut files)?;
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(Manifest {
            status: status.into(),
            error,
            created,
            files,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(dir.join(MANIFEST_NAME), body + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Manifest> {
        let body = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        serde_json::from_str(&body).map_err(|e| Error::Io(e.to_string()))
    }

    /// Files whose current hash differs from the recorded one, plus files on
    /// disk missing from the manifest.
    pub fn mismatches(&self, dir: &Path) -> Result<Vec<String>> {
        let mut now = Vec::new();
        walk(dir, dir, &mut now)?;
        let mut bad = Vec::new();
        for e in &now {
            match self.files.iter().find(|f| f.path == e.path) {
                Some(f) if f.sha256 == e.sha256 => {}
                _ => bad.push(e.path.clone()),
            }
        }
        for f in &self.files {
            if !now.iter().any(|e| e.path == f.path) {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}

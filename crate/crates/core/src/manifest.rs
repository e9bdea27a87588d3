//! SHA-256 manifest over an output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::RNG_ALGORITHM;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub rng_algorithm: String,
    /// Resolved experiment parameters.
    pub parameters: serde_json::Value,
    /// Seconds since the Unix epoch when the manifest was written.
    pub created_unix: u64,
    pub files: Vec<ManifestEntry>,
}

/// A file whose current contents disagree with the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub path: String,
    pub reason: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn entry(outdir: &Path, rel: &str) -> Result<ManifestEntry> {
    let path = outdir.join(rel);
    let data = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(ManifestEntry {
        path: rel.to_string(),
        bytes: data.len() as u64,
        sha256: sha256_hex(&data),
    })
}

/// Hashes `files` (relative to `outdir`) and writes `manifest.json`. The
/// manifest never lists itself, and each file is listed once, sorted by path.
pub fn write_manifest(
    outdir: &Path,
    files: &[String],
    tool_version: &str,
    parameters: serde_json::Value,
) -> Result<PathBuf> {
    let mut names: Vec<&String> = files
        .iter()
        .filter(|f| f.as_str() != MANIFEST_FILE)
        .collect();
    names.sort();
    names.dedup();
    let files = names
        .into_iter()
        .map(|f| entry(outdir, f))
        .collect::<Result<Vec<_>>>()?;
    let created_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        tool_version: tool_version.to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        parameters,
        created_unix,
        files,
    };
    let path = outdir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Manifest {
        path: path.clone(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(outdir: &Path) -> Result<Manifest> {
    let path = outdir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path,
        message: e.to_string(),
    })
}

/// Recomputes every listed hash. An empty result means the directory matches.
pub fn verify_manifest(outdir: &Path) -> Result<Vec<Mismatch>> {
    let manifest = read_manifest(outdir)?;
    let mut out = Vec::new();
    for e in &manifest.files {
        match fs::read(outdir.join(&e.path)) {
            Err(err) => out.push(Mismatch {
                path: e.path.clone(),
                reason: format!("unreadable: {err}"),
            }),
            Ok(data) => {
                if data.len() as u64 != e.bytes {
                    out.push(Mismatch {
                        path: e.path.clone(),
                        reason: format!("size {} != recorded {}", data.len(), e.bytes),
                    });
                } else if sha256_hex(&data) != e.sha256 {
                    out.push(Mismatch {
                        path: e.path.clone(),
                        reason: "sha256 differs".into(),
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn round_trip_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), b"x,y\n1,2\n").unwrap();
        fs::write(dir.path().join("b.csv"), b"z\n").unwrap();
        let files = vec![
            "b.csv".to_string(),
            "a.csv".to_string(),
            MANIFEST_FILE.to_string(),
        ];
        write_manifest(dir.path(), &files, "0.0.0", serde_json::json!({"seed": 1})).unwrap();
        let m = read_manifest(dir.path()).unwrap();
        let paths: Vec<_> = m.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["a.csv", "b.csv"]);
        assert!(verify_manifest(dir.path()).unwrap().is_empty());

        fs::write(dir.path().join("a.csv"), b"x,y\n1,3\n").unwrap();
        let bad = verify_manifest(dir.path()).unwrap();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].path, "a.csv");

        fs::remove_file(dir.path().join("b.csv")).unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap().len(), 2);
    }

    #[test]
    fn missing_manifest_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(verify_manifest(dir.path()).is_err());
    }
}

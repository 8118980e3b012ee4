//! Output directory handling: lock file, atomic writes and the
//! content-addressed manifest.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::{debug, info};

use crate::error::{CliError, IoContext};

pub const MANIFEST: &str = "manifest.json";
pub const LOCK: &str = ".simpact.lock";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub sha256: String,
    pub bytes: u64,
    pub stage: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageRecord {
    pub params: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_fingerprint: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_fingerprint: Option<String>,
    pub stages: BTreeMap<String, StageRecord>,
    pub artifacts: BTreeMap<String, Artifact>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            tool: "simpact".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: 0,
            key_fingerprint: None,
            stages: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        }
    }
}

pub fn sha256_file(path: &Path) -> Result<(String, u64), CliError> {
    let mut f = File::open(path).at(path)?;
    let mut h = Sha256::new();
    let n = io::copy(&mut f, &mut h).at(path)?;
    Ok((hex::encode(h.finalize()), n))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// An output directory held under its lock file for one command.
pub struct Workspace {
    root: PathBuf,
    pub manifest: Manifest,
    _lock: LockGuard,
}

impl Workspace {
    pub fn open(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).at(root)?;
        let lock_path = root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => return Err(CliError::Locked(root.to_path_buf())),
            Err(e) => return Err(CliError::Io { path: lock_path, source: e }),
        }
        let lock = LockGuard(lock_path);
        let mpath = root.join(MANIFEST);
        let manifest = match fs::read(&mpath) {
            Ok(bytes) => {
                serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", mpath.display())))?
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Manifest::default(),
            Err(e) => return Err(CliError::Io { path: mpath, source: e }),
        };
        Ok(Self { root: root.to_path_buf(), manifest, _lock: lock })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Manifest key for `path`: relative with `/` separators when inside
    /// the output directory, as given otherwise.
    pub fn key_for(&self, path: &Path) -> String {
        match path.strip_prefix(&self.root) {
            Ok(rel) => rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
            Err(_) => path.display().to_string(),
        }
    }

    /// Writes through a sibling temp file and renames it into place.
    pub fn write_atomic(&self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.path(rel);
        write_atomic(&target, bytes)
    }

    fn input_digests(&self, inputs: &[PathBuf]) -> Result<BTreeMap<String, String>, CliError> {
        inputs.iter().map(|p| Ok((self.key_for(p), sha256_file(p)?.0))).collect()
    }

    /// True when `stage` last ran with the same params and inputs and all
    /// of its outputs are still on disk with the recorded digests.
    pub fn is_fresh(&self, stage: &str, params: &str, inputs: &[PathBuf]) -> Result<bool, CliError> {
        let Some(rec) = self.manifest.stages.get(stage) else { return Ok(false) };
        if rec.params != params || rec.inputs != self.input_digests(inputs)? {
            return Ok(false);
        }
        for out in &rec.outputs {
            let p = self.path(out);
            let Some(art) = self.manifest.artifacts.get(out) else { return Ok(false) };
            if !p.exists() || sha256_file(&p)?.0 != art.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Records a completed stage and persists the manifest. Artifacts the
    /// stage produced before but not this time are dropped from it.
    pub fn record(
        &mut self,
        stage: &str,
        params: &str,
        seed: u64,
        key_fingerprint: Option<String>,
        inputs: &[PathBuf],
        outputs: Vec<String>,
    ) -> Result<(), CliError> {
        let inputs = self.input_digests(inputs)?;
        let stale: Vec<String> = self
            .manifest
            .artifacts
            .iter()
            .filter(|(k, a)| a.stage == stage && !outputs.contains(k))
            .map(|(k, _)| k.clone())
            .collect();
        for k in stale {
            let _ = fs::remove_file(self.path(&k));
            self.manifest.artifacts.remove(&k);
        }
        for out in &outputs {
            let (sha256, bytes) = sha256_file(&self.path(out))?;
            debug!(artifact = %out, %sha256, "recorded");
            self.manifest.artifacts.insert(out.clone(), Artifact { sha256, bytes, stage: stage.to_string() });
        }
        self.manifest.seed = seed;
        if key_fingerprint.is_some() {
            self.manifest.key_fingerprint = key_fingerprint.clone();
        }
        self.manifest.stages.insert(
            stage.to_string(),
            StageRecord { params: params.to_string(), seed, key_fingerprint, inputs, outputs },
        );
        self.save()
    }

    /// Re-hashes artifacts that another stage rewrote in place.
    pub fn refresh(&mut self, rels: &[String]) -> Result<(), CliError> {
        for rel in rels {
            let p = self.path(rel);
            if !p.exists() {
                self.manifest.artifacts.remove(rel);
                continue;
            }
            let (sha256, bytes) = sha256_file(&p)?;
            if let Some(a) = self.manifest.artifacts.get_mut(rel) {
                a.sha256 = sha256;
                a.bytes = bytes;
            }
        }
        self.save()
    }

    pub fn save(&self) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        self.write_atomic(MANIFEST, text.as_bytes())?;
        info!(artifacts = self.manifest.artifacts.len(), "manifest updated");
        Ok(())
    }
}

pub fn write_atomic(target: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = target.parent() {
        fs::create_dir_all(parent).at(parent)?;
    }
    let name = target.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = target.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = File::create(&tmp).at(&tmp)?;
    f.write_all(bytes).at(&tmp)?;
    f.sync_all().at(&tmp)?;
    drop(f);
    fs::rename(&tmp, target).at(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        assert!(matches!(Workspace::open(dir.path()), Err(CliError::Locked(_))));
        drop(ws);
        assert!(Workspace::open(dir.path()).is_ok());
    }

    #[test]
    fn freshness_tracks_inputs_and_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        fs::write(&input, "a").unwrap();
        let mut ws = Workspace::open(&dir.path().join("out")).unwrap();
        assert!(!ws.is_fresh("s", "p", std::slice::from_ref(&input)).unwrap());
        ws.write_atomic("x/o.txt", b"out").unwrap();
        ws.record("s", "p", 1, None, std::slice::from_ref(&input), vec!["x/o.txt".into()]).unwrap();
        assert!(ws.is_fresh("s", "p", std::slice::from_ref(&input)).unwrap());
        assert!(!ws.is_fresh("s", "q", std::slice::from_ref(&input)).unwrap());
        fs::write(&input, "b").unwrap();
        assert!(!ws.is_fresh("s", "p", std::slice::from_ref(&input)).unwrap());
        ws.record("s", "p", 1, None, std::slice::from_ref(&input), vec!["x/o.txt".into()]).unwrap();
        fs::write(ws.path("x/o.txt"), "tampered").unwrap();
        assert!(!ws.is_fresh("s", "p", &[input]).unwrap());
        assert_eq!(ws.manifest.artifacts["x/o.txt"].sha256, sha256_hex(b"out"));
    }
}

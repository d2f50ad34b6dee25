//! Workspace directory: one subdirectory per stage, each completed by a
//! manifest whose fingerprint covers the stage's inputs and settings.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use egolink_core::ego::SplitSet;
use egolink_core::DegreeClass;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, IoContext, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Split,
    Score,
    Rank,
    Aggregate,
    Merge,
    Eval,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Split => "split",
            Stage::Score => "score",
            Stage::Rank => "rank",
            Stage::Aggregate => "aggregate",
            Stage::Merge => "merge",
            Stage::Eval => "eval",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub fingerprint: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_start: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_end: Option<i64>,
}

/// Exclusive hold on a workspace, released on drop.
pub struct Workspace {
    root: PathBuf,
    lock: PathBuf,
}

impl Workspace {
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).at(root)?;
        let lock = root.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(CliError::data(format!(
                    "workspace {} is locked; remove {} if no other egolink process is using it",
                    root.display(),
                    lock.display()
                )))
            }
            Err(e) => return Err(CliError::data(format!("{}: {e}", lock.display()))),
        }
        Ok(Self {
            root: root.to_path_buf(),
            lock,
        })
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.name())
    }

    fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("manifest.toml")
    }

    pub fn manifest(&self, stage: Stage) -> Result<Option<Manifest>> {
        let path = self.manifest_path(stage);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).at(&path)?;
        toml::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    /// The manifest of a stage that must already have run.
    pub fn require(&self, stage: Stage, by: Stage) -> Result<Manifest> {
        self.manifest(stage)?.ok_or_else(|| {
            CliError::data(format!(
                "stage `{}` needs the output of stage `{}`; run `egolink {}` first",
                by.name(),
                stage.name(),
                stage.name()
            ))
        })
    }

    /// Clears a stage directory before recomputing it.
    pub fn reset(&self, stage: Stage) -> Result<PathBuf> {
        let dir = self.stage_dir(stage);
        if dir.exists() {
            fs::remove_dir_all(&dir).at(&dir)?;
        }
        fs::create_dir_all(&dir).at(&dir)?;
        Ok(dir)
    }

    /// Marks a stage complete. Written last, so an interrupted stage reruns.
    pub fn complete(&self, stage: Stage, manifest: &Manifest) -> Result<()> {
        let path = self.manifest_path(stage);
        let text = toml::to_string(manifest).map_err(CliError::internal)?;
        fs::write(&path, text).at(&path)
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// Hex SHA-256 over labelled parts.
pub fn fingerprint(parts: &[(&str, &[u8])]) -> String {
    let mut hasher = Sha256::new();
    for (label, bytes) in parts {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    hex::encode(hasher.finalize())
}

pub fn file_digest(path: &Path) -> Result<String> {
    let mut file = BufReader::new(File::open(path).at(path)?);
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher).at(path)?;
    Ok(hex::encode(hasher.finalize()))
}

/// Directory name for a degree class: `k8`, `k15plus`.
pub fn class_dir(class: DegreeClass) -> String {
    match class {
        DegreeClass::Exact(k) => format!("k{k}"),
        DegreeClass::AtLeast(k) => format!("k{k}plus"),
    }
}

pub fn set_dir(root: &Path, class: DegreeClass, set: SplitSet) -> PathBuf {
    root.join(class_dir(class)).join(set.as_str())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).at(parent)?;
    }
    Ok(BufWriter::new(File::create(path).at(path)?))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).at(path)?))
}

/// Writes through a closure and flushes, attaching the path to errors.
pub fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut out = create(path)?;
    body(&mut out).at(path)?;
    out.flush().at(path)
}

//! Re-hashes a run directory's config and checks every artifact against it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::PipelineConfig;
use crate::context::CONFIG_FILE;
use crate::digest::sha256_hex;
use crate::error::{io_err, CliError, Result};
use crate::neeg::{read_json, write_json, DATA_FILE, MANIFEST_FILE};
use serde::{Deserialize, Serialize};

pub const INDEX_FILE: &str = "index.json";

/// Digest of every file in a directory tree, written when a command finishes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactIndex {
    pub config_hash: String,
    /// Relative path (forward slashes) to SHA-256.
    pub files: BTreeMap<String, String>,
}

fn rel_key(dir: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(dir).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

pub fn write_index(dir: &Path, config_hash: &str) -> Result<ArtifactIndex> {
    let mut files = Vec::new();
    walk(dir, &mut files)?;
    let mut index = ArtifactIndex {
        config_hash: config_hash.to_string(),
        files: BTreeMap::new(),
    };
    for path in files {
        if path.file_name().is_some_and(|n| n == INDEX_FILE) {
            continue;
        }
        index.files.insert(rel_key(dir, &path), file_sha(&path)?);
    }
    write_json(&dir.join(INDEX_FILE), &index)?;
    Ok(index)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub config_hash: String,
    pub checked: Vec<PathBuf>,
}

fn walk(dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| io_err(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, files)?;
        } else {
            files.push(p);
        }
    }
    Ok(())
}

fn file_sha(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| io_err(path, e))?))
}

pub fn verify(dir: &Path) -> Result<Verification> {
    let config = PipelineConfig::load(&dir.join(CONFIG_FILE))?;
    let hash = config.hash();
    let mut files = Vec::new();
    walk(dir, &mut files)?;
    let mut problems = Vec::new();
    let mut covered = BTreeSet::new();
    let mut checked = Vec::new();
    let index_path = dir.join(INDEX_FILE);
    if index_path.is_file() {
        let index: ArtifactIndex = read_json(&index_path)?;
        let mut listed: BTreeSet<&String> = index.files.keys().collect();
        for path in files.iter().filter(|p| **p != index_path) {
            let key = rel_key(dir, path);
            match index.files.get(&key) {
                Some(want) if *want == file_sha(path)? => {}
                Some(_) => problems.push(format!("{key}: content differs from {INDEX_FILE}")),
                None => problems.push(format!("{key}: not listed in {INDEX_FILE}")),
            }
            listed.remove(&key);
        }
        problems.extend(
            listed
                .into_iter()
                .map(|k| format!("{k}: listed in {INDEX_FILE} but missing")),
        );
    } else {
        problems.push(format!("{INDEX_FILE} is missing"));
    }

    for path in &files {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or_default();
        let rel = path.strip_prefix(dir).unwrap_or(path).display().to_string();
        if name == CONFIG_FILE {
            match PipelineConfig::load(path) {
                Ok(c) if c.hash() == hash => checked.push(path.clone()),
                Ok(_) => problems.push(format!("{rel}: differs from the root config")),
                Err(e) => problems.push(format!("{rel}: {e}")),
            }
            continue;
        }
        match ext {
            "json" => {
                let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                let v: Value = match serde_json::from_str(&text) {
                    Ok(v) => v,
                    Err(e) => {
                        problems.push(format!("{rel}: {e}"));
                        continue;
                    }
                };
                let stamps: Vec<&Value> = [
                    v.get("config_hash"),
                    v.get("provenance").and_then(|p| p.get("config_hash")),
                ]
                .into_iter()
                .flatten()
                .collect();
                if stamps.is_empty() {
                    problems.push(format!("{rel}: no config_hash"));
                } else if stamps.iter().any(|s| s.as_str() != Some(hash.as_str())) {
                    problems.push(format!("{rel}: config_hash does not match {hash}"));
                }
                let parent = path.parent().unwrap_or(dir);
                if name == MANIFEST_FILE {
                    let data = parent.join(DATA_FILE);
                    covered.insert(data.clone());
                    let want = v
                        .get("data_sha256")
                        .and_then(Value::as_str)
                        .unwrap_or_default();
                    if file_sha(&data)? != want {
                        problems.push(format!(
                            "{rel}: {DATA_FILE} digest does not match the manifest"
                        ));
                    }
                }
                if let Some(list) = v.get("checkpoints").and_then(Value::as_array) {
                    for entry in list {
                        let file = entry
                            .get("file")
                            .and_then(Value::as_str)
                            .unwrap_or_default();
                        let target = parent.join(file);
                        covered.insert(target.clone());
                        if !target.is_file()
                            || file_sha(&target)?
                                != entry
                                    .get("sha256")
                                    .and_then(Value::as_str)
                                    .unwrap_or_default()
                        {
                            problems
                                .push(format!("{rel}: checkpoint {file} is missing or altered"));
                        }
                    }
                }
            }
            "csv" | "svg" => {
                let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                let stamp = format!("config_hash={hash}");
                if !text.lines().take(2).any(|l| l.contains(&stamp)) {
                    problems.push(format!("{rel}: missing or wrong config_hash stamp"));
                }
            }
            "bin" | "ndk" => {}
            _ => problems.push(format!("{rel}: unrecognised artifact")),
        }
        checked.push(path.clone());
    }
    for path in files
        .iter()
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("bin" | "ndk")))
    {
        if !covered.contains(path) {
            problems.push(format!(
                "{}: not referenced by any manifest or report",
                path.strip_prefix(dir).unwrap_or(path).display()
            ));
        }
    }
    if problems.is_empty() {
        Ok(Verification {
            config_hash: hash,
            checked,
        })
    } else {
        Err(CliError::Data(format!(
            "verification failed:\n  {}",
            problems.join("\n  ")
        )))
    }
}

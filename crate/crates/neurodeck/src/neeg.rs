//! The `NEEG1` on-disk format: a directory holding `manifest.json` and
//! `data.bin`. Samples are f32 little-endian, channel-major within a
//! recording and `[epoch][channel][sample]` within an epoch set.

use std::fs;
use std::path::{Path, PathBuf};

use neurodeck_core::dataset::{standard_montage, Channel, EpochSet, Event, Paradigm, Recording};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::error::{io_err, CliError, Result};
use crate::provenance::Provenance;

pub const FORMAT: &str = "NEEG1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Recording,
    Epochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingManifest {
    pub format: String,
    pub kind: Kind,
    pub subject_id: String,
    /// Set when every event belongs to one paradigm.
    pub paradigm: Option<Paradigm>,
    pub fs_hz: f64,
    pub n_samples: usize,
    pub channels: Vec<Channel>,
    pub events: Vec<Event>,
    pub data_sha256: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochLabel {
    pub paradigm: Paradigm,
    pub task: String,
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochsManifest {
    pub format: String,
    pub kind: Kind,
    pub fs_hz: f64,
    pub n_channels: usize,
    pub n_samples: usize,
    pub n_epochs: usize,
    pub class_counts: [usize; 3],
    pub channels: Vec<Channel>,
    pub epochs: Vec<EpochLabel>,
    pub data_sha256: String,
    pub provenance: Provenance,
}

pub fn encode_f32(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect()
}

/// Decodes `expected_values` samples, failing with both byte counts when the
/// buffer has the wrong size.
pub fn decode_f32(bytes: &[u8], expected_values: usize, path: &Path) -> Result<Vec<f64>> {
    let expected = expected_values * 4;
    if bytes.len() != expected {
        return Err(CliError::Data(format!(
            "{}: length mismatch, expected {expected} bytes ({expected_values} f32 samples), found {} bytes",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: malformed manifest: {e}", path.display())))
}

fn check_format(format: &str, kind: Kind, want: Kind, path: &Path) -> Result<()> {
    if format != FORMAT {
        return Err(CliError::Data(format!(
            "{}: format {format:?}, expected {FORMAT}",
            path.display()
        )));
    }
    if kind != want {
        return Err(CliError::Data(format!(
            "{}: holds {kind:?}, expected {want:?}",
            path.display()
        )));
    }
    Ok(())
}

fn write_data(dir: &Path, values: &[f64]) -> Result<String> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let bytes = encode_f32(values);
    let path = dir.join(DATA_FILE);
    fs::write(&path, &bytes).map_err(|e| io_err(&path, e))?;
    Ok(sha256_hex(&bytes))
}

fn read_data(dir: &Path, expected_values: usize) -> Result<Vec<f64>> {
    let path = dir.join(DATA_FILE);
    let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
    decode_f32(&bytes, expected_values, &path)
}

pub fn write_recording(
    dir: &Path,
    rec: &Recording,
    provenance: Provenance,
) -> Result<RecordingManifest> {
    rec.validate()?;
    let data_sha256 = write_data(dir, &rec.data)?;
    let paradigm = rec
        .events
        .first()
        .map(|e| e.paradigm)
        .filter(|&p| rec.events.iter().all(|e| e.paradigm == p));
    let manifest = RecordingManifest {
        format: FORMAT.into(),
        kind: Kind::Recording,
        subject_id: rec.subject_id.clone(),
        paradigm,
        fs_hz: rec.fs_hz,
        n_samples: rec.n_samples,
        channels: rec.channels.clone(),
        events: rec.events.clone(),
        data_sha256,
        provenance,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn read_recording(dir: &Path) -> Result<(Recording, RecordingManifest)> {
    let mpath = dir.join(MANIFEST_FILE);
    let m: RecordingManifest = read_json(&mpath)?;
    check_format(&m.format, m.kind, Kind::Recording, &mpath)?;
    let data = read_data(dir, m.channels.len() * m.n_samples)?;
    let rec = Recording::new(
        m.subject_id.clone(),
        m.fs_hz,
        m.channels.clone(),
        data,
        m.events.clone(),
    )
    .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    Ok((rec, m))
}

pub fn write_epochs(dir: &Path, set: &EpochSet, provenance: Provenance) -> Result<EpochsManifest> {
    set.validate()?;
    let data_sha256 = write_data(dir, &set.data)?;
    let montage = standard_montage();
    if set.n_channels != montage.len() {
        return Err(CliError::Data(format!(
            "{} channels, montage has {}",
            set.n_channels,
            montage.len()
        )));
    }
    let manifest = EpochsManifest {
        format: FORMAT.into(),
        kind: Kind::Epochs,
        fs_hz: set.fs_hz,
        n_channels: set.n_channels,
        n_samples: set.n_samples,
        n_epochs: set.len(),
        class_counts: set.class_counts(),
        channels: montage,
        epochs: (0..set.len())
            .map(|i| EpochLabel {
                paradigm: set.paradigms[i],
                task: set.tasks[i].clone(),
                subject: set.subjects[i].clone(),
            })
            .collect(),
        data_sha256,
        provenance,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn read_epochs(dir: &Path) -> Result<(EpochSet, EpochsManifest)> {
    let mpath = dir.join(MANIFEST_FILE);
    let m: EpochsManifest = read_json(&mpath)?;
    check_format(&m.format, m.kind, Kind::Epochs, &mpath)?;
    if m.epochs.len() != m.n_epochs || m.channels.len() != m.n_channels {
        return Err(CliError::Data(format!(
            "{}: {} labels for {} epochs, {} channel entries for {} channels",
            mpath.display(),
            m.epochs.len(),
            m.n_epochs,
            m.channels.len(),
            m.n_channels
        )));
    }
    let data = read_data(dir, m.n_epochs * m.n_channels * m.n_samples)?;
    let set = EpochSet {
        fs_hz: m.fs_hz,
        n_channels: m.n_channels,
        n_samples: m.n_samples,
        data,
        paradigms: m.epochs.iter().map(|e| e.paradigm).collect(),
        tasks: m.epochs.iter().map(|e| e.task.clone()).collect(),
        subjects: m.epochs.iter().map(|e| e.subject.clone()).collect(),
    };
    set.validate()
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    Ok((set, m))
}

/// Recording directories directly under `root` (or `root` itself), sorted by name.
pub fn find_recordings(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(MANIFEST_FILE).is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| io_err(root, e))? {
        let path = entry.map_err(|e| io_err(root, e))?.path();
        if path.join(MANIFEST_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no {FORMAT} recordings found",
            root.display()
        )));
    }
    Ok(dirs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_round_trip_and_length_error() {
        let v = vec![1.5, -2.25, 1e-3];
        let bytes = encode_f32(&v);
        assert_eq!(bytes.len(), 12);
        let back = decode_f32(&bytes, 3, Path::new("x/data.bin")).unwrap();
        assert_eq!(back[..2], v[..2]);
        assert!((back[2] - 1e-3).abs() < 1e-10);
        let err = decode_f32(&bytes[..10], 3, Path::new("x/data.bin"))
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("expected 12 bytes") && err.contains("found 10 bytes"),
            "{err}"
        );
    }
}

//! On-disk model format: `<base>.manifest.json` + `<base>.weights.bin`.
//!
//! The blob is the canonical flat parameter order as little-endian f32; the
//! manifest pins the architecture, the training provenance, and a SHA-256
//! checksum of the blob. Round-trips are bit-exact.

use std::fs;
use std::path::{Path, PathBuf};

use micronet::{NetworkSpec, ParameterSet};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{build_architecture, ModelError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelManifest {
    pub format_version: u32,
    pub arch_id: String,
    pub input_shape: Vec<usize>,
    pub class_count: usize,
    pub train_split: String,
    pub test_accuracy: f32,
    pub weight_checksum: String,
    pub param_count: usize,
}

impl ModelManifest {
    pub fn new(
        arch_id: impl Into<String>,
        input_shape: Vec<usize>,
        class_count: usize,
        train_split: impl Into<String>,
        test_accuracy: f32,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            arch_id: arch_id.into(),
            input_shape,
            class_count,
            train_split: train_split.into(),
            test_accuracy,
            weight_checksum: String::new(),
            param_count: 0,
        }
    }
}

fn manifest_path(base: &Path) -> PathBuf {
    with_suffix(base, ".manifest.json")
}

fn weights_path(base: &Path) -> PathBuf {
    with_suffix(base, ".weights.bin")
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Strips a trailing `.manifest.json` so callers may pass either form.
pub(crate) fn model_base(path: &Path) -> PathBuf {
    let s = path.to_string_lossy();
    match s.strip_suffix(".manifest.json") {
        Some(stripped) => PathBuf::from(stripped),
        None => path.to_path_buf(),
    }
}

fn blob_bytes(params: &ParameterSet<f32>) -> Vec<u8> {
    let flat = params.flat();
    let mut bytes = Vec::with_capacity(flat.len() * 4);
    for v in flat {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

fn checksum(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the manifest/weights pair. The checksum and parameter count are
/// computed here; any values already present in `manifest` are overwritten.
pub fn save_model(
    spec: &NetworkSpec,
    params: &ParameterSet<f32>,
    manifest: &ModelManifest,
    base: &Path,
) -> Result<()> {
    params.validate_against(spec)?;
    let blob = blob_bytes(params);
    let mut manifest = manifest.clone();
    manifest.format_version = FORMAT_VERSION;
    manifest.weight_checksum = checksum(&blob);
    manifest.param_count = params.numel();

    if let Some(parent) = base.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| ModelError::io(parent, e))?;
        }
    }
    let wpath = weights_path(base);
    fs::write(&wpath, &blob).map_err(|e| ModelError::io(&wpath, e))?;
    let mpath = manifest_path(base);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&mpath, json.as_bytes()).map_err(|e| ModelError::io(&mpath, e))?;
    Ok(())
}

/// Loads and verifies a model pair; accepts the base path or the manifest path.
pub fn load_model(path: &Path) -> Result<(NetworkSpec, ParameterSet<f32>, ModelManifest)> {
    let base = model_base(path);
    let mpath = manifest_path(&base);
    let json = fs::read_to_string(&mpath).map_err(|e| ModelError::io(&mpath, e))?;
    let manifest: ModelManifest = serde_json::from_str(&json)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(ModelError::UnknownFormatVersion(manifest.format_version));
    }

    let spec = build_architecture(&manifest.arch_id, &manifest.input_shape, manifest.class_count)?;

    let wpath = weights_path(&base);
    let blob = fs::read(&wpath).map_err(|e| ModelError::io(&wpath, e))?;
    if blob.len() != manifest.param_count * 4 {
        return Err(ModelError::TruncatedBlob {
            expected: manifest.param_count * 4,
            got: blob.len(),
        });
    }
    let actual = checksum(&blob);
    if actual != manifest.weight_checksum {
        return Err(ModelError::ChecksumMismatch {
            expected: manifest.weight_checksum,
            actual,
        });
    }

    let flat: Vec<f32> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let params = ParameterSet::from_flat(&spec, &flat)?;
    Ok((spec, params, manifest))
}

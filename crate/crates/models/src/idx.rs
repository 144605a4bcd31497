//! IDX image/label files: big-endian magic + dimension header, raw bytes.
//! Pixel bytes map to `[0, 1]` by division by 255.

use std::fs;
use std::path::Path;

use micronet::Tensor;

use crate::{ModelError, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803; // unsigned byte, 3 dims
const LABEL_MAGIC: u32 = 0x0000_0801; // unsigned byte, 1 dim

fn read_u32_be(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(ModelError::IdxFormat(format!(
            "{}: truncated header",
            path.display()
        )));
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

pub fn load_idx_images(path: &Path) -> Result<Vec<Tensor>> {
    let bytes = fs::read(path).map_err(|e| ModelError::io(path, e))?;
    let magic = read_u32_be(&bytes, 0, path)?;
    if magic != IMAGE_MAGIC {
        return Err(ModelError::IdxFormat(format!(
            "{}: bad image magic {magic:#x}",
            path.display()
        )));
    }
    let count = read_u32_be(&bytes, 4, path)? as usize;
    let rows = read_u32_be(&bytes, 8, path)? as usize;
    let cols = read_u32_be(&bytes, 12, path)? as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(ModelError::IdxFormat(format!(
            "{}: {} bytes, header implies {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * rows * cols;
        let data: Vec<f32> = bytes[start..start + rows * cols]
            .iter()
            .map(|&b| b as f32 / 255.0)
            .collect();
        images.push(Tensor::new(vec![rows, cols, 1], data).expect("idx image shape"));
    }
    Ok(images)
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = fs::read(path).map_err(|e| ModelError::io(path, e))?;
    let magic = read_u32_be(&bytes, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(ModelError::IdxFormat(format!(
            "{}: bad label magic {magic:#x}",
            path.display()
        )));
    }
    let count = read_u32_be(&bytes, 4, path)? as usize;
    if bytes.len() != 8 + count {
        return Err(ModelError::IdxFormat(format!(
            "{}: {} bytes, header implies {}",
            path.display(),
            bytes.len(),
            8 + count
        )));
    }
    Ok(bytes[8..].iter().map(|&b| b as usize).collect())
}

/// Writes images back out in IDX form (pixels quantized to bytes).
pub fn write_idx_images(path: &Path, images: &[Tensor]) -> Result<()> {
    let (rows, cols) = match images.first().map(|t| t.shape()) {
        Some([h, w, 1]) => (*h, *w),
        _ => {
            return Err(ModelError::IdxFormat(
                "need at least one [h, w, 1] image".into(),
            ))
        }
    };
    let mut bytes = Vec::with_capacity(16 + images.len() * rows * cols);
    bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(rows as u32).to_be_bytes());
    bytes.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        for &v in img.data() {
            bytes.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    fs::write(path, bytes).map_err(|e| ModelError::io(path, e))
}

pub fn write_idx_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        if l > 255 {
            return Err(ModelError::IdxFormat(format!("label {l} exceeds a byte")));
        }
        bytes.push(l as u8);
    }
    fs::write(path, bytes).map_err(|e| ModelError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("imgs.idx");
        let images: Vec<Tensor> = (0..3)
            .map(|i| {
                Tensor::new(
                    vec![4, 5, 1],
                    (0..20).map(|p| ((p + i) % 256) as f32 / 255.0).collect(),
                )
                .unwrap()
            })
            .collect();
        write_idx_images(&path, &images).unwrap();
        let back = load_idx_images(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in images.iter().zip(&back) {
            assert_eq!(a.shape(), b.shape());
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn label_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.idx");
        write_idx_labels(&path, &[0, 3, 9, 1]).unwrap();
        assert_eq!(load_idx_labels(&path).unwrap(), vec![0, 3, 9, 1]);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.idx");
        std::fs::write(&path, 0x00000805u32.to_be_bytes()).unwrap();
        assert!(matches!(
            load_idx_images(&path),
            Err(ModelError::IdxFormat(_))
        ));
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.idx");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&0x00000803u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&4u32.to_be_bytes());
        bytes.extend_from_slice(&4u32.to_be_bytes());
        bytes.extend_from_slice(&[0u8; 10]); // needs 32
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_idx_images(&path),
            Err(ModelError::IdxFormat(_))
        ));
    }
}

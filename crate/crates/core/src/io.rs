//! Label-mask images and raw probability tensors.
//!
//! Label masks are 8-bit single-channel PNG or PGM files whose pixel values
//! are class ids. Probability fields and gradients are stored as
//! little-endian `f32`, pixel-major and class-minor, next to a JSON sidecar
//! `{"height": H, "width": W, "classes": K}` that shares the file stem.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{LabelMask, ProbMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub height: usize,
    pub width: usize,
    pub classes: usize,
}

pub fn sidecar_path(tensor: &Path) -> PathBuf {
    tensor.with_extension("json")
}

/// Reads a label image. The class count is one past the largest label
/// (at least 2) unless `num_classes` is given.
pub fn read_label_mask(path: &Path, num_classes: Option<usize>) -> Result<LabelMask> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })?;
    let gray = match img {
        DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(Error::Format {
                path: path.to_owned(),
                reason: format!("expected an 8-bit single-channel image, found {:?}", other.color()),
            })
        }
    };
    let (w, h) = gray.dimensions();
    let labels = gray.into_raw();
    match num_classes {
        Some(k) => LabelMask::new(h as usize, w as usize, k, labels),
        None => LabelMask::from_labels(h as usize, w as usize, labels),
    }
}

/// Writes a label image; the format follows the extension (`.png` or `.pgm`).
pub fn write_label_mask(path: &Path, mask: &LabelMask) -> Result<()> {
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, mask.labels().to_vec())
        .expect("label buffer matches dimensions");
    img.save(path).map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

pub fn read_tensor(path: &Path) -> Result<(TensorHeader, Vec<f64>)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|source| Error::Io {
        path: side.clone(),
        source,
    })?;
    let header: TensorHeader = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: side.clone(),
        source,
    })?;
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let expected = header.height * header.width * header.classes * 4;
    if bytes.len() != expected {
        return Err(Error::Format {
            path: path.to_owned(),
            reason: format!(
                "{} bytes, expected {expected} for {}x{}x{} f32 values",
                bytes.len(),
                header.height,
                header.width,
                header.classes
            ),
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    Ok((header, values))
}

pub fn read_prob_map(path: &Path) -> Result<ProbMap> {
    let (h, values) = read_tensor(path)?;
    ProbMap::new(h.height, h.width, h.classes, values)
}

/// Writes `values` as a raw `f32` tensor plus its JSON sidecar.
pub fn write_tensor(path: &Path, header: TensorHeader, values: &[f64]) -> Result<()> {
    if values.len() != header.height * header.width * header.classes {
        return Err(Error::shape(
            "tensor",
            header.height * header.width * header.classes,
            values.len(),
        ));
    }
    let bytes: Vec<u8> = values
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let side = sidecar_path(path);
    let json = serde_json::to_string(&header).expect("header serializes");
    fs::write(&side, json).map_err(|source| Error::Io { path: side, source })
}

pub fn write_prob_map(path: &Path, p: &ProbMap) -> Result<()> {
    write_tensor(
        path,
        TensorHeader {
            height: p.height(),
            width: p.width(),
            classes: p.classes(),
        },
        p.as_slice(),
    )
}

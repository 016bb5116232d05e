use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;
const SIDE: usize = 28;
const POOLED: usize = SIDE / 2;

pub const MNIST_TRAIN_SUBSET: usize = 3000;

/// Down-sampled digits: each row is a 14×14 image flattened row-major, with
/// pixel intensities in `[0, 1]`.
#[derive(Clone, Debug)]
pub struct MnistSubset {
    pub images: DenseMatrix,
    pub labels: Vec<u8>,
}

impl MnistSubset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// First `n` samples.
    pub fn take(&self, n: usize) -> MnistSubset {
        let n = n.min(self.len());
        let idx: Vec<usize> = (0..n).collect();
        MnistSubset {
            images: self.images.select_rows(&idx),
            labels: self.labels[..n].to_vec(),
        }
    }
}

pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<MnistSubset> {
    load_mnist_limit(images_path, labels_path, None)
}

/// Like [`load_mnist`], keeping only the first `limit` samples.
pub fn load_mnist_limit(images_path: &Path, labels_path: &Path, limit: Option<usize>) -> Result<MnistSubset> {
    let img = read_maybe_gz(images_path)?;
    let lab = read_maybe_gz(labels_path)?;

    let dims = parse_header(&img, images_path, IMAGE_MAGIC, 3)?;
    if dims[1] != SIDE || dims[2] != SIDE {
        return Err(Error::SchemaMismatch {
            path: images_path.to_path_buf(),
            detail: format!("images are {}x{}, expected {SIDE}x{SIDE}", dims[1], dims[2]),
        });
    }
    let label_dims = parse_header(&lab, labels_path, LABEL_MAGIC, 1)?;
    if label_dims[0] != dims[0] {
        return Err(Error::SchemaMismatch {
            path: labels_path.to_path_buf(),
            detail: format!("{} labels for {} images", label_dims[0], dims[0]),
        });
    }
    let count = limit.map_or(dims[0], |l| l.min(dims[0]));
    let pixels = &img[16..];
    let labels_raw = &lab[8..];

    let labels: Vec<u8> = labels_raw[..count].to_vec();
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, v)| **v > 9) {
        return Err(Error::LabelOutOfRange { index, value });
    }
    let mut data = Vec::with_capacity(count * POOLED * POOLED);
    for k in 0..count {
        let src = &pixels[k * SIDE * SIDE..(k + 1) * SIDE * SIDE];
        data.extend_from_slice(&downsample_2x2(src));
    }
    Ok(MnistSubset {
        images: DenseMatrix::new(count, POOLED * POOLED, data)?,
        labels,
    })
}

/// Average-pools a 28×28 byte image over 2×2 blocks into 196 values in `[0, 1]`.
pub fn downsample_2x2(pixels: &[u8]) -> Vec<f64> {
    assert_eq!(pixels.len(), SIDE * SIDE, "expected a 28x28 image");
    let mut out = Vec::with_capacity(POOLED * POOLED);
    for r in 0..POOLED {
        for c in 0..POOLED {
            let at = |dr: usize, dc: usize| f64::from(pixels[(2 * r + dr) * SIDE + 2 * c + dc]);
            out.push((at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1)) / (4.0 * 255.0));
        }
    }
    out
}

/// `samples×10` indicator matrix.
pub fn one_hot(labels: &[u8]) -> DenseMatrix {
    DenseMatrix::from_fn(labels.len(), 10, |i, j| if labels[i] as usize == j { 1.0 } else { 0.0 })
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Checks the magic number and payload length; returns the dimensions.
fn parse_header(bytes: &[u8], path: &Path, magic: u32, ndim: usize) -> Result<Vec<usize>> {
    let header = 4 + 4 * ndim;
    if bytes.len() < 4 {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            expected: header,
            found: bytes.len(),
        });
    }
    let found = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes"));
    if found != magic {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    if bytes.len() < header {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            expected: header,
            found: bytes.len(),
        });
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|k| u32::from_be_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().expect("4 bytes")) as usize)
        .collect();
    let payload: usize = dims.iter().product();
    if bytes.len() - header < payload {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            expected: payload,
            found: bytes.len() - header,
        });
    }
    Ok(dims)
}

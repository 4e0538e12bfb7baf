//! Training samples: IDX (MNIST) files and a seeded synthetic substitute.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    /// One-hot label.
    pub y: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("{0} is truncated")]
    Truncated(&'static str),
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {0} out of range")]
    BadLabel(u8),
    #[error("dataset is empty")]
    Empty,
}

pub fn one_hot(class: usize, classes: usize) -> Vec<f64> {
    let mut v = vec![0.0; classes];
    v[class] = 1.0;
    v
}

fn be_u32(bytes: &[u8], at: usize, what: &'static str) -> Result<u32, DatasetError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("four bytes")))
        .ok_or(DatasetError::Truncated(what))
}

/// Images as rows of pixels scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Vec<f64>>, DatasetError> {
    let magic = be_u32(bytes, 0, "image file")?;
    if magic != IMAGES_MAGIC {
        return Err(DatasetError::BadMagic {
            expected: IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4, "image file")? as usize;
    let rows = be_u32(bytes, 8, "image file")? as usize;
    let cols = be_u32(bytes, 12, "image file")? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() < count * size {
        return Err(DatasetError::Truncated("image file"));
    }
    Ok(body
        .chunks_exact(size.max(1))
        .take(count)
        .map(|px| px.iter().map(|&p| f64::from(p) / 255.0).collect())
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, DatasetError> {
    let magic = be_u32(bytes, 0, "label file")?;
    if magic != LABELS_MAGIC {
        return Err(DatasetError::BadMagic {
            expected: LABELS_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4, "label file")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(DatasetError::Truncated("label file"));
    }
    Ok(body[..count].to_vec())
}

pub fn samples_from_idx(images: &[u8], labels: &[u8]) -> Result<Vec<Sample>, DatasetError> {
    let images = parse_idx_images(images)?;
    let labels = parse_idx_labels(labels)?;
    if images.len() != labels.len() {
        return Err(DatasetError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    images
        .into_iter()
        .zip(labels)
        .map(|(x, l)| {
            if usize::from(l) >= CLASSES {
                return Err(DatasetError::BadLabel(l));
            }
            Ok(Sample {
                x,
                y: one_hot(usize::from(l), CLASSES),
            })
        })
        .collect()
}

pub fn load_mnist(images: &Path, labels: &Path) -> Result<Vec<Sample>, DatasetError> {
    samples_from_idx(&fs::read(images)?, &fs::read(labels)?)
}

/// Gaussian clusters around random class centers in `[0, 1]^dim`, values
/// clamped to `[0, 1]` like pixels.
pub fn synthetic(count: usize, dim: usize, classes: usize, noise: f64, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if rng.random::<f64>() < 0.3 {
                        rng.random::<f64>()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let normal = Normal::new(0.0, noise).expect("finite noise level");
    (0..count)
        .map(|_| {
            let class = rng.random_range(0..classes);
            let x = centers[class]
                .iter()
                .map(|&c| (c + normal.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            Sample {
                x,
                y: one_hot(class, classes),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_image_fixture() {
        // 2 images of 2x2: [0, 255, 51, 102], [255, 0, 0, 255]
        let images = [
            0x00, 0x00, 0x08, 0x03, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0x00, 0xff, 0x33, 0x66, 0xff, 0x00, 0x00, 0xff,
        ];
        let labels = [0x00, 0x00, 0x08, 0x01, 0, 0, 0, 2, 7, 3];
        let s = samples_from_idx(&images, &labels).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].x, vec![0.0, 1.0, 0.2, 0.4]);
        assert_eq!(s[1].x, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(s[0].y[7], 1.0);
        assert_eq!(s[1].y.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn rejects_bad_files() {
        let labels = [0x00, 0x00, 0x08, 0x01, 0, 0, 0, 3, 1];
        assert!(matches!(parse_idx_labels(&labels), Err(DatasetError::Truncated(_))));
        assert!(matches!(parse_idx_images(&labels), Err(DatasetError::BadMagic { .. })));
        let images = [0x00, 0x00, 0x08, 0x03, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 9];
        let two = [0x00, 0x00, 0x08, 0x01, 0, 0, 0, 2, 1, 1];
        assert!(matches!(
            samples_from_idx(&images, &two),
            Err(DatasetError::CountMismatch { .. })
        ));
    }

    #[test]
    fn synthetic_is_deterministic() {
        assert_eq!(synthetic(20, 8, 3, 0.1, 5), synthetic(20, 8, 3, 0.1, 5));
        assert_ne!(synthetic(20, 8, 3, 0.1, 5), synthetic(20, 8, 3, 0.1, 6));
    }
}

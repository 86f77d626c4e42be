//! Labelled datasets for the trainer: synthetic Gaussian blobs and the
//! IDX image/label format.

use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// A labelled dataset: row-major features, one class id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub n: usize,
    pub d: usize,
    pub n_classes: usize,
}

impl Dataset {
    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Dataset,
    pub test: Dataset,
}

/// Coordinates of `k` class means forming a regular simplex with pairwise
/// distance `separation`, embedded in `R^dim`. Uses the Helmert basis of
/// the hyperplane orthogonal to the all-ones vector, so the construction
/// is exact and deterministic. Requires `dim >= k - 1`.
fn simplex_means(k: usize, dim: usize, separation: f64) -> Result<Vec<Vec<f64>>> {
    if separation == 0.0 {
        return Ok(vec![vec![0.0; dim]; k]);
    }
    if dim + 1 < k {
        return Err(Error::InvalidInputs(format!(
            "{k} equidistant class means need input_dim >= {}, got {dim}",
            k - 1
        )));
    }
    let scale = separation / 2f64.sqrt();
    let mut means = vec![vec![0.0f64; dim]; k];
    // Helmert row j (1-based): (1, ..., 1, -j, 0, ..., 0) / sqrt(j (j+1)),
    // with j leading ones. Row j of the mean matrix is the projection of
    // scale * e_c onto that basis vector.
    for j in 1..k {
        let norm = (j as f64 * (j + 1) as f64).sqrt();
        for (c, mean) in means.iter_mut().enumerate() {
            let e = if c < j {
                1.0
            } else if c == j {
                -(j as f64)
            } else {
                0.0
            };
            mean[j - 1] = scale * e / norm;
        }
    }
    Ok(means)
}

/// Gaussian blob classes with unit covariance and equidistant means,
/// deterministically split 80/20 per class (first 80% of each class's
/// draws are training data).
pub fn gen_blobs(
    n_per_class: usize,
    n_classes: usize,
    input_dim: usize,
    separation: f64,
    seed: u64,
) -> Result<SplitDataset> {
    if n_per_class < 1 || n_classes < 1 || input_dim < 1 {
        return Err(Error::InvalidInputs("all blob counts must be >= 1".into()));
    }
    if !(separation >= 0.0) || !separation.is_finite() {
        return Err(Error::InvalidInputs(format!(
            "separation must be finite and >= 0, got {separation}"
        )));
    }
    let means = simplex_means(n_classes, input_dim, separation)?;
    let n_train_per_class = (n_per_class * 4) / 5;

    let mut train = Vec::new();
    let mut train_labels = Vec::new();
    let mut test = Vec::new();
    let mut test_labels = Vec::new();
    for (c, mean) in means.iter().enumerate() {
        let mut rng = StreamRng::new(seed, c as u64);
        for i in 0..n_per_class {
            let point: Vec<f64> = mean.iter().map(|m| m + rng.normal()).collect();
            if i < n_train_per_class {
                train.extend_from_slice(&point);
                train_labels.push(c);
            } else {
                test.extend_from_slice(&point);
                test_labels.push(c);
            }
        }
    }
    Ok(SplitDataset {
        train: Dataset {
            n: train_labels.len(),
            d: input_dim,
            n_classes,
            features: train,
            labels: train_labels,
        },
        test: Dataset {
            n: test_labels.len(),
            d: input_dim,
            n_classes,
            features: test,
            labels: test_labels,
        },
    })
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset.checked_add(4).ok_or(Error::MalformedIdx {
        offset,
        detail: "offset overflow".into(),
    })?;
    if end > bytes.len() {
        return Err(Error::MalformedIdx {
            offset,
            detail: format!(
                "truncated: need 4 bytes, file has {}",
                bytes.len().saturating_sub(offset)
            ),
        });
    }
    Ok(u32::from_be_bytes([bytes[offset], bytes[offset + 1], bytes[offset + 2], bytes[offset + 3]]))
}

/// Decodes an IDX image file (magic 0x00000803): pixel bytes scaled to
/// [0, 1], one flattened row per image.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(Vec<f64>, usize, usize)> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::MalformedIdx {
            offset: 0,
            detail: format!("magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        });
    }
    let n = read_be_u32(bytes, 4)? as usize;
    let rows = read_be_u32(bytes, 8)? as usize;
    let cols = read_be_u32(bytes, 12)? as usize;
    let per_image = rows.checked_mul(cols).ok_or(Error::MalformedIdx {
        offset: 8,
        detail: "image dimensions overflow".into(),
    })?;
    let expected = n.checked_mul(per_image).ok_or(Error::MalformedIdx {
        offset: 4,
        detail: "total pixel count overflows".into(),
    })?;
    let data = &bytes[16..];
    if data.len() != expected {
        return Err(Error::MalformedIdx {
            offset: 16 + data.len().min(expected),
            detail: format!("expected {expected} pixel bytes, found {}", data.len()),
        });
    }
    if n == 0 || per_image == 0 {
        return Err(Error::MalformedIdx {
            offset: 4,
            detail: "empty image set".into(),
        });
    }
    let features = data.iter().map(|&b| b as f64 / 255.0).collect();
    Ok((features, n, per_image))
}

/// Decodes an IDX label file (magic 0x00000801).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::MalformedIdx {
            offset: 0,
            detail: format!("magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        });
    }
    let n = read_be_u32(bytes, 4)? as usize;
    let data = &bytes[8..];
    if data.len() != n {
        return Err(Error::MalformedIdx {
            offset: 8 + data.len().min(n),
            detail: format!("expected {n} label bytes, found {}", data.len()),
        });
    }
    if n == 0 {
        return Err(Error::MalformedIdx { offset: 4, detail: "empty label set".into() });
    }
    Ok(data.iter().map(|&b| b as usize).collect())
}

/// Loads an IDX image/label pair into one labelled dataset.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = std::fs::read(images_path).map_err(|source| Error::Io {
        path: images_path.to_path_buf(),
        source,
    })?;
    let labels = std::fs::read(labels_path).map_err(|source| Error::Io {
        path: labels_path.to_path_buf(),
        source,
    })?;
    let (features, n, d) = parse_idx_images(&images)?;
    let labels = parse_idx_labels(&labels)?;
    if labels.len() != n {
        return Err(Error::InvalidInputs(format!(
            "{n} images but {} labels",
            labels.len()
        )));
    }
    let n_classes = labels.iter().max().unwrap() + 1;
    Ok(Dataset { features, labels, n, d, n_classes })
}

/// Deterministic 80/20 split: every fifth sample (i % 5 == 4) is test.
pub fn split_80_20(data: Dataset) -> SplitDataset {
    let mut train = Vec::new();
    let mut train_labels = Vec::new();
    let mut test = Vec::new();
    let mut test_labels = Vec::new();
    for i in 0..data.n {
        if i % 5 == 4 {
            test.extend_from_slice(data.feature(i));
            test_labels.push(data.labels[i]);
        } else {
            train.extend_from_slice(data.feature(i));
            train_labels.push(data.labels[i]);
        }
    }
    SplitDataset {
        train: Dataset {
            n: train_labels.len(),
            d: data.d,
            n_classes: data.n_classes,
            features: train,
            labels: train_labels,
        },
        test: Dataset {
            n: test_labels.len(),
            d: data.d,
            n_classes: data.n_classes,
            features: test,
            labels: test_labels,
        },
    }
}

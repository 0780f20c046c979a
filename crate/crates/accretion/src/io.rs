//! MNIST files and checkpoint files on disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use accretion_core::data::{parse_idx_images, parse_idx_labels, partition_by_class, ClassPartition, LabeledImages};
use accretion_core::model::{decode_checkpoint, encode_checkpoint, AccretionState};
use accretion_core::protocol::AccretionConfig;

use crate::error::{AppError, Result};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// The official training and test sets.
#[derive(Debug, Clone)]
pub struct Mnist {
    pub train: LabeledImages,
    pub test: LabeledImages,
}

/// Paths of the four IDX files inside `dir`.
pub fn mnist_paths(dir: &Path) -> [PathBuf; 4] {
    [TRAIN_IMAGES, TRAIN_LABELS, TEST_IMAGES, TEST_LABELS].map(|f| dir.join(f))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(AppError::io(path))
}

/// Load one image file and its label file.
pub fn load_labeled(images: &Path, labels: &Path) -> Result<LabeledImages> {
    let imgs = parse_idx_images(&read(images)?).map_err(|e| AppError::Data {
        path: images.to_path_buf(),
        source: e.into(),
    })?;
    let labs = parse_idx_labels(&read(labels)?).map_err(|e| AppError::Data {
        path: labels.to_path_buf(),
        source: e.into(),
    })?;
    LabeledImages::new(imgs, labs).map_err(|source| AppError::Data {
        path: images.to_path_buf(),
        source,
    })
}

pub fn load_mnist(dir: &Path) -> Result<Mnist> {
    let [ti, tl, ei, el] = mnist_paths(dir);
    Ok(Mnist {
        train: load_labeled(&ti, &tl)?,
        test: load_labeled(&ei, &el)?,
    })
}

/// Training samples come from the official training file and evaluation
/// samples from the test file.
pub fn build_partition(mnist: Mnist, config: &AccretionConfig) -> Result<ClassPartition> {
    Ok(partition_by_class(mnist.train, Some(&mnist.test), &config.partition_config())?)
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(AppError::io(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(AppError::io(dir))?;
    tmp.write_all(bytes).map_err(AppError::io(tmp.path()))?;
    tmp.persist(path).map_err(|e| AppError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn save_checkpoint(state: &AccretionState, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(state))
}

pub fn load_checkpoint(path: &Path) -> Result<AccretionState> {
    decode_checkpoint(&read(path)?).map_err(|e| AppError::Data {
        path: path.to_path_buf(),
        source: e.into(),
    })
}

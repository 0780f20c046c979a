use alloc::format;
use alloc::vec::Vec;

use super::IdxImages;
use crate::{ClassId, Error, Result};

/// Index of a sample inside a [`LabeledImages`] store.
pub type SampleId = usize;

/// Images paired with class labels. Pixels are `[0, 1]` floats, row-major,
/// one `rows * cols` block per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    rows: usize,
    cols: usize,
    pixels: Vec<f32>,
    labels: Vec<ClassId>,
}

impl LabeledImages {
    pub fn new(images: IdxImages, labels: Vec<ClassId>) -> Result<Self> {
        if images.count != labels.len() {
            return Err(Error::Shape(format!(
                "{} images but {} labels",
                images.count,
                labels.len()
            )));
        }
        Self::from_parts(images.rows, images.cols, images.pixels, labels)
    }

    pub fn from_parts(rows: usize, cols: usize, pixels: Vec<f32>, labels: Vec<ClassId>) -> Result<Self> {
        if pixels.len() != rows * cols * labels.len() {
            return Err(Error::Shape(format!(
                "{} pixels for {} images of {rows}x{cols}",
                pixels.len(),
                labels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Shape(format!("pixel value {p} outside [0, 1]")));
        }
        Ok(Self {
            rows,
            cols,
            pixels,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn image(&self, id: SampleId) -> &[f32] {
        let n = self.rows * self.cols;
        &self.pixels[id * n..(id + 1) * n]
    }

    pub fn label(&self, id: SampleId) -> ClassId {
        self.labels[id]
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    /// Number of samples per class label (index = label).
    pub fn histogram(&self) -> [usize; 256] {
        let mut h = [0; 256];
        for &l in &self.labels {
            h[l as usize] += 1;
        }
        h
    }

    /// Append `other`; its sample ids are shifted by `self.len()`.
    pub fn concat(mut self, other: &LabeledImages) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Shape(format!(
                "cannot join {}x{} and {}x{} images",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        self.pixels.extend_from_slice(&other.pixels);
        self.labels.extend_from_slice(&other.labels);
        Ok(self)
    }
}

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::data::{LabeledImages, SampleId};
use crate::model::SharedTrunk;
use crate::nn::Tensor;
use crate::Result;

/// Trunk features of individual samples, computed once per frozen trunk.
///
/// The cache remembers a fingerprint of the trunk it was filled with and
/// starts over when handed a different one.
#[derive(Debug, Clone, Default)]
pub struct FeatureCache {
    fingerprint: Option<u32>,
    dim: usize,
    rows: BTreeMap<SampleId, usize>,
    data: Vec<f32>,
}

impl FeatureCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }

    /// Features `[ids.len(), feature_dim]` in the order of `ids`.
    pub fn features(&mut self, trunk: &SharedTrunk, store: &LabeledImages, ids: &[SampleId]) -> Result<Tensor> {
        let fp = crc32fast::hash(&trunk.net().param_bytes());
        if self.fingerprint != Some(fp) {
            self.clear();
            self.fingerprint = Some(fp);
            self.dim = trunk.feature_dim();
        }
        let mut missing: Vec<SampleId> = ids.iter().copied().filter(|id| !self.rows.contains_key(id)).collect();
        missing.sort_unstable();
        missing.dedup();
        if !missing.is_empty() {
            let f = trunk.features(&images(store, &missing)?)?;
            let start = self.rows.len();
            for (k, &id) in missing.iter().enumerate() {
                self.rows.insert(id, start + k);
            }
            self.data.extend_from_slice(f.data());
        }
        let mut out = Vec::with_capacity(ids.len() * self.dim);
        for id in ids {
            let r = self.rows[id];
            out.extend_from_slice(&self.data[r * self.dim..(r + 1) * self.dim]);
        }
        Tensor::new(alloc::vec![ids.len(), self.dim], out)
    }
}

/// Stack images `[n, 1, rows, cols]`.
pub fn images(store: &LabeledImages, ids: &[SampleId]) -> Result<Tensor> {
    let rows: Vec<&[f32]> = ids.iter().map(|&id| store.image(id)).collect();
    Tensor::stack(&[1, store.rows(), store.cols()], &rows)
}

use alloc::vec;
use alloc::vec::Vec;

use crate::nn::{LayerSpec, Network, Tensor};
use crate::{rng, Result};

/// Image side length expected by the trunk.
pub const IMAGE_SIDE: usize = 28;

/// Layer stack of the shared feature extractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrunkArch {
    /// conv 3x3x32 + relu + pool 2, conv 3x3x64 + relu + pool 2, flatten:
    /// a 1600-wide feature vector.
    #[default]
    ConvFeatures,
    /// As `ConvFeatures` followed by dense 1600 -> 128 + relu.
    DenseBottleneck,
}

impl TrunkArch {
    pub fn layers(self) -> Vec<LayerSpec> {
        let mut layers = vec![
            LayerSpec::conv(1, 32, 3),
            LayerSpec::Relu,
            LayerSpec::max_pool(2),
            LayerSpec::conv(32, 64, 3),
            LayerSpec::Relu,
            LayerSpec::max_pool(2),
            LayerSpec::Flatten,
        ];
        if self == TrunkArch::DenseBottleneck {
            layers.push(LayerSpec::dense(1600, 128));
            layers.push(LayerSpec::Relu);
        }
        layers
    }

    pub fn name(self) -> &'static str {
        match self {
            TrunkArch::ConvFeatures => "conv-features",
            TrunkArch::DenseBottleneck => "dense-bottleneck",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "conv-features" => Some(TrunkArch::ConvFeatures),
            "dense-bottleneck" => Some(TrunkArch::DenseBottleneck),
            _ => None,
        }
    }
}

/// Feature extractor shared by every detector. Once frozen its parameters
/// never change.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedTrunk {
    net: Network,
}

/// Build and initialize the trunk for `[1, 28, 28]` images.
pub fn build_shared_trunk(arch: TrunkArch, seed: u64) -> Result<SharedTrunk> {
    let net = Network::seeded(
        &[1, IMAGE_SIDE, IMAGE_SIDE],
        arch.layers(),
        rng::derive(seed, &[rng::tag::TRUNK_INIT]),
    )?;
    Ok(SharedTrunk { net })
}

impl SharedTrunk {
    pub fn from_network(net: Network) -> Self {
        Self { net }
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub(crate) fn net_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn feature_dim(&self) -> usize {
        self.net.output_shape()[0]
    }

    pub fn is_frozen(&self) -> bool {
        self.net.is_frozen()
    }

    pub fn freeze(&mut self) {
        self.net.set_trainable(false);
    }

    /// Features for a batch `[n, 1, 28, 28]`.
    pub fn features(&self, images: &Tensor) -> Result<Tensor> {
        super::chunked(images, 256, |x| self.net.predict(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn feature_widths() {
        let t = build_shared_trunk(TrunkArch::DenseBottleneck, 0).unwrap();
        assert_eq!(t.feature_dim(), 128);
        let t = build_shared_trunk(TrunkArch::ConvFeatures, 0).unwrap();
        assert_eq!(t.feature_dim(), 1600);
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = build_shared_trunk(TrunkArch::default(), 5).unwrap();
        let b = build_shared_trunk(TrunkArch::default(), 5).unwrap();
        assert_eq!(a.net().param_bytes(), b.net().param_bytes());
    }

    #[test]
    fn rejects_wrong_image_size() {
        let t = build_shared_trunk(TrunkArch::default(), 0).unwrap();
        let x = Tensor::zeros(&[1, 1, 27, 28]);
        assert!(matches!(t.features(&x), Err(Error::LayerShape { layer: 0, .. })));
    }

    #[test]
    fn freezing_clears_every_mask() {
        let mut t = build_shared_trunk(TrunkArch::default(), 0).unwrap();
        assert!(!t.is_frozen());
        t.freeze();
        assert!(t.is_frozen());
    }
}

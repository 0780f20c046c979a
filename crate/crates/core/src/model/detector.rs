use alloc::vec;
use alloc::vec::Vec;

use super::SharedTrunk;
use crate::nn::{LayerSpec, Network, Tensor};
use crate::{rng, ClassId, Error, Result};

/// Two-output detector for one class. Output pair is
/// `(p(X | H0), p(X | H1))`: target present, target absent.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorHead {
    class: ClassId,
    net: Network,
}

impl DetectorHead {
    /// `dense(feature_dim -> hidden) + relu + dense(hidden -> 2) + softmax`.
    pub fn new(class: ClassId, feature_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        let net = Network::seeded(
            &[feature_dim],
            vec![
                LayerSpec::dense(feature_dim, hidden),
                LayerSpec::Relu,
                LayerSpec::dense(hidden, 2),
                LayerSpec::Softmax,
            ],
            rng::derive(seed, &[rng::tag::HEAD_INIT, class as u64]),
        )?;
        Ok(Self { class, net })
    }

    pub fn from_network(class: ClassId, net: Network) -> Result<Self> {
        if net.output_shape() != [2] || net.input_shape().len() != 1 {
            return Err(Error::Shape(alloc::format!(
                "detector network must map [d] -> [2], got {:?} -> {:?}",
                net.input_shape(),
                net.output_shape()
            )));
        }
        Ok(Self { class, net })
    }

    pub fn class(&self) -> ClassId {
        self.class
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub(crate) fn net_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_shape()[0]
    }

    pub fn freeze(&mut self) {
        self.net.set_trainable(false);
    }

    /// Likelihood pairs for a feature batch `[n, d]`, shape `[n, 2]`.
    pub fn infer(&self, features: &Tensor) -> Result<Tensor> {
        super::chunked(features, 1024, |x| self.net.predict(x))
    }
}

/// Outcome of the likelihood-ratio test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Target class present.
    H0,
    /// Target class absent.
    H1,
}

/// `H0` iff `p_h0 / p_h1 > tau`; a ratio equal to `tau` yields `H1`. A zero
/// `p_h1` is an infinite ratio.
pub fn likelihood_ratio_decide(p_h0: f64, p_h1: f64, tau: f64) -> Hypothesis {
    if p_h1 == 0.0 {
        return if p_h0 > 0.0 { Hypothesis::H0 } else { Hypothesis::H1 };
    }
    if p_h0 / p_h1 > tau {
        Hypothesis::H0
    } else {
        Hypothesis::H1
    }
}

fn single_image(image: &Tensor) -> Result<Tensor> {
    let shape = match image.shape().len() {
        3 => {
            let mut s = vec![1];
            s.extend_from_slice(image.shape());
            s
        }
        4 if image.batch() == 1 => image.shape().to_vec(),
        _ => {
            return Err(Error::Shape(alloc::format!(
                "expected one [1, 28, 28] image, got {:?}",
                image.shape()
            )))
        }
    };
    image.clone().reshape(shape)
}

/// Detector output for one image `[1, 28, 28]`.
pub fn detector_infer(trunk: &SharedTrunk, head: &DetectorHead, image: &Tensor) -> Result<(f32, f32)> {
    let f = trunk.features(&single_image(image)?)?;
    let p = head.infer(&f)?;
    Ok((p.data()[0], p.data()[1]))
}

/// Ordered detectors; position `i` holds the detector of `registry()[i]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectorBank {
    heads: Vec<DetectorHead>,
}

impl DetectorBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn heads(&self) -> &[DetectorHead] {
        &self.heads
    }

    pub fn head(&self, class: ClassId) -> Option<&DetectorHead> {
        self.heads.iter().find(|h| h.class == class)
    }

    pub fn registry(&self) -> Vec<ClassId> {
        self.heads.iter().map(|h| h.class).collect()
    }

    pub fn position(&self, class: ClassId) -> Option<usize> {
        self.heads.iter().position(|h| h.class == class)
    }

    /// Append a detector. Existing heads are not touched.
    pub fn add_detector(&mut self, head: DetectorHead) -> Result<()> {
        if self.position(head.class).is_some() {
            return Err(Error::DuplicateClass(head.class));
        }
        if let Some(first) = self.heads.first() {
            if first.input_dim() != head.input_dim() {
                return Err(Error::Shape(alloc::format!(
                    "detector expects {} features, bank uses {}",
                    head.input_dim(),
                    first.input_dim()
                )));
            }
        }
        self.heads.push(head);
        Ok(())
    }

    /// Concatenated likelihood pairs in registry order, `[n, 2M]`.
    pub fn intermediate(&self, features: &Tensor) -> Result<Tensor> {
        if self.heads.is_empty() {
            return Err(Error::EmptyBank);
        }
        let n = features.batch();
        let m = self.heads.len();
        let mut out = vec![0.0f32; n * 2 * m];
        for (j, head) in self.heads.iter().enumerate() {
            let p = head.infer(features)?;
            for r in 0..n {
                out[r * 2 * m + 2 * j] = p.data()[2 * r];
                out[r * 2 * m + 2 * j + 1] = p.data()[2 * r + 1];
            }
        }
        Tensor::new(vec![n, 2 * m], out)
    }
}

/// Intermediate feature (length `2M`) for one image; the trunk runs once.
pub fn bank_infer(trunk: &SharedTrunk, bank: &DetectorBank, image: &Tensor) -> Result<Vec<f32>> {
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    let f = trunk.features(&single_image(image)?)?;
    Ok(bank.intermediate(&f)?.into_data())
}

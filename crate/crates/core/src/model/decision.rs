use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::nn::{LayerSpec, Network, Param, Tensor, TrainableMask};
use crate::{rng, ClassId, Error, Result};

/// Architecture of a decision network. Only `SingleLayer` can be expanded;
/// the others exist for the replacement study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecisionVariant {
    /// `dense(2M -> M) + softmax`.
    #[default]
    SingleLayer,
    /// Three dense layers with 64-wide hidden layers.
    ThreeLayer,
    /// Five dense layers with 64-wide hidden layers.
    FiveLayer,
    /// The `2M` vector read as an `M x 2` grid: a `1x2` convolution over each
    /// detector pair, a `3x1` convolution across neighbouring classes, then a
    /// dense output layer.
    TwoLayerConv,
}

const HIDDEN: usize = 64;
const CONV_CHANNELS: usize = 16;

impl DecisionVariant {
    pub const ALL: [DecisionVariant; 4] = [
        DecisionVariant::SingleLayer,
        DecisionVariant::ThreeLayer,
        DecisionVariant::FiveLayer,
        DecisionVariant::TwoLayerConv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecisionVariant::SingleLayer => "fc1",
            DecisionVariant::ThreeLayer => "fc3",
            DecisionVariant::FiveLayer => "fc5",
            DecisionVariant::TwoLayerConv => "conv2",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariant(String::from(name)))
    }

    fn input_shape(self, m: usize) -> Vec<usize> {
        match self {
            DecisionVariant::TwoLayerConv => vec![1, m, 2],
            _ => vec![2 * m],
        }
    }

    fn layers(self, m: usize) -> Result<Vec<LayerSpec>> {
        let dense_stack = |depth: usize| {
            let mut l = Vec::new();
            let mut width = 2 * m;
            for _ in 0..depth - 1 {
                l.push(LayerSpec::dense(width, HIDDEN));
                l.push(LayerSpec::Relu);
                width = HIDDEN;
            }
            l.push(LayerSpec::dense(width, m));
            l.push(LayerSpec::Softmax);
            l
        };
        Ok(match self {
            DecisionVariant::SingleLayer => dense_stack(1),
            DecisionVariant::ThreeLayer => dense_stack(3),
            DecisionVariant::FiveLayer => dense_stack(5),
            DecisionVariant::TwoLayerConv => {
                if m < 3 {
                    return Err(Error::Config(alloc::format!(
                        "the convolutional decision network needs at least 3 classes, got {m}"
                    )));
                }
                vec![
                    LayerSpec::Conv2d {
                        in_channels: 1,
                        out_channels: CONV_CHANNELS,
                        kernel_h: 1,
                        kernel_w: 2,
                        stride: 1,
                        padding: 0,
                    },
                    LayerSpec::Relu,
                    LayerSpec::Conv2d {
                        in_channels: CONV_CHANNELS,
                        out_channels: CONV_CHANNELS,
                        kernel_h: 3,
                        kernel_w: 1,
                        stride: 1,
                        padding: 0,
                    },
                    LayerSpec::Relu,
                    LayerSpec::Flatten,
                    LayerSpec::dense(CONV_CHANNELS * (m - 2), m),
                    LayerSpec::Softmax,
                ]
            }
        })
    }
}

/// Maps the `2M` detector-bank output to scores over the `M` learned classes.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionNetwork {
    variant: DecisionVariant,
    registry: Vec<ClassId>,
    net: Network,
}

impl DecisionNetwork {
    /// Fresh, fully trainable network over `registry`.
    pub fn new(variant: DecisionVariant, registry: Vec<ClassId>, seed: u64) -> Result<Self> {
        if registry.is_empty() {
            return Err(Error::EmptyBank);
        }
        check_unique(&registry)?;
        let m = registry.len();
        let net = Network::seeded(
            &variant.input_shape(m),
            variant.layers(m)?,
            rng::derive(seed, &[rng::tag::DECISION_INIT, m as u64]),
        )?;
        Ok(Self { variant, registry, net })
    }

    pub fn from_network(variant: DecisionVariant, registry: Vec<ClassId>, net: Network) -> Result<Self> {
        check_unique(&registry)?;
        let m = registry.len();
        if net.input_shape() != variant.input_shape(m).as_slice() || net.output_shape() != [m] {
            return Err(Error::Shape(alloc::format!(
                "decision network for {m} classes has shapes {:?} -> {:?}",
                net.input_shape(),
                net.output_shape()
            )));
        }
        Ok(Self { variant, registry, net })
    }

    pub fn variant(&self) -> DecisionVariant {
        self.variant
    }

    pub fn registry(&self) -> &[ClassId] {
        &self.registry
    }

    pub fn classes(&self) -> usize {
        self.registry.len()
    }

    pub fn input_width(&self) -> usize {
        2 * self.registry.len()
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub(crate) fn net_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    /// Single-layer weight matrix `[M, 2M]`.
    pub fn weight(&self) -> Option<&Tensor> {
        (self.variant == DecisionVariant::SingleLayer).then(|| &self.net.params()[0].value)
    }

    /// Entries that the next training pass may change.
    pub fn new_connection_mask(&self) -> Option<&TrainableMask> {
        (self.variant == DecisionVariant::SingleLayer).then(|| &self.net.params()[0].mask)
    }

    pub fn freeze(&mut self) {
        self.net.set_trainable(false);
    }

    /// Grow by two inputs and one output for `new_class`.
    ///
    /// Retained weights and biases are copied bit for bit and masked frozen;
    /// the new row, the two new columns and the new bias are initialized from
    /// `seed` and left trainable.
    pub fn expand(&self, new_class: ClassId, seed: u64) -> Result<Self> {
        if self.variant != DecisionVariant::SingleLayer {
            return Err(Error::Config(String::from(
                "only the single-layer decision network can be expanded",
            )));
        }
        if self.registry.contains(&new_class) {
            return Err(Error::DuplicateClass(new_class));
        }
        let m = self.registry.len();
        let (rows, cols) = (m + 1, 2 * m + 2);
        let old_w = self.net.params()[0].value.data();
        let old_b = self.net.params()[1].value.data();

        let mut rng = rng::rng(seed, &[rng::tag::DECISION_INIT, new_class as u64, rows as u64]);
        let normal = Normal::new(0.0, libm::sqrt(2.0 / cols as f64)).expect("finite standard deviation");
        let mut w = vec![0.0f32; rows * cols];
        let mut w_mask = vec![true; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                if r < m && c < 2 * m {
                    w[r * cols + c] = old_w[r * 2 * m + c];
                    w_mask[r * cols + c] = false;
                } else {
                    w[r * cols + c] = normal.sample(&mut rng) as f32;
                }
            }
        }
        let mut b = old_b.to_vec();
        b.push(0.0);
        let mut b_mask = vec![false; m];
        b_mask.push(true);

        let mut registry = self.registry.clone();
        registry.push(new_class);
        let mut net = Network::new(&[cols], DecisionVariant::SingleLayer.layers(rows)?)?;
        let params = net.params_mut();
        params[0] = Param::with_mask(
            Tensor::new(vec![rows, cols], w)?,
            TrainableMask::from_bits(&[rows, cols], w_mask)?,
        )?;
        params[1] = Param::with_mask(Tensor::new(vec![rows], b)?, TrainableMask::from_bits(&[rows], b_mask)?)?;
        Ok(Self {
            variant: DecisionVariant::SingleLayer,
            registry,
            net,
        })
    }

    /// Softmax scores `[n, M]` for intermediate features `[n, 2M]`.
    pub fn scores(&self, intermediate: &Tensor) -> Result<Tensor> {
        let x = self.shape_input(intermediate)?;
        super::chunked(&x, 4096, |b| self.net.predict(b))
    }

    pub(crate) fn shape_input(&self, intermediate: &Tensor) -> Result<Tensor> {
        if intermediate.shape().len() != 2 || intermediate.shape()[1] != self.input_width() {
            return Err(Error::Shape(alloc::format!(
                "decision network expects [n, {}], got {:?}",
                self.input_width(),
                intermediate.shape()
            )));
        }
        let mut shape = vec![intermediate.batch()];
        shape.extend_from_slice(self.net.input_shape());
        intermediate.clone().reshape(shape)
    }

    /// Registry position of the highest score in each row (lowest position on
    /// ties).
    pub fn classify(&self, intermediate: &Tensor) -> Result<Vec<usize>> {
        let s = self.scores(intermediate)?;
        Ok((0..s.batch()).map(|r| argmax(s.row(r))).collect())
    }
}

fn check_unique(registry: &[ClassId]) -> Result<()> {
    for (i, c) in registry.iter().enumerate() {
        if registry[..i].contains(c) {
            return Err(Error::DuplicateClass(*c));
        }
    }
    Ok(())
}

pub(crate) fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Decide the class of one intermediate feature vector.
pub fn decision_infer(dn: &DecisionNetwork, intermediate: &[f32]) -> Result<(ClassId, Vec<f32>)> {
    if intermediate.len() != dn.input_width() {
        return Err(Error::Shape(alloc::format!(
            "intermediate feature has length {}, expected {}",
            intermediate.len(),
            dn.input_width()
        )));
    }
    let x = Tensor::new(vec![1, intermediate.len()], intermediate.to_vec())?;
    let scores = dn.scores(&x)?.into_data();
    Ok((dn.registry[argmax(&scores)], scores))
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use super::{LayerSpec, Real, Tensor};
use crate::{rng, Error, Result};

/// Boolean tensor marking which entries of a parameter may change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainableMask {
    shape: Vec<usize>,
    bits: Vec<bool>,
}

impl TrainableMask {
    pub fn new(shape: &[usize], value: bool) -> Self {
        Self {
            shape: shape.to_vec(),
            bits: vec![value; shape.iter().product()],
        }
    }

    pub fn from_bits(shape: &[usize], bits: Vec<bool>) -> Result<Self> {
        if bits.len() != shape.iter().product::<usize>() {
            return Err(Error::Shape(format!(
                "mask for shape {shape:?} needs {} entries, got {}",
                shape.iter().product::<usize>(),
                bits.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            bits,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn fill(&mut self, value: bool) {
        self.bits.iter_mut().for_each(|b| *b = value);
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }
}

/// A parameter tensor with its trainable mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T = f32> {
    pub value: Tensor<T>,
    pub mask: TrainableMask,
}

impl<T: Real> Param<T> {
    pub fn new(value: Tensor<T>) -> Self {
        let mask = TrainableMask::new(value.shape(), true);
        Self { value, mask }
    }

    pub fn with_mask(value: Tensor<T>, mask: TrainableMask) -> Result<Self> {
        if mask.shape() != value.shape() {
            return Err(Error::Shape(format!(
                "mask shape {:?} does not match parameter shape {:?}",
                mask.shape(),
                value.shape()
            )));
        }
        Ok(Self { value, mask })
    }
}

/// Per-layer outputs of a forward pass. Index 0 holds the network input.
#[derive(Debug, Clone)]
pub struct Activations<T = f32> {
    values: Vec<Tensor<T>>,
}

impl<T: Real> Activations<T> {
    pub fn input(&self) -> &Tensor<T> {
        &self.values[0]
    }

    /// Output of layer `i` (0-based).
    pub fn layer(&self, i: usize) -> &Tensor<T> {
        &self.values[i + 1]
    }

    pub fn output(&self) -> &Tensor<T> {
        self.values.last().expect("activations always hold the input")
    }

    pub fn into_output(mut self) -> Tensor<T> {
        self.values.pop().expect("activations always hold the input")
    }

    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parameter gradients (masked) and the gradient with respect to the input.
#[derive(Debug, Clone)]
pub struct Gradients<T = f32> {
    pub params: Vec<Tensor<T>>,
    pub input: Tensor<T>,
}

impl<T: Real> Gradients<T> {
    pub fn scale(&mut self, factor: T) {
        for g in &mut self.params {
            g.data_mut().iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Fixed stack of layers with parameters and trainable masks.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T = f32> {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    shapes: Vec<Vec<usize>>,
    params: Vec<Param<T>>,
    offsets: Vec<usize>,
}

impl<T: Real> Network<T> {
    /// Build a network with zero parameters and fully trainable masks.
    pub fn new(input_shape: &[usize], layers: Vec<LayerSpec>) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::Shape(format!("invalid input shape {input_shape:?}")));
        }
        let mut shapes = vec![input_shape.to_vec()];
        let mut params = Vec::new();
        let mut offsets = Vec::with_capacity(layers.len());
        for (i, layer) in layers.iter().enumerate() {
            layer
                .validate()
                .map_err(|reason| Error::InvalidLayer { layer: i, reason })?;
            let next = layer
                .output_shape(&shapes[i])
                .map_err(|reason| Error::InvalidLayer { layer: i, reason })?;
            shapes.push(next);
            offsets.push(params.len());
            for s in layer.param_shapes() {
                params.push(Param::new(Tensor::zeros(&s)));
            }
        }
        Ok(Self {
            input_shape: input_shape.to_vec(),
            layers,
            shapes,
            params,
            offsets,
        })
    }

    /// Build and initialize in one step.
    pub fn seeded(input_shape: &[usize], layers: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        let mut net = Self::new(input_shape, layers)?;
        net.init_parameters(seed);
        Ok(net)
    }

    /// He-normal weights (standard deviation `sqrt(2 / fan_in)`), zero biases.
    pub fn init_parameters(&mut self, seed: u64) {
        let mut rng = rng::rng(seed, &[rng::tag::TRUNK_INIT]);
        for (i, layer) in self.layers.iter().enumerate() {
            let fan_in = layer.fan_in();
            if fan_in == 0 {
                continue;
            }
            let std = libm::sqrt(2.0 / fan_in as f64);
            let normal = Normal::new(0.0, std).expect("finite standard deviation");
            let w = &mut self.params[self.offsets[i]].value;
            for v in w.data_mut() {
                *v = T::from_f64(normal.sample(&mut rng));
            }
            self.params[self.offsets[i] + 1].value.fill(T::zero());
        }
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().expect("shapes always hold the input")
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    /// Parameters belonging to layer `i`.
    pub fn layer_params(&self, i: usize) -> &[Param<T>] {
        let start = self.offsets[i];
        &self.params[start..start + self.layers[i].param_shapes().len()]
    }

    pub fn layer_params_mut(&mut self, i: usize) -> &mut [Param<T>] {
        let start = self.offsets[i];
        let n = self.layers[i].param_shapes().len();
        &mut self.params[start..start + n]
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn set_trainable(&mut self, trainable: bool) {
        for p in &mut self.params {
            p.mask.fill(trainable);
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.params.iter().all(|p| !p.mask.any())
    }

    /// Copy of this network in another precision.
    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            input_shape: self.input_shape.clone(),
            layers: self.layers.clone(),
            shapes: self.shapes.clone(),
            params: self
                .params
                .iter()
                .map(|p| Param {
                    value: p.value.cast(),
                    mask: p.mask.clone(),
                })
                .collect(),
            offsets: self.offsets.clone(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        if input.shape().len() < 2 || input.shape()[1..] != self.input_shape[..] {
            return Err(Error::LayerShape {
                layer: 0,
                expected: format!("[batch, {:?}]", self.input_shape),
                found: format!("{:?}", input.shape()),
            });
        }
        Ok(())
    }

    fn layer_values(&self, i: usize) -> Vec<&Tensor<T>> {
        self.layer_params(i).iter().map(|p| &p.value).collect()
    }

    /// Forward pass over a batch `[batch, ...input_shape]`, retaining every
    /// layer output.
    pub fn forward(&self, input: &Tensor<T>) -> Result<Activations<T>> {
        self.check_input(input)?;
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(input.clone());
        for i in 0..self.layers.len() {
            let next = self.run_layer(i, &values[i]);
            values.push(next);
        }
        Ok(Activations { values })
    }

    /// Forward pass that keeps only the final output.
    pub fn predict(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(input)?;
        let mut x = self.run_layer(0, input);
        for i in 1..self.layers.len() {
            x = self.run_layer(i, &x);
        }
        Ok(x)
    }

    fn run_layer(&self, i: usize, x: &Tensor<T>) -> Tensor<T> {
        self.layers[i].forward(&self.layer_values(i), x, &self.shapes[i + 1])
    }

    /// Backward pass from the gradient of the final output. Masked parameter
    /// entries receive exactly zero gradient.
    pub fn backward(&self, acts: &Activations<T>, output_grad: &Tensor<T>) -> Result<Gradients<T>> {
        self.backward_from(acts, self.layers.len(), output_grad)
    }

    /// Backward pass starting at the output of layer `end - 1`; layers from
    /// `end` onward are skipped. Lets a loss supply its gradient with respect
    /// to pre-softmax logits.
    pub fn backward_from(&self, acts: &Activations<T>, end: usize, grad_at: &Tensor<T>) -> Result<Gradients<T>> {
        if end > self.layers.len() {
            return Err(Error::Shape(format!("layer index {end} past {} layers", self.layers.len())));
        }
        if acts.values.len() != self.layers.len() + 1 {
            return Err(Error::MissingActivations(format!(
                "expected {} tensors, got {}",
                self.layers.len() + 1,
                acts.values.len()
            )));
        }
        for (i, a) in acts.values.iter().enumerate() {
            if a.shape().len() < 2 || a.shape()[1..] != self.shapes[i][..] {
                return Err(Error::MissingActivations(format!(
                    "activation {i} has shape {:?}, expected [batch, {:?}]",
                    a.shape(),
                    self.shapes[i]
                )));
            }
        }
        if grad_at.shape() != acts.values[end].shape() {
            return Err(Error::Shape(format!(
                "gradient shape {:?} does not match activation {:?}",
                grad_at.shape(),
                acts.values[end].shape()
            )));
        }
        let mut params: Vec<Tensor<T>> = self.params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        let mut grad = grad_at.clone();
        for i in (0..end).rev() {
            let (pg, gin) = self.layers[i].backward(&self.layer_values(i), &acts.values[i], &acts.values[i + 1], &grad);
            for (j, mut g) in pg.into_iter().enumerate() {
                let idx = self.offsets[i] + j;
                for (v, &m) in g.data_mut().iter_mut().zip(self.params[idx].mask.bits()) {
                    if !m {
                        *v = T::zero();
                    }
                }
                params[idx] = g;
            }
            grad = gin;
        }
        Ok(Gradients { params, input: grad })
    }

    /// Little-endian bytes of every parameter, in order.
    pub fn param_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for p in &self.params {
            for v in p.value.data() {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
        out
    }
}

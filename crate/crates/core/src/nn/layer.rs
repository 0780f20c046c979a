use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::real::gemm;
use super::{Real, Tensor};

/// One stage of a feed-forward stack.
///
/// Shapes below are per sample; every layer operates on a batch whose leading
/// dimension is the sample index. Image tensors are `[channels, height, width]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// Cross-correlation with explicit zero padding. Weight shape
    /// `[out_channels, in_channels * kernel_h * kernel_w]`, bias `[out_channels]`.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        padding: usize,
    },
    /// Non-overlapping or strided max pooling; trailing rows/columns that do
    /// not fill a window are dropped.
    MaxPool2d { size: usize, stride: usize },
    /// `y = W x + b` with weight shape `[outputs, inputs]`.
    Dense { inputs: usize, outputs: usize },
    Relu,
    /// Softmax over a 1-D sample.
    Softmax,
    Flatten,
}

impl LayerSpec {
    pub fn conv(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel_h: kernel,
            kernel_w: kernel,
            stride: 1,
            padding: 0,
        }
    }

    pub fn max_pool(size: usize) -> Self {
        LayerSpec::MaxPool2d { size, stride: size }
    }

    pub fn dense(inputs: usize, outputs: usize) -> Self {
        LayerSpec::Dense { inputs, outputs }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::MaxPool2d { .. } => "maxpool2d",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Relu => "relu",
            LayerSpec::Softmax => "softmax",
            LayerSpec::Flatten => "flatten",
        }
    }

    /// Shapes of (weight, bias) for parameterized layers.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                ..
            } => vec![
                vec![out_channels, in_channels * kernel_h * kernel_w],
                vec![out_channels],
            ],
            LayerSpec::Dense { inputs, outputs } => vec![vec![outputs, inputs], vec![outputs]],
            _ => Vec::new(),
        }
    }

    pub(crate) fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                kernel_h,
                kernel_w,
                ..
            } => in_channels * kernel_h * kernel_w,
            LayerSpec::Dense { inputs, .. } => inputs,
            _ => 0,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        let ok = match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                ..
            } => in_channels > 0 && out_channels > 0 && kernel_h > 0 && kernel_w > 0 && stride > 0,
            LayerSpec::MaxPool2d { size, stride } => size > 0 && stride > 0,
            LayerSpec::Dense { inputs, outputs } => inputs > 0 && outputs > 0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{} dimensions must be strictly positive", self.name()))
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
            } => {
                let [c, h, w] = image_dims(input)?;
                if c != in_channels {
                    return Err(format!("expected {in_channels} input channels, got {c}"));
                }
                let (hp, wp) = (h + 2 * padding, w + 2 * padding);
                if hp < kernel_h || wp < kernel_w {
                    return Err(format!(
                        "kernel {kernel_h}x{kernel_w} larger than padded input {hp}x{wp}"
                    ));
                }
                Ok(vec![
                    out_channels,
                    (hp - kernel_h) / stride + 1,
                    (wp - kernel_w) / stride + 1,
                ])
            }
            LayerSpec::MaxPool2d { size, stride } => {
                let [c, h, w] = image_dims(input)?;
                if h < size || w < size {
                    return Err(format!("pool window {size} larger than input {h}x{w}"));
                }
                Ok(vec![c, (h - size) / stride + 1, (w - size) / stride + 1])
            }
            LayerSpec::Dense { inputs, outputs } => {
                if input != [inputs] {
                    return Err(format!("expected [{inputs}], got {input:?}"));
                }
                Ok(vec![outputs])
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::Softmax => {
                if input.len() != 1 {
                    return Err(format!("softmax expects a 1-D sample, got {input:?}"));
                }
                Ok(input.to_vec())
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    /// Batched forward pass. `out_shape` is the per-sample output shape.
    pub(crate) fn forward<T: Real>(
        &self,
        params: &[&Tensor<T>],
        input: &Tensor<T>,
        out_shape: &[usize],
    ) -> Tensor<T> {
        let n = input.batch();
        let mut shape = vec![n];
        shape.extend_from_slice(out_shape);
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
            } => {
                let geom = ConvGeom {
                    channels: in_channels,
                    height: input.shape()[2],
                    width: input.shape()[3],
                    kernel_h,
                    kernel_w,
                    stride,
                    padding,
                    out_h: out_shape[1],
                    out_w: out_shape[2],
                };
                let (k, p) = (geom.col_rows(), geom.col_cols());
                let (weight, bias) = (params[0].data(), params[1].data());
                let mut out = Tensor::zeros(&shape);
                let mut cols = vec![T::zero(); k * p];
                for s in 0..n {
                    geom.im2col(input.row(s), &mut cols);
                    let o = out.row_mut(s);
                    for (oc, chunk) in o.chunks_mut(p).enumerate() {
                        chunk.iter_mut().for_each(|v| *v = bias[oc]);
                    }
                    gemm(out_channels, k, p, T::one(), weight, false, &cols, false, T::one(), o);
                }
                out
            }
            LayerSpec::MaxPool2d { size, stride } => {
                let (c, h, w) = (input.shape()[1], input.shape()[2], input.shape()[3]);
                let (oh, ow) = (out_shape[1], out_shape[2]);
                let mut out = Tensor::zeros(&shape);
                for s in 0..n {
                    let x = input.row(s);
                    let o = out.row_mut(s);
                    for ch in 0..c {
                        let plane = &x[ch * h * w..(ch + 1) * h * w];
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let idx = pool_argmax(plane, w, oy * stride, ox * stride, size);
                                o[(ch * oh + oy) * ow + ox] = plane[idx];
                            }
                        }
                    }
                }
                out
            }
            LayerSpec::Dense { inputs, outputs } => {
                let mut out = Tensor::zeros(&shape);
                let bias = params[1].data();
                for r in 0..n {
                    out.row_mut(r).copy_from_slice(bias);
                }
                gemm(
                    n,
                    inputs,
                    outputs,
                    T::one(),
                    input.data(),
                    false,
                    params[0].data(),
                    true,
                    T::one(),
                    out.data_mut(),
                );
                out
            }
            LayerSpec::Relu => {
                let data = input
                    .data()
                    .iter()
                    .map(|&v| if v > T::zero() { v } else { T::zero() })
                    .collect();
                Tensor::new(shape, data).expect("relu preserves length")
            }
            LayerSpec::Softmax => {
                let mut out = input.clone();
                for r in 0..n {
                    super::softmax_in_place(out.row_mut(r));
                }
                out
            }
            LayerSpec::Flatten => input.clone().reshape(shape).expect("flatten preserves length"),
        }
    }

    /// Batched backward pass. Returns parameter gradients (unmasked) and the
    /// gradient with respect to the layer input.
    pub(crate) fn backward<T: Real>(
        &self,
        params: &[&Tensor<T>],
        input: &Tensor<T>,
        output: &Tensor<T>,
        grad_out: &Tensor<T>,
    ) -> (Vec<Tensor<T>>, Tensor<T>) {
        let n = input.batch();
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
            } => {
                let geom = ConvGeom {
                    channels: in_channels,
                    height: input.shape()[2],
                    width: input.shape()[3],
                    kernel_h,
                    kernel_w,
                    stride,
                    padding,
                    out_h: output.shape()[2],
                    out_w: output.shape()[3],
                };
                let (k, p) = (geom.col_rows(), geom.col_cols());
                let weight = params[0].data();
                let mut dw = Tensor::zeros(params[0].shape());
                let mut db = Tensor::zeros(params[1].shape());
                let mut dx = Tensor::zeros(input.shape());
                let mut cols = vec![T::zero(); k * p];
                let mut dcols = vec![T::zero(); k * p];
                for s in 0..n {
                    let g = grad_out.row(s);
                    geom.im2col(input.row(s), &mut cols);
                    gemm(out_channels, p, k, T::one(), g, false, &cols, true, T::one(), dw.data_mut());
                    for (oc, chunk) in g.chunks(p).enumerate() {
                        db.data_mut()[oc] += chunk.iter().copied().sum();
                    }
                    gemm(k, out_channels, p, T::one(), weight, true, g, false, T::zero(), &mut dcols);
                    geom.col2im(&dcols, dx.row_mut(s));
                }
                (vec![dw, db], dx)
            }
            LayerSpec::MaxPool2d { size, stride } => {
                let (c, h, w) = (input.shape()[1], input.shape()[2], input.shape()[3]);
                let (oh, ow) = (output.shape()[2], output.shape()[3]);
                let mut dx = Tensor::zeros(input.shape());
                for s in 0..n {
                    let x = input.row(s);
                    let g = grad_out.row(s);
                    let d = dx.row_mut(s);
                    for ch in 0..c {
                        let plane = &x[ch * h * w..(ch + 1) * h * w];
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let idx = pool_argmax(plane, w, oy * stride, ox * stride, size);
                                d[ch * h * w + idx] += g[(ch * oh + oy) * ow + ox];
                            }
                        }
                    }
                }
                (Vec::new(), dx)
            }
            LayerSpec::Dense { inputs, outputs } => {
                let mut dw = Tensor::zeros(params[0].shape());
                gemm(
                    outputs,
                    n,
                    inputs,
                    T::one(),
                    grad_out.data(),
                    true,
                    input.data(),
                    false,
                    T::zero(),
                    dw.data_mut(),
                );
                let mut db = Tensor::zeros(params[1].shape());
                for r in 0..n {
                    for (b, &g) in db.data_mut().iter_mut().zip(grad_out.row(r)) {
                        *b += g;
                    }
                }
                let mut dx = Tensor::zeros(input.shape());
                gemm(
                    n,
                    outputs,
                    inputs,
                    T::one(),
                    grad_out.data(),
                    false,
                    params[0].data(),
                    false,
                    T::zero(),
                    dx.data_mut(),
                );
                (vec![dw, db], dx)
            }
            LayerSpec::Relu => {
                let mut dx = grad_out.clone();
                for (d, &x) in dx.data_mut().iter_mut().zip(input.data()) {
                    if x <= T::zero() {
                        *d = T::zero();
                    }
                }
                (Vec::new(), dx)
            }
            LayerSpec::Softmax => {
                let mut dx = grad_out.clone();
                for r in 0..n {
                    let s = output.row(r);
                    let dot: T = s.iter().zip(grad_out.row(r)).map(|(&a, &b)| a * b).sum();
                    for (d, &si) in dx.row_mut(r).iter_mut().zip(s) {
                        *d = si * (*d - dot);
                    }
                }
                (Vec::new(), dx)
            }
            LayerSpec::Flatten => (
                Vec::new(),
                grad_out
                    .clone()
                    .reshape(input.shape().to_vec())
                    .expect("flatten preserves length"),
            ),
        }
    }
}

fn image_dims(input: &[usize]) -> Result<[usize; 3], String> {
    match *input {
        [c, h, w] => Ok([c, h, w]),
        _ => Err(format!("expected [channels, height, width], got {input:?}")),
    }
}

/// Index within `plane` of the first maximum in the window at (y0, x0).
fn pool_argmax<T: Real>(plane: &[T], width: usize, y0: usize, x0: usize, size: usize) -> usize {
    let mut best = y0 * width + x0;
    for y in y0..y0 + size {
        for x in x0..x0 + size {
            let i = y * width + x;
            if plane[i] > plane[best] {
                best = i;
            }
        }
    }
    best
}

struct ConvGeom {
    channels: usize,
    height: usize,
    width: usize,
    kernel_h: usize,
    kernel_w: usize,
    stride: usize,
    padding: usize,
    out_h: usize,
    out_w: usize,
}

impl ConvGeom {
    fn col_rows(&self) -> usize {
        self.channels * self.kernel_h * self.kernel_w
    }

    fn col_cols(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Source pixel for output (oy, ox) and kernel tap (ky, kx), or None in the padding.
    #[inline]
    fn source(&self, oy: usize, ox: usize, ky: usize, kx: usize) -> Option<usize> {
        let y = (oy * self.stride + ky).checked_sub(self.padding)?;
        let x = (ox * self.stride + kx).checked_sub(self.padding)?;
        (y < self.height && x < self.width).then_some(y * self.width + x)
    }

    fn im2col<T: Real>(&self, image: &[T], cols: &mut [T]) {
        let p = self.col_cols();
        let plane = self.height * self.width;
        for c in 0..self.channels {
            let src = &image[c * plane..(c + 1) * plane];
            for ky in 0..self.kernel_h {
                for kx in 0..self.kernel_w {
                    let row = (c * self.kernel_h + ky) * self.kernel_w + kx;
                    let dst = &mut cols[row * p..(row + 1) * p];
                    for oy in 0..self.out_h {
                        for ox in 0..self.out_w {
                            dst[oy * self.out_w + ox] = match self.source(oy, ox, ky, kx) {
                                Some(i) => src[i],
                                None => T::zero(),
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im<T: Real>(&self, cols: &[T], image: &mut [T]) {
        let p = self.col_cols();
        let plane = self.height * self.width;
        for c in 0..self.channels {
            let dst = &mut image[c * plane..(c + 1) * plane];
            for ky in 0..self.kernel_h {
                for kx in 0..self.kernel_w {
                    let row = (c * self.kernel_h + ky) * self.kernel_w + kx;
                    let src = &cols[row * p..(row + 1) * p];
                    for oy in 0..self.out_h {
                        for ox in 0..self.out_w {
                            if let Some(i) = self.source(oy, ox, ky, kx) {
                                dst[i] += src[oy * self.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_output_shape_respects_padding_and_stride() {
        let l = LayerSpec::Conv2d {
            in_channels: 1,
            out_channels: 4,
            kernel_h: 3,
            kernel_w: 3,
            stride: 2,
            padding: 1,
        };
        assert_eq!(l.output_shape(&[1, 28, 28]).unwrap(), vec![4, 14, 14]);
        assert!(l.output_shape(&[2, 28, 28]).is_err());
        assert!(LayerSpec::conv(1, 1, 5).output_shape(&[1, 3, 3]).is_err());
    }

    #[test]
    fn pool_drops_ragged_edge() {
        let l = LayerSpec::max_pool(2);
        assert_eq!(l.output_shape(&[32, 11, 11]).unwrap(), vec![32, 5, 5]);
    }

    #[test]
    fn one_by_one_conv_scales_image() {
        let l = LayerSpec::conv(1, 1, 1);
        let w = Tensor::new(vec![1, 1], vec![2.0f32]).unwrap();
        let b = Tensor::new(vec![1], vec![0.0f32]).unwrap();
        let x = Tensor::full(&[1, 1, 2, 2], 1.0f32);
        let y = l.forward(&[&w, &b], &x, &[1, 2, 2]);
        assert_eq!(y.shape(), &[1, 1, 2, 2]);
        assert_eq!(y.data(), &[2.0; 4]);
    }

    #[test]
    fn padded_conv_matches_direct_sum() {
        // 3x3 box filter over a 3x3 ramp with padding 1.
        let l = LayerSpec::Conv2d {
            in_channels: 1,
            out_channels: 1,
            kernel_h: 3,
            kernel_w: 3,
            stride: 1,
            padding: 1,
        };
        let w = Tensor::full(&[1, 9], 1.0f64);
        let b = Tensor::new(vec![1], vec![0.5]).unwrap();
        let params = [&w, &b];
        let img: Vec<f64> = (0..9).map(|v| v as f64).collect();
        let x = Tensor::new(vec![1, 1, 3, 3], img.clone()).unwrap();
        let y = l.forward(&params, &x, &[1, 3, 3]);
        for oy in 0..3i64 {
            for ox in 0..3i64 {
                let mut s = 0.5;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (yy, xx) = (oy + dy, ox + dx);
                        if (0..3).contains(&yy) && (0..3).contains(&xx) {
                            s += img[(yy * 3 + xx) as usize];
                        }
                    }
                }
                assert_eq!(y.data()[(oy * 3 + ox) as usize], s);
            }
        }
    }

    #[test]
    fn relu_clamps_negatives() {
        let x = Tensor::new(vec![1, 2], vec![-1.0f32, 2.0]).unwrap();
        let y = LayerSpec::Relu.forward(&[], &x, &[2]);
        assert_eq!(y.data(), &[0.0, 2.0]);
    }

    #[test]
    fn max_pool_picks_window_max() {
        let x = Tensor::new(vec![1, 1, 2, 2], vec![1.0f32, 4.0, 3.0, 2.0]).unwrap();
        let l = LayerSpec::max_pool(2);
        let y = l.forward(&[], &x, &[1, 1, 1]);
        assert_eq!(y.data(), &[4.0]);
        let g = Tensor::new(vec![1, 1, 1, 1], vec![1.5f32]).unwrap();
        let (_, dx) = l.backward(&[], &x, &y, &g);
        assert_eq!(dx.data(), &[0.0, 1.5, 0.0, 0.0]);
    }
}

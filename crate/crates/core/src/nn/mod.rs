//! Minimal neural-network substrate.
//!
//! Networks are fixed stacks of [`LayerSpec`]s evaluated on batches whose
//! leading dimension is the sample index. Parameters are stored in `f32` for
//! training; the same code runs in `f64` for gradient checking.

mod gradcheck;
mod layer;
pub mod loss;
mod metrics;
mod network;
mod optim;
mod real;
mod tensor;

pub use gradcheck::{gradient_check, GradCheckReport};
pub use layer::LayerSpec;
pub use metrics::{auc_mann_whitney, TieRule};
pub use network::{Activations, Gradients, Network, Param, TrainableMask};
pub use optim::Sgd;
pub use real::Real;
pub use tensor::Tensor;

/// Numerically stable softmax over a 1-D slice.
pub fn softmax<T: Real>(logits: &[T]) -> alloc::vec::Vec<T> {
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    out
}

pub(crate) fn softmax_in_place<T: Real>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

/// Softmax applied to a 1-D logit tensor of length at least 2.
pub fn softmax_tensor<T: Real>(logits: &Tensor<T>) -> crate::Result<Tensor<T>> {
    if logits.shape().len() != 1 || logits.len() < 2 {
        return Err(crate::Error::Shape(alloc::format!(
            "softmax expects 1-D logits of length >= 2, got {:?}",
            logits.shape()
        )));
    }
    Tensor::new(logits.shape().to_vec(), softmax(logits.data()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let s = softmax(&[0.0f64, 0.0]);
        assert_eq!(s, [0.5, 0.5]);

        let s = softmax(&[libm::log(2.0), 0.0]);
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((s[1] - 1.0 / 3.0).abs() < 1e-12);

        for c in [-50.0, 0.0, 3.5, 700.0] {
            let s = softmax(&[c, c, c]);
            for v in s {
                assert!((v - 1.0f64 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_tensor_rejects_short_input() {
        let t = Tensor::new(alloc::vec![1], alloc::vec![1.0f32]).unwrap();
        assert!(softmax_tensor(&t).is_err());
    }
}

//! Learning objectives.
//!
//! Values are accumulated in `f64`. Gradient helpers return the derivative of
//! the stated value with respect to the network output.

use alloc::format;
use alloc::vec::Vec;

use super::{Real, Tensor};
use crate::{Error, Result};

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` before logs.
pub const PROB_FLOOR: f64 = 1e-7;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

fn same_shape<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "batch shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Mean over tokens of the squared Euclidean distance between expected and
/// computed vectors. Both tensors are `[n, ...]` with `n >= 1`.
pub fn mse<T: Real>(expected: &Tensor<T>, computed: &Tensor<T>) -> Result<f64> {
    same_shape(expected, computed)?;
    let n = expected.batch();
    let total: f64 = expected
        .data()
        .iter()
        .zip(computed.data())
        .map(|(&x, &y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum();
    Ok(total / n as f64)
}

pub fn mse_grad<T: Real>(expected: &Tensor<T>, computed: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape(expected, computed)?;
    let scale = 2.0 / expected.batch() as f64;
    let data = expected
        .data()
        .iter()
        .zip(computed.data())
        .map(|(&x, &y)| T::from_f64(scale * (y.as_f64() - x.as_f64())))
        .collect();
    Tensor::new(computed.shape().to_vec(), data)
}

/// Binary cross-entropy summed over the batch:
/// `-sum_i [y_i ln p_i + (1 - y_i) ln(1 - p_i)]`.
pub fn cross_entropy(targets: &[f64], outputs: &[f64]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if targets.len() != outputs.len() {
        return Err(Error::Shape(format!(
            "{} targets for {} outputs",
            targets.len(),
            outputs.len()
        )));
    }
    Ok(targets.iter().zip(outputs).map(|(&y, &p)| binary_term(y, p)).sum())
}

fn binary_term(y: f64, p: f64) -> f64 {
    let p = clamp_prob(p);
    -(y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p))
}

fn binary_term_grad(y: f64, p: f64) -> f64 {
    let p = clamp_prob(p);
    -y / p + (1.0 - y) / (1.0 - p)
}

fn check_detector_batch<T: Real>(labels: &Tensor<T>, outputs: &Tensor<T>) -> Result<()> {
    same_shape(labels, outputs)?;
    if labels.shape().len() != 2 || labels.shape()[1] != 2 {
        return Err(Error::Shape(format!(
            "detector batches are [n, 2], got {:?}",
            labels.shape()
        )));
    }
    for r in 0..labels.batch() {
        let l = labels.row(r);
        let (a, b) = (l[0].as_f64(), l[1].as_f64());
        if !((a == 1.0 && b == 0.0) || (a == 0.0 && b == 1.0)) {
            return Err(Error::InvalidDetectorLabel { row: r });
        }
    }
    Ok(())
}

/// Four-term detector loss: binary cross-entropy applied to both output
/// nodes, summed over the batch. Labels are `(1,0)` for the target class and
/// `(0,1)` otherwise.
pub fn detector_total<T: Real>(labels: &Tensor<T>, outputs: &Tensor<T>) -> Result<f64> {
    check_detector_batch(labels, outputs)?;
    Ok(labels
        .data()
        .iter()
        .zip(outputs.data())
        .map(|(&y, &p)| binary_term(y.as_f64(), p.as_f64()))
        .sum())
}

/// Gradient of [`detector_total`] with respect to the output pairs.
pub fn detector_total_grad<T: Real>(labels: &Tensor<T>, outputs: &Tensor<T>) -> Result<Tensor<T>> {
    check_detector_batch(labels, outputs)?;
    let data = labels
        .data()
        .iter()
        .zip(outputs.data())
        .map(|(&y, &p)| T::from_f64(binary_term_grad(y.as_f64(), p.as_f64())))
        .collect();
    Tensor::new(outputs.shape().to_vec(), data)
}

/// Training objective for detector heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectorObjective {
    #[default]
    CrossEntropy,
    Mse,
}

impl DetectorObjective {
    /// Loss value and output gradient, both normalized per sample.
    pub fn mean_value_and_grad<T: Real>(
        self,
        labels: &Tensor<T>,
        outputs: &Tensor<T>,
    ) -> Result<(f64, Tensor<T>)> {
        let n = labels.batch() as f64;
        match self {
            DetectorObjective::CrossEntropy => {
                let v = detector_total(labels, outputs)? / n;
                let mut g = detector_total_grad(labels, outputs)?;
                let s = T::from_f64(1.0 / n);
                g.data_mut().iter_mut().for_each(|x| *x *= s);
                Ok((v, g))
            }
            DetectorObjective::Mse => {
                check_detector_batch(labels, outputs)?;
                Ok((mse(labels, outputs)?, mse_grad(labels, outputs)?))
            }
        }
    }
}

/// Mean categorical cross-entropy of softmax probabilities against class
/// indices, and its gradient with respect to the pre-softmax logits.
pub fn softmax_cross_entropy<T: Real>(probs: &Tensor<T>, targets: &[usize]) -> Result<(f64, Tensor<T>)> {
    if targets.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if probs.shape().len() != 2 || probs.batch() != targets.len() {
        return Err(Error::Shape(format!(
            "{} targets for probabilities of shape {:?}",
            targets.len(),
            probs.shape()
        )));
    }
    let n = targets.len() as f64;
    let width = probs.row_len();
    let mut grad: Vec<T> = Vec::with_capacity(probs.len());
    let mut total = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        if t >= width {
            return Err(Error::Shape(format!("target {t} outside {width} classes")));
        }
        let row = probs.row(r);
        total -= libm::log(clamp_prob(row[t].as_f64()));
        for (k, &p) in row.iter().enumerate() {
            let y = if k == t { 1.0 } else { 0.0 };
            grad.push(T::from_f64((p.as_f64() - y) / n));
        }
    }
    Ok((total / n, Tensor::new(probs.shape().to_vec(), grad)?))
}

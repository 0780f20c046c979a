use alloc::format;
use alloc::vec::Vec;

use super::{Gradients, Network, Real, Tensor};
use crate::{Error, Result};

/// Momentum SGD: `v <- momentum * v - step_size * g`, `w <- w + v`.
///
/// Entries whose trainable mask is false are never written.
#[derive(Debug, Clone)]
pub struct Sgd<T = f32> {
    step_size: T,
    momentum: T,
    velocity: Vec<Tensor<T>>,
}

impl<T: Real> Sgd<T> {
    pub fn new(net: &Network<T>, step_size: T, momentum: T) -> Result<Self> {
        if !(step_size >= T::zero()) || !step_size.is_finite() {
            return Err(Error::Config(format!("step size must be >= 0, got {step_size:?}")));
        }
        if !(momentum >= T::zero() && momentum < T::one()) {
            return Err(Error::Config(format!("momentum must lie in [0, 1), got {momentum:?}")));
        }
        let velocity = net.params().iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        Ok(Self {
            step_size,
            momentum,
            velocity,
        })
    }

    pub fn step_size(&self) -> T {
        self.step_size
    }

    pub fn momentum(&self) -> T {
        self.momentum
    }

    pub fn velocity(&self) -> &[Tensor<T>] {
        &self.velocity
    }

    /// Apply one update. Fails without touching the network if any gradient
    /// entry is non-finite.
    pub fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>) -> Result<()> {
        self.step_with(net, &grads.params)
    }

    pub fn step_with(&mut self, net: &mut Network<T>, grads: &[Tensor<T>]) -> Result<()> {
        if grads.len() != net.params().len() {
            return Err(Error::Shape(format!(
                "{} gradients for {} parameters",
                grads.len(),
                net.params().len()
            )));
        }
        for (i, (g, p)) in grads.iter().zip(net.params()).enumerate() {
            if g.shape() != p.value.shape() {
                return Err(Error::Shape(format!(
                    "gradient {i} has shape {:?}, parameter has {:?}",
                    g.shape(),
                    p.value.shape()
                )));
            }
            if let Some(index) = g.data().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { param: i, index });
            }
        }
        for ((p, g), v) in net.params_mut().iter_mut().zip(grads).zip(&mut self.velocity) {
            let bits = p.mask.bits();
            let w = p.value.data_mut();
            for (j, ((w, &g), v)) in w.iter_mut().zip(g.data()).zip(v.data_mut()).enumerate() {
                if bits[j] {
                    *v = self.momentum * *v - self.step_size * g;
                    *w += *v;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerSpec;
    use alloc::vec;

    fn scalar_net(w: f64) -> Network<f64> {
        let mut net = Network::new(&[1], vec![LayerSpec::dense(1, 1)]).unwrap();
        net.params_mut()[0].value.data_mut()[0] = w;
        net
    }

    fn grads(g: f64) -> Vec<Tensor<f64>> {
        vec![Tensor::full(&[1, 1], g), Tensor::zeros(&[1])]
    }

    #[test]
    fn zero_step_leaves_parameters() {
        let mut net = scalar_net(1.0);
        let mut opt = Sgd::new(&net, 0.0, 0.9).unwrap();
        opt.step_with(&mut net, &grads(3.0)).unwrap();
        assert_eq!(net.params()[0].value.data(), &[1.0]);
    }

    #[test]
    fn one_plain_step() {
        let mut net = scalar_net(1.0);
        let mut opt = Sgd::new(&net, 1.0, 0.0).unwrap();
        opt.step_with(&mut net, &grads(0.5)).unwrap();
        assert_eq!(net.params()[0].value.data(), &[0.5]);
    }

    #[test]
    fn momentum_accumulates() {
        let mut net = scalar_net(0.0);
        let mut opt = Sgd::new(&net, 0.1, 0.5).unwrap();
        opt.step_with(&mut net, &grads(1.0)).unwrap();
        opt.step_with(&mut net, &grads(1.0)).unwrap();
        // v1 = -0.1, v2 = -0.05 - 0.1
        assert!((net.params()[0].value.data()[0] - (-0.25)).abs() < 1e-15);
    }

    #[test]
    fn masked_weight_is_untouched() {
        let mut net = scalar_net(0.75);
        net.params_mut()[0].mask.fill(false);
        let mut opt = Sgd::new(&net, 0.3, 0.9).unwrap();
        for _ in 0..5 {
            opt.step_with(&mut net, &grads(-7.0)).unwrap();
        }
        assert_eq!(net.params()[0].value.data()[0].to_bits(), 0.75f64.to_bits());
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut net = scalar_net(1.0);
        let mut opt = Sgd::new(&net, 0.1, 0.0).unwrap();
        let err = opt.step_with(&mut net, &grads(f64::NAN)).unwrap_err();
        assert_eq!(err, Error::NonFiniteGradient { param: 0, index: 0 });
        assert_eq!(net.params()[0].value.data(), &[1.0]);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let net = scalar_net(1.0);
        assert!(Sgd::new(&net, -0.1, 0.0).is_err());
        assert!(Sgd::new(&net, 0.1, 1.0).is_err());
    }
}

use super::{Network, Tensor};
use crate::Result;

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)` over
    /// all trainable parameter entries and all input entries.
    pub max_relative_error: f64,
    pub checked: usize,
    /// Masked entries whose analytic gradient was not exactly zero.
    pub masked_nonzero: usize,
}

const DENOM_FLOOR: f64 = 1e-6;

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(DENOM_FLOOR)
}

/// Compare analytic gradients with central differences.
///
/// `loss` maps the network output to `(value, d value / d output)`.
pub fn gradient_check<F>(net: &Network<f64>, loss: F, input: &Tensor<f64>, epsilon: f64) -> Result<GradCheckReport>
where
    F: Fn(&Tensor<f64>) -> Result<(f64, Tensor<f64>)>,
{
    let acts = net.forward(input)?;
    let (_, out_grad) = loss(acts.output())?;
    let grads = net.backward(&acts, &out_grad)?;

    let eval = |n: &Network<f64>, x: &Tensor<f64>| -> Result<f64> { Ok(loss(&n.predict(x)?)?.0) };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        masked_nonzero: 0,
    };
    let mut probe = net.clone();
    for (pi, param) in net.params().iter().enumerate() {
        for j in 0..param.value.len() {
            let analytic = grads.params[pi].data()[j];
            if !param.mask.bits()[j] {
                if analytic != 0.0 {
                    report.masked_nonzero += 1;
                }
                continue;
            }
            let orig = param.value.data()[j];
            probe.params_mut()[pi].value.data_mut()[j] = orig + epsilon;
            let hi = eval(&probe, input)?;
            probe.params_mut()[pi].value.data_mut()[j] = orig - epsilon;
            let lo = eval(&probe, input)?;
            probe.params_mut()[pi].value.data_mut()[j] = orig;
            let numeric = (hi - lo) / (2.0 * epsilon);
            report.max_relative_error = report.max_relative_error.max(relative_error(analytic, numeric));
            report.checked += 1;
        }
    }
    let mut x = input.clone();
    for j in 0..x.len() {
        let orig = x.data()[j];
        x.data_mut()[j] = orig + epsilon;
        let hi = eval(net, &x)?;
        x.data_mut()[j] = orig - epsilon;
        let lo = eval(net, &x)?;
        x.data_mut()[j] = orig;
        let numeric = (hi - lo) / (2.0 * epsilon);
        report.max_relative_error = report
            .max_relative_error
            .max(relative_error(grads.input.data()[j], numeric));
        report.checked += 1;
    }
    Ok(report)
}

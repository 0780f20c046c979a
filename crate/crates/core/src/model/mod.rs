//! The growable recognizer: shared trunk, detector bank, decision network and
//! the checkpointable aggregate of all three.

mod checkpoint;
mod decision;
mod detector;
mod state;
mod trunk;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, encode_network, CheckpointError, CHECKPOINT_MAGIC, FORMAT_VERSION};
pub use decision::{decision_infer, DecisionNetwork, DecisionVariant};
pub use detector::{bank_infer, detector_infer, likelihood_ratio_decide, DetectorBank, DetectorHead, Hypothesis};
pub use state::AccretionState;
pub use trunk::{build_shared_trunk, SharedTrunk, TrunkArch};

use crate::nn::{Real, Tensor};

/// Run `f` over `[n, ...]` input in chunks of at most `chunk` rows and stack
/// the outputs.
pub(crate) fn chunked<T: Real, F>(input: &Tensor<T>, chunk: usize, mut f: F) -> crate::Result<Tensor<T>>
where
    F: FnMut(&Tensor<T>) -> crate::Result<Tensor<T>>,
{
    let n = input.batch();
    if n <= chunk {
        return f(input);
    }
    let sample_shape = input.shape()[1..].to_vec();
    let mut out_data = alloc::vec::Vec::new();
    let mut out_sample = alloc::vec::Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let rows: alloc::vec::Vec<&[T]> = (start..end).map(|i| input.row(i)).collect();
        let part = f(&Tensor::stack(&sample_shape, &rows)?)?;
        out_sample = part.shape()[1..].to_vec();
        out_data.extend_from_slice(part.data());
        start = end;
    }
    let mut shape = alloc::vec![n];
    shape.extend(out_sample);
    Tensor::new(shape, out_data)
}

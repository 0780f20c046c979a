//! MNIST ingestion, class partitioning, the rehearsal data pool and detector
//! training-set assembly.
//!
//! Samples are referred to by [`SampleId`], an index into the
//! [`LabeledImages`] store owned by a [`ClassPartition`].

mod idx;
mod images;
mod partition;
mod pool;

pub use idx::{parse_idx, parse_idx_images, parse_idx_labels, IdxData, IdxError, IdxImages, IMAGES_MAGIC, LABELS_MAGIC};
pub use images::{LabeledImages, SampleId};
pub use partition::{partition_by_class, ClassPartition, PartitionConfig};
pub use pool::{make_detector_training_set, Capacity, DataPool, DetectorSet};

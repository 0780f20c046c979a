use alloc::string::String;

use crate::ClassId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: expected {expected}, got {found}")]
    LayerShape {
        layer: usize,
        expected: String,
        found: String,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid layer {layer}: {reason}")]
    InvalidLayer { layer: usize, reason: String },
    #[error("activations do not match the network: {0}")]
    MissingActivations(String),
    #[error("non-finite gradient in parameter {param} at entry {index}")]
    NonFiniteGradient { param: usize, index: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("detector label at row {row} is not (1,0) or (0,1)")]
    InvalidDetectorLabel { row: usize },
    #[error("insufficient samples for class {class}: need {needed}, have {available}")]
    InsufficientSamples {
        class: ClassId,
        needed: usize,
        available: usize,
    },
    #[error("class {0} is already present")]
    DuplicateClass(ClassId),
    #[error("class {0} is not learned")]
    UnknownClass(ClassId),
    #[error("no data for class {0}")]
    MissingData(ClassId),
    #[error("no negative samples available for class {0}")]
    NoNegatives(ClassId),
    #[error("detector bank is empty")]
    EmptyBank,
    #[error("training set is unbalanced: {positives} positives vs {negatives} negatives")]
    Unbalanced { positives: usize, negatives: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown decision-network variant `{0}`")]
    UnknownVariant(String),
    #[error(transparent)]
    Idx(#[from] crate::data::IdxError),
    #[error(transparent)]
    Checkpoint(#[from] crate::model::CheckpointError),
}

//! Bootstrap training, class accretion, evaluation and decision-network
//! replacement.

mod accrete;
mod cache;
mod config;
mod eval;
mod train;

pub use accrete::{accrete_class, accrete_sequence, replace_decision_network, run_accretion};
pub use cache::{images, FeatureCache};
pub use config::{AccretionConfig, TrainConfig};
pub use eval::{evaluate, evaluate_detector, DetectorReport, EvalReport};
pub use train::{bootstrap_train, train_decision, train_detector};

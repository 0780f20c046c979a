use alloc::format;
use alloc::vec::Vec;

use crate::data::{Capacity, PartitionConfig};
use crate::model::TrunkArch;
use crate::nn::loss::DetectorObjective;
use crate::{ClassId, Error, Result};

/// Mini-batch SGD schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub momentum: f64,
}

impl TrainConfig {
    pub fn with_epochs(epochs: usize) -> Self {
        Self {
            epochs,
            ..Self::default()
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config(format!("{what} batch size must be positive")));
        }
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return Err(Error::Config(format!("{what} step size must be finite and non-negative")));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("{what} momentum must lie in [0, 1)")));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 64,
            step_size: 0.01,
            momentum: 0.9,
        }
    }
}

/// One accretion run: which classes are learned up front, the order in which
/// the rest arrive, and every training hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AccretionConfig {
    pub bootstrap_classes: Vec<ClassId>,
    pub accretion_order: Vec<ClassId>,
    pub train_per_class: usize,
    pub eval_per_class: usize,
    /// Joint trunk and bootstrap-detector training.
    pub bootstrap: TrainConfig,
    /// Detectors of accreted classes.
    pub detector: TrainConfig,
    pub decision: TrainConfig,
    pub pool_capacity: Capacity,
    pub seed: u64,
    pub trunk: TrunkArch,
    pub head_hidden: usize,
    pub objective: DetectorObjective,
}

impl Default for AccretionConfig {
    fn default() -> Self {
        Self {
            bootstrap_classes: alloc::vec![0, 1, 2],
            accretion_order: (3..10).collect(),
            train_per_class: 5000,
            eval_per_class: 800,
            bootstrap: TrainConfig::with_epochs(10),
            detector: TrainConfig::with_epochs(10),
            decision: TrainConfig::with_epochs(5),
            pool_capacity: Capacity::Unlimited,
            seed: 0,
            trunk: TrunkArch::default(),
            head_hidden: 64,
            objective: DetectorObjective::CrossEntropy,
        }
    }
}

impl AccretionConfig {
    /// Bootstrap on the first `size` classes of `0..10`, accrete the rest in
    /// natural order.
    pub fn natural(size: usize) -> Self {
        let all: Vec<ClassId> = (0..10).collect();
        let size = size.min(all.len());
        Self {
            bootstrap_classes: all[..size].to_vec(),
            accretion_order: all[size..].to_vec(),
            ..Self::default()
        }
    }

    /// Bootstrap classes followed by the accretion order.
    pub fn all_classes(&self) -> Vec<ClassId> {
        let mut v = self.bootstrap_classes.clone();
        v.extend_from_slice(&self.accretion_order);
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_classes.len() < 2 {
            return Err(Error::Config(format!(
                "bootstrap needs at least two classes, got {:?}",
                self.bootstrap_classes
            )));
        }
        let all = self.all_classes();
        for (i, c) in all.iter().enumerate() {
            if all[..i].contains(c) {
                return Err(Error::DuplicateClass(*c));
            }
        }
        if self.train_per_class == 0 || self.eval_per_class == 0 {
            return Err(Error::Config(format!(
                "per-class sample counts must be positive (train {}, eval {})",
                self.train_per_class, self.eval_per_class
            )));
        }
        if self.head_hidden == 0 {
            return Err(Error::Config(format!("detector hidden width must be positive")));
        }
        self.bootstrap.validate("bootstrap")?;
        self.detector.validate("detector")?;
        self.decision.validate("decision")?;
        Ok(())
    }

    pub fn partition_config(&self) -> PartitionConfig {
        let mut classes = self.all_classes();
        classes.sort_unstable();
        PartitionConfig {
            classes,
            train_per_class: self.train_per_class,
            eval_per_class: self.eval_per_class,
            seed: self.seed,
        }
    }
}

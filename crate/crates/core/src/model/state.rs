use alloc::format;
use alloc::vec::Vec;

use super::{DecisionNetwork, DetectorBank, SharedTrunk};
use crate::data::DataPool;
use crate::{ClassId, Error, Result};

/// Everything needed to resume accretion: frozen trunk, detector bank,
/// decision network and data pool.
#[derive(Debug, Clone, PartialEq)]
pub struct AccretionState {
    pub trunk: SharedTrunk,
    pub bank: DetectorBank,
    pub decision: DecisionNetwork,
    pub pool: DataPool,
    pub seed: u64,
    /// Number of leading registry classes learned in the bootstrap phase.
    pub bootstrap_size: usize,
}

impl AccretionState {
    pub fn new(
        trunk: SharedTrunk,
        bank: DetectorBank,
        decision: DecisionNetwork,
        pool: DataPool,
        seed: u64,
        bootstrap_size: usize,
    ) -> Result<Self> {
        let state = Self {
            trunk,
            bank,
            decision,
            pool,
            seed,
            bootstrap_size,
        };
        state.validate()?;
        Ok(state)
    }

    /// Classes learned in the bootstrap phase.
    pub fn bootstrap_classes(&self) -> &[ClassId] {
        &self.registry()[..self.bootstrap_size]
    }

    /// Learned classes in registry order.
    pub fn registry(&self) -> &[ClassId] {
        self.decision.registry()
    }

    pub fn learned(&self) -> usize {
        self.decision.classes()
    }

    pub fn is_learned(&self, class: ClassId) -> bool {
        self.registry().contains(&class)
    }

    /// Check that the three components and the pool agree on the learned
    /// classes and their order.
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_size == 0 || self.bootstrap_size > self.learned() {
            return Err(Error::Config(format!(
                "bootstrap size {} with {} learned classes",
                self.bootstrap_size,
                self.learned()
            )));
        }
        let bank = self.bank.registry();
        if bank.as_slice() != self.decision.registry() {
            return Err(Error::Config(format!(
                "detector bank {:?} and decision network {:?} disagree",
                bank,
                self.decision.registry()
            )));
        }
        let mut sorted = bank.clone();
        sorted.sort_unstable();
        let pooled: Vec<ClassId> = self.pool.classes().collect();
        if sorted != pooled {
            return Err(Error::Config(format!(
                "pool holds {pooled:?} but {sorted:?} are learned"
            )));
        }
        for head in self.bank.heads() {
            if head.input_dim() != self.trunk.feature_dim() {
                return Err(Error::Shape(format!(
                    "detector {} reads {} features, trunk produces {}",
                    head.class(),
                    head.input_dim(),
                    self.trunk.feature_dim()
                )));
            }
        }
        Ok(())
    }
}

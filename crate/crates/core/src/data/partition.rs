use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{LabeledImages, SampleId};
use crate::{rng, ClassId, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionConfig {
    pub classes: Vec<ClassId>,
    pub train_per_class: usize,
    pub eval_per_class: usize,
    pub seed: u64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            classes: (0..10).collect(),
            train_per_class: 5000,
            eval_per_class: 800,
            seed: 0,
        }
    }
}

/// Disjoint per-class train and eval sample lists over one image store.
#[derive(Debug, Clone)]
pub struct ClassPartition {
    store: LabeledImages,
    train: BTreeMap<ClassId, Vec<SampleId>>,
    eval: BTreeMap<ClassId, Vec<SampleId>>,
}

impl ClassPartition {
    pub fn store(&self) -> &LabeledImages {
        &self.store
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.train.keys().copied()
    }

    pub fn train(&self, class: ClassId) -> Option<&[SampleId]> {
        self.train.get(&class).map(Vec::as_slice)
    }

    pub fn eval(&self, class: ClassId) -> Option<&[SampleId]> {
        self.eval.get(&class).map(Vec::as_slice)
    }

    pub fn train_total(&self) -> usize {
        self.train.values().map(Vec::len).sum()
    }

    pub fn eval_total(&self) -> usize {
        self.eval.values().map(Vec::len).sum()
    }

    /// Build from explicit lists. Used for synthetic data in tests and tools.
    pub fn from_lists(
        store: LabeledImages,
        train: BTreeMap<ClassId, Vec<SampleId>>,
        eval: BTreeMap<ClassId, Vec<SampleId>>,
    ) -> Result<Self> {
        for (class, ids) in train.iter().chain(eval.iter()) {
            if let Some(&bad) = ids.iter().find(|&&i| i >= store.len() || store.label(i) != *class) {
                return Err(Error::Config(alloc::format!(
                    "sample {bad} is not a class {class} sample of the store"
                )));
            }
        }
        Ok(Self { store, train, eval })
    }
}

fn ids_of(store: &LabeledImages, class: ClassId, range: core::ops::Range<usize>) -> Vec<SampleId> {
    range.filter(|&i| store.label(i) == class).collect()
}

/// Split samples per class into train and eval lists.
///
/// With `eval_source = None`, both lists are drawn without overlap from
/// `train_source`. Otherwise eval samples come from `eval_source`, whose ids
/// are appended after the training ids in the partition's store.
pub fn partition_by_class(
    train_source: LabeledImages,
    eval_source: Option<&LabeledImages>,
    config: &PartitionConfig,
) -> Result<ClassPartition> {
    let split = train_source.len();
    let store = match eval_source {
        Some(e) => train_source.concat(e)?,
        None => train_source,
    };
    let mut train = BTreeMap::new();
    let mut eval = BTreeMap::new();
    for &class in &config.classes {
        if train.contains_key(&class) {
            return Err(Error::DuplicateClass(class));
        }
        let mut rng = rng::rng(config.seed, &[rng::tag::PARTITION, class as u64]);
        let mut pool = ids_of(&store, class, 0..split);
        pool.shuffle(&mut rng);
        let (mut tr, mut ev) = if eval_source.is_some() {
            let mut held = ids_of(&store, class, split..store.len());
            held.shuffle(&mut rng);
            if pool.len() < config.train_per_class {
                return Err(Error::InsufficientSamples {
                    class,
                    needed: config.train_per_class,
                    available: pool.len(),
                });
            }
            if held.len() < config.eval_per_class {
                return Err(Error::InsufficientSamples {
                    class,
                    needed: config.eval_per_class,
                    available: held.len(),
                });
            }
            pool.truncate(config.train_per_class);
            held.truncate(config.eval_per_class);
            (pool, held)
        } else {
            let needed = config.train_per_class + config.eval_per_class;
            if pool.len() < needed {
                return Err(Error::InsufficientSamples {
                    class,
                    needed,
                    available: pool.len(),
                });
            }
            let ev = pool[config.train_per_class..needed].to_vec();
            pool.truncate(config.train_per_class);
            (pool, ev)
        };
        tr.sort_unstable();
        ev.sort_unstable();
        train.insert(class, tr);
        eval.insert(class, ev);
    }
    Ok(ClassPartition { store, train, eval })
}

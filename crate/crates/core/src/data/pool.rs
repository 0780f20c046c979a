use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;

use super::SampleId;
use crate::{rng, ClassId, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Capacity {
    #[default]
    Unlimited,
    PerClass(usize),
}

impl Capacity {
    fn limit(self, n: usize) -> usize {
        match self {
            Capacity::Unlimited => n,
            Capacity::PerClass(c) => n.min(c),
        }
    }
}

/// Stored samples of already learned classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPool {
    capacity: Capacity,
    seed: u64,
    classes: BTreeMap<ClassId, Vec<SampleId>>,
}

impl DataPool {
    pub fn new(capacity: Capacity, seed: u64) -> Result<Self> {
        if capacity == Capacity::PerClass(0) {
            return Err(Error::Config("pool capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            seed,
            classes: BTreeMap::new(),
        })
    }

    /// Rebuild a pool from a stored manifest.
    pub fn from_manifest(capacity: Capacity, seed: u64, classes: BTreeMap<ClassId, Vec<SampleId>>) -> Result<Self> {
        let mut pool = Self::new(capacity, seed)?;
        for (class, ids) in &classes {
            if capacity.limit(ids.len()) != ids.len() {
                return Err(Error::Config(alloc::format!(
                    "class {class} holds {} samples, above capacity",
                    ids.len()
                )));
            }
        }
        pool.classes = classes;
        Ok(pool)
    }

    pub fn capacity(&self) -> Capacity {
        self.capacity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn contains(&self, class: ClassId) -> bool {
        self.classes.contains_key(&class)
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.classes.keys().copied()
    }

    pub fn samples(&self, class: ClassId) -> Option<&[SampleId]> {
        self.classes.get(&class).map(Vec::as_slice)
    }

    pub fn by_class(&self) -> &BTreeMap<ClassId, Vec<SampleId>> {
        &self.classes
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn total(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }

    /// Store a uniform random subset of `samples` of size
    /// `min(len, capacity)`, keeping the original relative order.
    pub fn insert_class(&mut self, class: ClassId, samples: &[SampleId]) -> Result<()> {
        if self.contains(class) {
            return Err(Error::DuplicateClass(class));
        }
        let keep = self.capacity.limit(samples.len());
        let stored = if keep == samples.len() {
            samples.to_vec()
        } else {
            let mut rng = rng::rng(self.seed, &[rng::tag::POOL, class as u64]);
            let mut picked = index::sample(&mut rng, samples.len(), keep).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| samples[i]).collect()
        };
        self.classes.insert(class, stored);
        Ok(())
    }
}

/// Balanced detector training set: positives labeled `(1,0)`, an equal number
/// of negatives labeled `(0,1)`, in a seeded shuffled order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorSet {
    pub target: ClassId,
    pub samples: Vec<SampleId>,
    pub positive: Vec<bool>,
}

impl DetectorSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.positive.iter().filter(|&&p| p).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }
}

/// Assemble the training set for the detector of `target`.
///
/// Negatives come from every non-target class of `pool`, plus `peers` when
/// given (peer lists take precedence for classes in both). The negative count
/// equals the positive count and is split evenly across negative classes in
/// class order, the first `n % k` classes taking one extra. A class shorter
/// than its quota is sampled with replacement.
pub fn make_detector_training_set(
    pool: &DataPool,
    target: ClassId,
    positives: &[SampleId],
    peers: Option<&BTreeMap<ClassId, Vec<SampleId>>>,
    seed: u64,
) -> Result<DetectorSet> {
    if positives.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut sources: BTreeMap<ClassId, &[SampleId]> = pool
        .by_class()
        .iter()
        .map(|(&c, v)| (c, v.as_slice()))
        .collect();
    if let Some(peers) = peers {
        for (&c, v) in peers {
            sources.insert(c, v.as_slice());
        }
    }
    sources.remove(&target);
    sources.retain(|_, v| !v.is_empty());
    if sources.is_empty() {
        return Err(Error::NoNegatives(target));
    }

    let mut rng = rng::rng(seed, &[rng::tag::DETECTOR_SET, target as u64]);
    let n = positives.len();
    let k = sources.len();
    let mut samples: Vec<SampleId> = positives.to_vec();
    let mut positive = alloc::vec![true; n];
    for (j, src) in sources.values().enumerate() {
        let quota = n / k + usize::from(j < n % k);
        if src.len() >= quota {
            samples.extend(index::sample(&mut rng, src.len(), quota).into_iter().map(|i| src[i]));
        } else {
            samples.extend((0..quota).map(|_| src[rng.random_range(0..src.len())]));
        }
        positive.extend(core::iter::repeat(false).take(quota));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    Ok(DetectorSet {
        target,
        samples: order.iter().map(|&i| samples[i]).collect(),
        positive: order.iter().map(|&i| positive[i]).collect(),
    })
}

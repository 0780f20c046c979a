use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::FeatureCache;
use crate::data::ClassPartition;
use crate::model::{AccretionState, DecisionNetwork, DetectorBank, DetectorHead, SharedTrunk};
use crate::nn::{auc_mann_whitney, TieRule};
use crate::{ClassId, Error, Result};

/// Evaluation of a recognizer over its learned classes.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Learned classes in registry order.
    pub classes: Vec<ClassId>,
    /// Accuracy of each class in `classes`.
    pub per_class: Vec<f64>,
    /// Unweighted mean of `per_class`.
    pub mean: f64,
    /// `confusion[i][j]`: samples of `classes[i]` predicted as `classes[j]`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    /// Build a report from true and predicted registry positions.
    pub fn from_predictions(classes: Vec<ClassId>, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        let m = classes.len();
        if truth.len() != predicted.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut confusion = vec![vec![0usize; m]; m];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= m || p >= m {
                return Err(Error::Shape(format!("position {} outside {m} classes", t.max(p))));
            }
            confusion[t][p] += 1;
        }
        let mut per_class = Vec::with_capacity(m);
        for (i, row) in confusion.iter().enumerate() {
            let total: usize = row.iter().sum();
            if total == 0 {
                return Err(Error::MissingData(classes[i]));
            }
            per_class.push(row[i] as f64 / total as f64);
        }
        let mean = per_class.iter().sum::<f64>() / m as f64;
        Ok(Self {
            classes,
            per_class,
            mean,
            confusion,
        })
    }

    /// Number of learned classes.
    pub fn learned(&self) -> usize {
        self.classes.len()
    }

    pub fn accuracy(&self, class: ClassId) -> Option<f64> {
        self.classes.iter().position(|&c| c == class).map(|i| self.per_class[i])
    }

    /// Largest accuracy drop of any class in `before`, or 0 when none fell.
    pub fn max_drop_since(&self, before: &EvalReport) -> f64 {
        before
            .classes
            .iter()
            .zip(&before.per_class)
            .filter_map(|(&c, &a)| self.accuracy(c).map(|now| a - now))
            .fold(0.0, f64::max)
    }
}

/// Accuracy of the full recognizer on each learned class's evaluation set.
pub fn evaluate(state: &AccretionState, partition: &ClassPartition, cache: &mut FeatureCache) -> Result<EvalReport> {
    evaluate_parts(&state.trunk, &state.bank, &state.decision, partition, cache)
}

pub(crate) fn evaluate_parts(
    trunk: &SharedTrunk,
    bank: &DetectorBank,
    decision: &DecisionNetwork,
    partition: &ClassPartition,
    cache: &mut FeatureCache,
) -> Result<EvalReport> {
    let registry = decision.registry().to_vec();
    if registry.is_empty() {
        return Err(Error::EmptyBank);
    }
    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for (pos, &class) in registry.iter().enumerate() {
        let ids = partition
            .eval(class)
            .filter(|ids| !ids.is_empty())
            .ok_or(Error::MissingData(class))?;
        let f = cache.features(trunk, partition.store(), ids)?;
        predicted.extend(decision.classify(&bank.intermediate(&f)?)?);
        truth.extend(core::iter::repeat(pos).take(ids.len()));
    }
    EvalReport::from_predictions(registry, &truth, &predicted)
}

/// Held-out quality of one detector: positives are the evaluation samples of
/// its class, negatives those of `negatives`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorReport {
    /// Fraction of positives with `p_h0 > p_h1`.
    pub true_positive_rate: f64,
    /// Fraction of negatives with `p_h0 <= p_h1`.
    pub true_negative_rate: f64,
    /// Mean of the two rates above.
    pub balanced_accuracy: f64,
    /// Area under the ROC curve of `p_h0`.
    pub auc: f64,
}

pub fn evaluate_detector(
    trunk: &SharedTrunk,
    head: &DetectorHead,
    negatives: &[ClassId],
    partition: &ClassPartition,
    cache: &mut FeatureCache,
) -> Result<DetectorReport> {
    let scores = |cache: &mut FeatureCache, class: ClassId| -> Result<Vec<f64>> {
        let ids = partition.eval(class).ok_or(Error::MissingData(class))?;
        let p = head.infer(&cache.features(trunk, partition.store(), ids)?)?;
        Ok(p.data().chunks_exact(2).map(|q| q[0] as f64 - q[1] as f64).collect())
    };
    let pos = scores(cache, head.class())?;
    let mut neg = Vec::new();
    for &c in negatives.iter().filter(|&&c| c != head.class()) {
        neg.extend(scores(cache, c)?);
    }
    if neg.is_empty() {
        return Err(Error::NoNegatives(head.class()));
    }
    let tpr = pos.iter().filter(|&&d| d > 0.0).count() as f64 / pos.len() as f64;
    let tnr = neg.iter().filter(|&&d| d <= 0.0).count() as f64 / neg.len() as f64;
    Ok(DetectorReport {
        true_positive_rate: tpr,
        true_negative_rate: tnr,
        balanced_accuracy: (tpr + tnr) / 2.0,
        auc: auc_mann_whitney(&pos, &neg, TieRule::Half)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let r = EvalReport::from_predictions(vec![0, 1], &[0, 0, 1], &[0, 0, 1]).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.learned(), 2);
    }

    #[test]
    fn one_class_fully_wrong_among_four() {
        let truth = [0, 0, 1, 1, 2, 2, 3, 3];
        let predicted = [0, 0, 1, 1, 2, 2, 0, 1];
        let r = EvalReport::from_predictions(vec![5, 6, 7, 8], &truth, &predicted).unwrap();
        assert_eq!(r.mean, 0.75);
        assert_eq!(r.accuracy(8), Some(0.0));
        let rows: Vec<usize> = r.confusion.iter().map(|row| row.iter().sum()).collect();
        assert_eq!(rows, vec![2, 2, 2, 2]);
    }

    #[test]
    fn mean_is_unweighted() {
        let r = EvalReport::from_predictions(vec![0, 1], &[0, 1, 1, 1, 1], &[0, 1, 0, 0, 0]).unwrap();
        assert!((r.mean - 0.625).abs() < 1e-12);
    }

    #[test]
    fn class_without_samples_is_an_error() {
        assert_eq!(
            EvalReport::from_predictions(vec![0, 1], &[0], &[0]),
            Err(Error::MissingData(1))
        );
    }

    #[test]
    fn drop_tracking() {
        let a = EvalReport::from_predictions(vec![0, 1], &[0, 1], &[0, 1]).unwrap();
        let b = EvalReport::from_predictions(vec![0, 1, 2], &[0, 0, 1, 2], &[0, 2, 1, 2]).unwrap();
        assert_eq!(b.max_drop_since(&a), 0.5);
        assert_eq!(a.max_drop_since(&a), 0.0);
    }
}

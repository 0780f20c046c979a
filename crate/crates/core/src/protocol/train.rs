use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::cache::images;
use super::{AccretionConfig, FeatureCache, TrainConfig};
use crate::data::{ClassPartition, DataPool, DetectorSet, LabeledImages, SampleId};
use crate::model::{
    build_shared_trunk, AccretionState, DecisionNetwork, DecisionVariant, DetectorBank, DetectorHead, SharedTrunk,
};
use crate::nn::loss::softmax_cross_entropy;
use crate::nn::{Sgd, Tensor};
use crate::{rng, ClassId, Error, Result};

const PHASE_BOOTSTRAP: u64 = 0;
const PHASE_DETECTOR: u64 = 1;
const PHASE_DECISION: u64 = 2;

fn shuffled(n: usize, seed: u64, tags: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::rng(seed, tags));
    order
}

fn optimizer(net: &crate::nn::Network, cfg: &TrainConfig) -> Result<Sgd<f32>> {
    Sgd::new(net, cfg.step_size as f32, cfg.momentum as f32)
}

fn gather(x: &Tensor, rows: &[usize]) -> Result<Tensor> {
    let r: Vec<&[f32]> = rows.iter().map(|&i| x.row(i)).collect();
    Tensor::stack(&x.shape()[1..], &r)
}

fn detector_labels(positive: impl Iterator<Item = bool>) -> Result<Tensor> {
    let data: Vec<f32> = positive
        .flat_map(|p| if p { [1.0, 0.0] } else { [0.0, 1.0] })
        .collect();
    let n = data.len() / 2;
    Tensor::new(vec![n, 2], data)
}

/// Train the trunk jointly with one detector per bootstrap class, freeze
/// both, then fully train an `M x 2M` decision network on the bootstrap data.
///
/// Each detector sees every bootstrap sample; its negatives are down-weighted
/// by `positives / negatives` so that both hypotheses carry equal total
/// weight, the same balance as a 1:1 subsampled set.
pub fn bootstrap_train(
    config: &AccretionConfig,
    partition: &ClassPartition,
    cache: &mut FeatureCache,
) -> Result<AccretionState> {
    config.validate()?;
    let classes = &config.bootstrap_classes;
    let store = partition.store();
    let mut ids: Vec<SampleId> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    let mut counts = Vec::with_capacity(classes.len());
    for (pos, &c) in classes.iter().enumerate() {
        let t = class_train(partition, c)?;
        ids.extend_from_slice(t);
        owner.extend(core::iter::repeat(pos).take(t.len()));
        counts.push(t.len());
    }
    let total = ids.len();
    let neg_weight: Vec<f32> = counts.iter().map(|&p| p as f32 / (total - p) as f32).collect();

    let mut trunk = build_shared_trunk(config.trunk, config.seed)?;
    let mut heads = classes
        .iter()
        .map(|&c| DetectorHead::new(c, trunk.feature_dim(), config.head_hidden, config.seed))
        .collect::<Result<Vec<_>>>()?;
    let cfg = &config.bootstrap;
    let mut trunk_opt = optimizer(trunk.net(), cfg)?;
    let mut head_opts = heads.iter().map(|h| optimizer(h.net(), cfg)).collect::<Result<Vec<_>>>()?;

    for epoch in 0..cfg.epochs {
        let order = shuffled(total, config.seed, &[rng::tag::SHUFFLE, PHASE_BOOTSTRAP, epoch as u64]);
        for batch in order.chunks(cfg.batch_size) {
            let batch_ids: Vec<SampleId> = batch.iter().map(|&i| ids[i]).collect();
            let acts = trunk.net().forward(&images(store, &batch_ids)?)?;
            let feats = acts.output();
            let mut feat_grad = Tensor::zeros(feats.shape());
            for (h, head) in heads.iter_mut().enumerate() {
                let ha = head.net().forward(feats)?;
                let labels = detector_labels(batch.iter().map(|&i| owner[i] == h))?;
                let (_, mut g) = config.objective.mean_value_and_grad(&labels, ha.output())?;
                for (r, &i) in batch.iter().enumerate() {
                    if owner[i] != h {
                        g.row_mut(r).iter_mut().for_each(|v| *v *= neg_weight[h]);
                    }
                }
                let grads = head.net().backward(&ha, &g)?;
                for (a, b) in feat_grad.data_mut().iter_mut().zip(grads.input.data()) {
                    *a += *b;
                }
                head_opts[h].step(head.net_mut(), &grads)?;
            }
            let tg = trunk.net().backward(&acts, &feat_grad)?;
            trunk_opt.step(trunk.net_mut(), &tg)?;
        }
    }

    trunk.freeze();
    let mut bank = DetectorBank::new();
    for mut head in heads {
        head.freeze();
        bank.add_detector(head)?;
    }
    let mut pool = DataPool::new(config.pool_capacity, rng::derive(config.seed, &[rng::tag::POOL]))?;
    let mut groups = Vec::with_capacity(classes.len());
    for &c in classes {
        let t = class_train(partition, c)?;
        pool.insert_class(c, t)?;
        groups.push(t);
    }
    let mut decision = DecisionNetwork::new(DecisionVariant::SingleLayer, classes.clone(), config.seed)?;
    let (x, targets) = intermediate_dataset(&trunk, &bank, partition.store(), &groups, cache)?;
    train_decision(&mut decision, &x, &targets, &config.decision, config.seed)?;
    decision.freeze();
    AccretionState::new(trunk, bank, decision, pool, config.seed, classes.len())
}

pub(crate) fn class_train(partition: &ClassPartition, class: ClassId) -> Result<&[SampleId]> {
    partition
        .train(class)
        .filter(|t| !t.is_empty())
        .ok_or(Error::MissingData(class))
}

/// Intermediate features of `groups[k]` labeled with registry position `k`.
pub(crate) fn intermediate_dataset(
    trunk: &SharedTrunk,
    bank: &DetectorBank,
    store: &LabeledImages,
    groups: &[&[SampleId]],
    cache: &mut FeatureCache,
) -> Result<(Tensor, Vec<usize>)> {
    let mut data = Vec::new();
    let mut targets = Vec::new();
    for (pos, ids) in groups.iter().enumerate() {
        if ids.is_empty() {
            continue;
        }
        let f = cache.features(trunk, store, ids)?;
        data.extend_from_slice(bank.intermediate(&f)?.data());
        targets.extend(core::iter::repeat(pos).take(ids.len()));
    }
    if targets.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = targets.len();
    Ok((Tensor::new(vec![n, 2 * bank.len()], data)?, targets))
}

/// Train a detector head for `class` on a balanced set over the frozen trunk.
/// Returns the head and the mean training loss of each epoch.
pub fn train_detector(
    trunk: &SharedTrunk,
    class: ClassId,
    set: &DetectorSet,
    store: &LabeledImages,
    config: &AccretionConfig,
    cache: &mut FeatureCache,
) -> Result<(DetectorHead, Vec<f64>)> {
    if set.target != class {
        return Err(Error::Config(alloc::format!(
            "training set targets class {}, not {class}",
            set.target
        )));
    }
    if set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if set.positives() != set.negatives() {
        return Err(Error::Unbalanced {
            positives: set.positives(),
            negatives: set.negatives(),
        });
    }
    if !trunk.is_frozen() {
        return Err(Error::Config(alloc::string::String::from(
            "detectors are trained over a frozen trunk",
        )));
    }
    let cfg = &config.detector;
    let features = cache.features(trunk, store, &set.samples)?;
    let mut head = DetectorHead::new(class, trunk.feature_dim(), config.head_hidden, config.seed)?;
    let mut opt = optimizer(head.net(), cfg)?;
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = shuffled(
            set.len(),
            config.seed,
            &[rng::tag::SHUFFLE, PHASE_DETECTOR, class as u64, epoch as u64],
        );
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let acts = head.net().forward(&gather(&features, batch)?)?;
            let labels = detector_labels(batch.iter().map(|&i| set.positive[i]))?;
            let (loss, g) = config.objective.mean_value_and_grad(&labels, acts.output())?;
            total += loss * batch.len() as f64;
            let grads = head.net().backward(&acts, &g)?;
            opt.step(head.net_mut(), &grads)?;
        }
        losses.push(total / set.len() as f64);
    }
    Ok((head, losses))
}

/// Train the trainable entries of `dn` with softmax cross-entropy on
/// intermediate features `[n, 2M]` and registry positions `targets`.
/// Returns the mean training loss of each epoch.
pub fn train_decision(
    dn: &mut DecisionNetwork,
    intermediate: &Tensor,
    targets: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let x = dn.shape_input(intermediate)?;
    if targets.len() != x.batch() {
        return Err(Error::Shape(alloc::format!(
            "{} targets for {} samples",
            targets.len(),
            x.batch()
        )));
    }
    let logits_at = dn.net().layers().len() - 1;
    let mut opt = optimizer(dn.net(), cfg)?;
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = shuffled(
            x.batch(),
            seed,
            &[rng::tag::SHUFFLE, PHASE_DECISION, dn.classes() as u64, epoch as u64],
        );
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let acts = dn.net().forward(&gather(&x, batch)?)?;
            let t: Vec<usize> = batch.iter().map(|&i| targets[i]).collect();
            let (loss, g) = softmax_cross_entropy(acts.output(), &t)?;
            total += loss * batch.len() as f64;
            let grads = dn.net().backward_from(&acts, logits_at, &g)?;
            opt.step(dn.net_mut(), &grads)?;
        }
        losses.push(total / x.batch() as f64);
    }
    Ok(losses)
}

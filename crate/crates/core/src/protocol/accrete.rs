use alloc::vec::Vec;

use super::eval::evaluate_parts;
use super::train::{class_train, intermediate_dataset, train_decision, train_detector};
use super::{bootstrap_train, evaluate, AccretionConfig, EvalReport, FeatureCache};
use crate::data::{make_detector_training_set, ClassPartition, SampleId};
use crate::model::{AccretionState, DecisionNetwork, DecisionVariant};
use crate::{rng, ClassId, Error, Result};

/// Learn `new_class` without touching anything already learned.
///
/// Trains a detector on the new class against pool negatives, appends it to
/// the bank, expands the decision network and trains only its new
/// connections on the pool plus the new class, then adds the new class to
/// the pool. `state` is left as it was; the grown state is returned together
/// with its evaluation over all learned classes.
pub fn accrete_class(
    state: &AccretionState,
    new_class: ClassId,
    partition: &ClassPartition,
    config: &AccretionConfig,
    cache: &mut FeatureCache,
) -> Result<(AccretionState, EvalReport)> {
    config.validate()?;
    if state.is_learned(new_class) {
        return Err(Error::DuplicateClass(new_class));
    }
    if state.pool.is_empty() {
        return Err(Error::NoNegatives(new_class));
    }
    let positives = class_train(partition, new_class)?;
    let set = make_detector_training_set(&state.pool, new_class, positives, None, state.seed)?;
    let (mut head, _) = train_detector(&state.trunk, new_class, &set, partition.store(), config, cache)?;
    head.freeze();

    let mut next = state.clone();
    next.bank.add_detector(head)?;
    next.decision = state.decision.expand(new_class, state.seed)?;
    let groups: Vec<&[SampleId]> = next
        .decision
        .registry()
        .iter()
        .map(|&c| {
            if c == new_class {
                Ok(positives)
            } else {
                state.pool.samples(c).ok_or(Error::MissingData(c))
            }
        })
        .collect::<Result<_>>()?;
    let (x, targets) = intermediate_dataset(&next.trunk, &next.bank, partition.store(), &groups, cache)?;
    train_decision(&mut next.decision, &x, &targets, &config.decision, state.seed)?;
    next.decision.freeze();
    next.pool.insert_class(new_class, positives)?;
    next.validate()?;
    let report = evaluate(&next, partition, cache)?;
    Ok((next, report))
}

/// Accrete `order` one class at a time, calling `on_step` with each grown
/// state and its evaluation.
pub fn accrete_sequence<F>(
    state: &AccretionState,
    order: &[ClassId],
    partition: &ClassPartition,
    config: &AccretionConfig,
    cache: &mut FeatureCache,
    mut on_step: F,
) -> Result<(AccretionState, Vec<EvalReport>)>
where
    F: FnMut(&AccretionState, &EvalReport),
{
    let mut current = state.clone();
    let mut reports = Vec::with_capacity(order.len());
    for &c in order {
        let (next, report) = accrete_class(&current, c, partition, config, cache)?;
        on_step(&next, &report);
        reports.push(report);
        current = next;
    }
    Ok((current, reports))
}

/// Bootstrap and then accrete the configured order. The first report is the
/// bootstrap evaluation.
pub fn run_accretion<F>(
    config: &AccretionConfig,
    partition: &ClassPartition,
    cache: &mut FeatureCache,
    mut on_step: F,
) -> Result<(AccretionState, Vec<EvalReport>)>
where
    F: FnMut(&AccretionState, &EvalReport),
{
    let boot = bootstrap_train(config, partition, cache)?;
    let first = evaluate(&boot, partition, cache)?;
    on_step(&boot, &first);
    let (last, mut rest) = accrete_sequence(&boot, &config.accretion_order, partition, config, cache, on_step)?;
    rest.insert(0, first);
    Ok((last, rest))
}

/// Train a fresh decision network of `variant` from scratch on the pool's
/// intermediate features, leaving the detectors untouched. Requires every
/// class of `partition` to be learned.
pub fn replace_decision_network(
    state: &AccretionState,
    variant: DecisionVariant,
    partition: &ClassPartition,
    config: &AccretionConfig,
    cache: &mut FeatureCache,
) -> Result<(DecisionNetwork, EvalReport)> {
    config.validate()?;
    if let Some(missing) = partition.classes().find(|&c| !state.is_learned(c)) {
        return Err(Error::Config(alloc::format!(
            "replacement needs a fully accreted state; class {missing} is not learned"
        )));
    }
    let registry = state.registry().to_vec();
    let tag = DecisionVariant::ALL.iter().position(|&v| v == variant).unwrap_or(0) as u64;
    let seed = rng::derive(state.seed, &[rng::tag::REPLACEMENT, tag]);
    let mut dn = DecisionNetwork::new(variant, registry.clone(), seed)?;
    let groups: Vec<&[SampleId]> = registry
        .iter()
        .map(|&c| state.pool.samples(c).ok_or(Error::MissingData(c)))
        .collect::<Result<_>>()?;
    let (x, targets) = intermediate_dataset(&state.trunk, &state.bank, partition.store(), &groups, cache)?;
    train_decision(&mut dn, &x, &targets, &config.decision, seed)?;
    dn.freeze();
    let report = evaluate_parts(&state.trunk, &state.bank, &dn, partition, cache)?;
    Ok((dn, report))
}

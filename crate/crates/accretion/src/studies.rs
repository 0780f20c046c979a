//! The three experiments plus a single natural-order run. Each study writes
//! `accuracy.csv` and `manifest.json` into its output directory, and sweep
//! runs also leave one checkpoint per bootstrap size.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use accretion_core::data::ClassPartition;
use accretion_core::model::{AccretionState, DecisionVariant};
use accretion_core::protocol::{
    accrete_sequence, bootstrap_train, evaluate, replace_decision_network, run_accretion, AccretionConfig,
    EvalReport, FeatureCache,
};
use accretion_core::ClassId;

use crate::error::{AppError, Result};
use crate::io::{load_checkpoint, save_checkpoint};
use crate::metrics::{report_rows, AccuracyRow, StudyKind};
use crate::orders::OrderLine;

pub const NATURAL: &str = "natural";
pub const CHECKPOINT_FILE: &str = "final.acrt";

/// Output of a study: CSV rows plus study-specific manifest parameters.
#[derive(Debug, Clone, Default)]
pub struct StudyOutput {
    pub rows: Vec<AccuracyRow>,
    pub reports: Vec<(String, EvalReport)>,
    pub checkpoints: Vec<PathBuf>,
}

fn digits(classes: &[ClassId]) -> String {
    classes.iter().map(|c| c.to_string()).collect()
}

/// Identifier of an order-study run: bootstrap digits, a colon, order digits.
pub fn order_id(bootstrap: &[ClassId], order: &[ClassId]) -> String {
    format!("{}:{}", digits(bootstrap), digits(order))
}

pub fn size_dir(out_dir: &Path, size: usize) -> PathBuf {
    out_dir.join(format!("bootstrap-{size}"))
}

fn with_classes(base: &AccretionConfig, bootstrap: &[ClassId], order: &[ClassId]) -> AccretionConfig {
    AccretionConfig {
        bootstrap_classes: bootstrap.to_vec(),
        accretion_order: order.to_vec(),
        ..base.clone()
    }
}

/// Bootstrap on `config.bootstrap_classes`, accrete `config.accretion_order`
/// and save the final state to `out_dir/final.acrt`.
pub fn run_single<F: FnMut(&str)>(
    partition: &ClassPartition,
    config: &AccretionConfig,
    out_dir: &Path,
    mut progress: F,
) -> Result<StudyOutput> {
    let study = StudyKind::SingleRun.name();
    let size = config.bootstrap_classes.len();
    let mut out = StudyOutput::default();
    let mut cache = FeatureCache::new();
    let (last, reports) = run_accretion(config, partition, &mut cache, |_, r| {
        progress(&format!("M={} mean={:.4}", r.learned(), r.mean))
    })?;
    for r in reports {
        out.rows.extend(report_rows(study, size, NATURAL, &r));
        out.reports.push((NATURAL.to_string(), r));
    }
    let path = out_dir.join(CHECKPOINT_FILE);
    save_checkpoint(&last, &path)?;
    out.checkpoints.push(path);
    Ok(out)
}

/// For each size `k`, bootstrap on digits `0..k` and accrete the rest in
/// natural order.
pub fn run_bootstrap_sweep<F: FnMut(&str)>(
    partition: &ClassPartition,
    base: &AccretionConfig,
    sizes: &[usize],
    out_dir: &Path,
    mut progress: F,
) -> Result<StudyOutput> {
    if let Some(bad) = sizes.iter().find(|&&k| !(2..=10).contains(&k)) {
        return Err(AppError::Usage(format!("bootstrap size {bad} is outside 2..=10")));
    }
    let study = StudyKind::BootstrapSweep.name();
    let mut out = StudyOutput::default();
    let mut cache = FeatureCache::new();
    for &k in sizes {
        let natural = AccretionConfig::natural(k);
        let config = with_classes(base, &natural.bootstrap_classes, &natural.accretion_order);
        let (last, reports) = run_accretion(&config, partition, &mut cache, |_, r| {
            progress(&format!("bootstrap {k}: M={} mean={:.4}", r.learned(), r.mean))
        })?;
        for r in reports {
            out.rows.extend(report_rows(study, k, NATURAL, &r));
            out.reports.push((format!("{k}"), r));
        }
        let path = size_dir(out_dir, k).join(CHECKPOINT_FILE);
        save_checkpoint(&last, &path)?;
        out.checkpoints.push(path);
    }
    Ok(out)
}

/// Run every line of an orders file. Lines sharing a bootstrap set share one
/// bootstrap; after the per-order curves, one `band` row per bootstrap set
/// and learned count records the max-min spread of the mean accuracy.
pub fn run_order_study<F: FnMut(&str)>(
    partition: &ClassPartition,
    base: &AccretionConfig,
    orders: &[OrderLine],
    mut progress: F,
) -> Result<StudyOutput> {
    let study = StudyKind::OrderStudy.name();
    let mut out = StudyOutput::default();
    let mut groups: Vec<(Vec<ClassId>, Vec<&OrderLine>)> = Vec::new();
    for line in orders {
        match groups.iter_mut().find(|(b, _)| *b == line.bootstrap) {
            Some((_, v)) => v.push(line),
            None => groups.push((line.bootstrap.clone(), vec![line])),
        }
    }
    let mut cache = FeatureCache::new();
    for (bootstrap, lines) in groups {
        let size = bootstrap.len();
        let boot_config = with_classes(base, &bootstrap, &lines[0].order);
        let boot = bootstrap_train(&boot_config, partition, &mut cache)?;
        let first = evaluate(&boot, partition, &mut cache)?;
        progress(&format!("bootstrap {}: mean={:.4}", digits(&bootstrap), first.mean));
        let mut means: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for line in lines {
            let id = order_id(&bootstrap, &line.order);
            let config = with_classes(base, &bootstrap, &line.order);
            let (_, reports) = accrete_sequence(&boot, &line.order, partition, &config, &mut cache, |_, _| {})?;
            progress(&format!(
                "order {id}: final mean={:.4}",
                reports.last().map_or(first.mean, |r| r.mean)
            ));
            for r in std::iter::once(&first).chain(&reports) {
                out.rows.extend(report_rows(study, size, &id, r));
                means.entry(r.learned()).or_default().push(r.mean);
            }
            for r in reports {
                out.reports.push((id.clone(), r));
            }
        }
        for (learned, v) in means {
            let max = v.iter().copied().fold(f64::MIN, f64::max);
            let min = v.iter().copied().fold(f64::MAX, f64::min);
            out.rows.push(AccuracyRow {
                study: study.to_string(),
                bootstrap_size: size,
                order_id: digits(&bootstrap),
                learned_count: learned,
                class_id: "band".to_string(),
                accuracy: max - min,
            });
        }
    }
    Ok(out)
}

/// Study label of a replacement row.
pub fn replacement_label(variant: Option<DecisionVariant>) -> String {
    format!(
        "{}/{}",
        StudyKind::ReplacementStudy.name(),
        variant.map_or("original", DecisionVariant::name)
    )
}

/// Evaluate the original decision network of each fully accreted state, then
/// train and evaluate each replacement variant on the same detectors.
pub fn run_replacement_study<F: FnMut(&str)>(
    partition: &ClassPartition,
    base: &AccretionConfig,
    states: &[(usize, AccretionState)],
    variants: &[DecisionVariant],
    mut progress: F,
) -> Result<StudyOutput> {
    let mut out = StudyOutput::default();
    let mut cache = FeatureCache::new();
    for (size, state) in states {
        let original = evaluate(state, partition, &mut cache)?;
        progress(&format!("bootstrap {size}: original mean={:.4}", original.mean));
        out.rows.extend(report_rows(&replacement_label(None), *size, NATURAL, &original));
        out.reports.push((replacement_label(None), original));
        for &v in variants {
            let (_, report) = replace_decision_network(state, v, partition, base, &mut cache)?;
            progress(&format!("bootstrap {size}: {} mean={:.4}", v.name(), report.mean));
            out.rows.extend(report_rows(&replacement_label(Some(v)), *size, NATURAL, &report));
            out.reports.push((replacement_label(Some(v)), report));
        }
    }
    Ok(out)
}

/// A checkpoint file, or a sweep directory holding `bootstrap-*/final.acrt`.
/// Returns `(bootstrap size, state)` pairs.
pub fn load_replacement_inputs(path: &Path) -> Result<Vec<(usize, AccretionState)>> {
    if path.is_file() {
        let state = load_checkpoint(path)?;
        return Ok(vec![(state.bootstrap_size, state)]);
    }
    let mut found = Vec::new();
    for k in 2..=10 {
        let p = size_dir(path, k).join(CHECKPOINT_FILE);
        if p.is_file() {
            found.push((k, load_checkpoint(&p)?));
        }
    }
    if found.is_empty() {
        return Err(AppError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no checkpoint found"),
        });
    }
    Ok(found)
}

//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Data-dependent criteria read the MNIST IDX files from
//! `data/mnist` at the workspace root.

use std::path::PathBuf;
use std::time::Instant;

use accretion::io::{build_partition, load_labeled, load_mnist, mnist_paths};
use accretion::metrics::{accuracy_csv, report_rows};
use accretion::orders::read_orders_file;
use accretion_core::data::{parse_idx, ClassPartition, IdxError};
use accretion_core::model::{encode_checkpoint, encode_network, AccretionState, DecisionVariant};
use accretion_core::nn::loss::detector_total;
use accretion_core::nn::{auc_mann_whitney, gradient_check, LayerSpec, Network, Tensor, TieRule};
use accretion_core::protocol::{
    accrete_sequence, bootstrap_train, evaluate, replace_decision_network, AccretionConfig, EvalReport,
    FeatureCache,
};
use accretion_core::{rng, ClassId};
use rand::Rng;

const BOOTSTRAP_MIN: f64 = 0.990;
const CURVE_MIN: f64 = 0.985;
const MAX_DROP: f64 = 0.01;
const ORDER_BAND: f64 = 0.01;
const REPLACEMENT_SLACK: f64 = 0.002;
const GRAD_REL_ERR: f64 = 1e-4;
const AUC_INSTANCES: usize = 1000;
const AUC_MAX_LEN: usize = 50;
const ORDER_RUNS: usize = 3;

const TRAIN_COUNTS: [usize; 10] = [5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949];
const TEST_COUNTS: [usize; 10] = [980, 1135, 1032, 1010, 982, 892, 958, 1028, 974, 1009];

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

struct Suite {
    results: Vec<Outcome>,
}

impl Suite {
    fn record(&mut self, id: &'static str, title: &'static str, pass: bool, detail: String) {
        println!("{} {id} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push(Outcome {
            id,
            title,
            pass,
            detail,
        });
    }

    fn error(&mut self, id: &'static str, title: &'static str, err: impl std::fmt::Display) {
        self.record(id, title, false, format!("error: {err}"));
    }
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

fn orders_fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/orders.txt")
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn main() {
    let mut suite = Suite { results: Vec::new() };
    let t0 = Instant::now();

    gradient_criterion(&mut suite);
    auc_criterion(&mut suite);
    let partition = idx_criterion(&mut suite);

    match partition {
        Some(partition) => data_criteria(&mut suite, &partition),
        None => {
            for (id, title) in [
                ("C1", "bootstrap accuracy"),
                ("C2", "full accretion curve"),
                ("C3", "no forgetting"),
                ("C4", "order independence"),
                ("C5", "replacement trend"),
                ("C6", "frozen-knowledge byte identity"),
                ("C9", "determinism"),
            ] {
                suite.record(id, title, false, format!("MNIST not available in {}", data_dir().display()));
            }
        }
    }

    let mut sorted: Vec<&Outcome> = suite.results.iter().collect();
    sorted.sort_by_key(|o| o.id[1..].parse::<usize>().unwrap_or(0));
    println!("\nacceptance summary ({:.0?}):", t0.elapsed());
    for o in &sorted {
        println!("  {} {} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.title, o.detail);
    }
    let failed = sorted.iter().filter(|o| !o.pass).count();
    println!("{} passed, {failed} failed", sorted.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

/// Finite differences over every layer kind, including a partly masked
/// network whose frozen entries must receive exactly zero gradient.
fn gradient_criterion(suite: &mut Suite) {
    let title = "gradient correctness";
    let nets: Vec<(&str, Vec<usize>, Vec<LayerSpec>)> = vec![
        (
            "conv/pool/flatten/dense/softmax",
            vec![2, 7, 7],
            vec![
                LayerSpec::Conv2d {
                    in_channels: 2,
                    out_channels: 3,
                    kernel_h: 3,
                    kernel_w: 2,
                    stride: 1,
                    padding: 1,
                },
                LayerSpec::Relu,
                LayerSpec::max_pool(2),
                LayerSpec::Flatten,
                LayerSpec::dense(3 * 3 * 4, 5),
                LayerSpec::Relu,
                LayerSpec::dense(5, 2),
                LayerSpec::Softmax,
            ],
        ),
        (
            "strided conv",
            vec![1, 6, 6],
            vec![
                LayerSpec::Conv2d {
                    in_channels: 1,
                    out_channels: 2,
                    kernel_h: 2,
                    kernel_w: 2,
                    stride: 2,
                    padding: 0,
                },
                LayerSpec::Flatten,
                LayerSpec::dense(18, 2),
                LayerSpec::Softmax,
            ],
        ),
        (
            "dense stack",
            vec![6],
            vec![
                LayerSpec::dense(6, 4),
                LayerSpec::Relu,
                LayerSpec::dense(4, 4),
                LayerSpec::Relu,
                LayerSpec::dense(4, 2),
                LayerSpec::Softmax,
            ],
        ),
    ];
    let mut worst = 0.0f64;
    let mut masked_nonzero = 0;
    let mut checked = 0;
    for (k, (name, input_shape, layers)) in nets.into_iter().enumerate() {
        for masked in [false, true] {
            let mut net = match Network::<f64>::seeded(&input_shape, layers.clone(), 11 + k as u64) {
                Ok(n) => n,
                Err(e) => return suite.error("C7", title, format!("{name}: {e}")),
            };
            for p in net.params_mut() {
                for (i, v) in p.value.data_mut().iter_mut().enumerate() {
                    *v += 0.05 * ((i % 7) as f64 - 3.0) / 3.0;
                }
                if masked {
                    for (i, b) in p.mask.bits_mut().iter_mut().enumerate() {
                        *b = i % 3 != 0;
                    }
                }
            }
            let per: usize = input_shape.iter().product();
            let mut r = rng::rng(7, &[k as u64]);
            let data: Vec<f64> = (0..3 * per).map(|_| r.random_range(-1.0..1.0)).collect();
            let mut shape = vec![3];
            shape.extend_from_slice(&input_shape);
            let input = Tensor::new(shape, data).unwrap();
            let labels = Tensor::new(vec![3, 2], vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
            let loss = |out: &Tensor<f64>| {
                let v = detector_total(&labels, out)?;
                let g = accretion_core::nn::loss::detector_total_grad(&labels, out)?;
                Ok((v, g))
            };
            match gradient_check(&net, loss, &input, 1e-6) {
                Ok(rep) => {
                    worst = worst.max(rep.max_relative_error);
                    masked_nonzero += rep.masked_nonzero;
                    checked += rep.checked;
                }
                Err(e) => return suite.error("C7", title, format!("{name}: {e}")),
            }
        }
    }
    suite.record(
        "C7",
        title,
        worst < GRAD_REL_ERR && masked_nonzero == 0,
        format!(
            "max relative error {worst:.2e} over {checked} entries (< {GRAD_REL_ERR:e}), {masked_nonzero} masked entries with nonzero gradient"
        ),
    );
}

fn brute_auc(pos: &[f64], neg: &[f64], ties: TieRule) -> f64 {
    let mut twice = 0u64;
    for &p in pos {
        for &n in neg {
            if p > n {
                twice += 2;
            } else if p == n && ties == TieRule::Half {
                twice += 1;
            }
        }
    }
    twice as f64 / (2 * pos.len() * neg.len()) as f64
}

fn auc_criterion(suite: &mut Suite) {
    let mut r = rng::rng(2024, &[]);
    let mut mismatches = 0;
    for _ in 0..AUC_INSTANCES {
        let m = r.random_range(1..=AUC_MAX_LEN);
        let n = r.random_range(1..=AUC_MAX_LEN);
        let levels = r.random_range(2..=20u32);
        let mut draw = |k: usize| -> Vec<f64> {
            (0..k)
                .map(|_| r.random_range(0..levels) as f64 / levels as f64)
                .collect()
        };
        let pos = draw(m);
        let neg = draw(n);
        for ties in [TieRule::Strict, TieRule::Half] {
            match auc_mann_whitney(&pos, &neg, ties) {
                Ok(a) if a == brute_auc(&pos, &neg, ties) => {}
                _ => mismatches += 1,
            }
        }
    }
    suite.record(
        "C8",
        "AUC oracle",
        mismatches == 0,
        format!("{AUC_INSTANCES} instances x 2 tie rules, {mismatches} mismatches against pair counting"),
    );
}

fn idx_criterion(suite: &mut Suite) -> Option<ClassPartition> {
    let title = "IDX parsing";
    let mut corrupt_ok = true;
    let mut notes = Vec::new();
    let mut header = vec![0u8, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 28, 0, 0, 0, 28];
    header.extend(vec![0u8; 100]);
    match parse_idx(&header) {
        Err(IdxError::Truncated { offset: 16, .. }) => {}
        other => {
            corrupt_ok = false;
            notes.push(format!("truncated body gave {other:?}"));
        }
    }
    let mut magic = header.clone();
    magic[2] = 9;
    match parse_idx(&magic) {
        Err(IdxError::BadMagic { .. }) => {}
        other => {
            corrupt_ok = false;
            notes.push(format!("bad magic gave {other:?}"));
        }
    }
    match parse_idx(&header[..10]) {
        Err(IdxError::Truncated { .. }) => {}
        other => {
            corrupt_ok = false;
            notes.push(format!("short header gave {other:?}"));
        }
    }

    let dir = data_dir();
    let [ti, tl, ei, el] = mnist_paths(&dir);
    let loaded = load_labeled(&ti, &tl).and_then(|train| Ok((train, load_labeled(&ei, &el)?)));
    let (train, test) = match loaded {
        Ok(v) => v,
        Err(e) => {
            suite.record("C10", title, false, format!("loading official files: {e}"));
            return None;
        }
    };
    let hist = |h: [usize; 256]| h[..10].to_vec();
    let counts_ok = train.len() == 60000
        && test.len() == 10000
        && hist(train.histogram()) == TRAIN_COUNTS
        && hist(test.histogram()) == TEST_COUNTS;
    notes.insert(
        0,
        format!(
            "{} train / {} test, histograms {}, corrupted fixtures {}",
            train.len(),
            test.len(),
            if counts_ok { "match" } else { "differ" },
            if corrupt_ok { "rejected with structured errors" } else { "mishandled" }
        ),
    );
    suite.record("C10", title, counts_ok && corrupt_ok, notes.join("; "));
    drop((train, test));
    let mnist = load_mnist(&dir).ok()?;
    match build_partition(mnist, &AccretionConfig::default()) {
        Ok(p) => Some(p),
        Err(e) => {
            println!("partition failed: {e}");
            None
        }
    }
}

fn frozen_bytes(state: &AccretionState) -> (Vec<u8>, Vec<(ClassId, Vec<u8>)>) {
    (
        encode_network(state.trunk.net()),
        state
            .bank
            .heads()
            .iter()
            .map(|h| (h.class(), encode_network(h.net())))
            .collect(),
    )
}

fn data_criteria(suite: &mut Suite, partition: &ClassPartition) {
    let config = AccretionConfig::natural(3);
    let mut cache = FeatureCache::new();

    // C1: bootstrap on {0,1,2}.
    let t = Instant::now();
    let boot = match bootstrap_train(&config, partition, &mut cache) {
        Ok(s) => s,
        Err(e) => {
            for (id, title) in [
                ("C1", "bootstrap accuracy"),
                ("C2", "full accretion curve"),
                ("C3", "no forgetting"),
                ("C5", "replacement trend"),
                ("C6", "frozen-knowledge byte identity"),
                ("C9", "determinism"),
            ] {
                suite.error(id, title, &e);
            }
            order_criterion(suite, partition);
            return;
        }
    };
    let boot_time = t.elapsed();
    let boot_report = evaluate(&boot, partition, &mut cache).expect("bootstrap evaluation");
    suite.record(
        "C1",
        "bootstrap accuracy",
        boot_report.mean >= BOOTSTRAP_MIN,
        format!(
            "mean {:.4} (>= {BOOTSTRAP_MIN}) per class [{}] in {boot_time:.0?}",
            boot_report.mean,
            fmt(&boot_report.per_class)
        ),
    );

    // C2, C3, C6: accrete 3..9 in natural order from the same bootstrap.
    let mut previous = boot.clone();
    let mut previous_report = boot_report.clone();
    let mut byte_violations = Vec::new();
    let mut drops = Vec::new();
    let t = Instant::now();
    let accreted = accrete_sequence(
        &boot,
        &config.accretion_order,
        partition,
        &config,
        &mut cache,
        |next, report| {
            let (trunk_before, heads_before) = frozen_bytes(&previous);
            let (trunk_after, heads_after) = frozen_bytes(next);
            if trunk_before != trunk_after {
                byte_violations.push(format!("trunk changed at M={}", report.learned()));
            }
            for (c, bytes) in &heads_before {
                if heads_after.iter().find(|(k, _)| k == c).map(|(_, b)| b) != Some(bytes) {
                    byte_violations.push(format!("head {c} changed at M={}", report.learned()));
                }
            }
            drops.push((report.learned(), report.max_drop_since(&previous_report)));
            previous = next.clone();
            previous_report = report.clone();
        },
    );
    let (full, reports) = match accreted {
        Ok(v) => v,
        Err(e) => {
            for (id, title) in [
                ("C2", "full accretion curve"),
                ("C3", "no forgetting"),
                ("C5", "replacement trend"),
                ("C6", "frozen-knowledge byte identity"),
            ] {
                suite.error(id, title, &e);
            }
            determinism_criterion(suite, partition, &config, &boot, &boot_report);
            order_criterion(suite, partition);
            return;
        }
    };
    let curve: Vec<f64> = std::iter::once(boot_report.mean)
        .chain(reports.iter().map(|r| r.mean))
        .collect();
    let final_mean = *curve.last().unwrap();
    suite.record(
        "C2",
        "full accretion curve",
        curve.iter().all(|&m| m >= CURVE_MIN) && final_mean >= CURVE_MIN,
        format!(
            "means M=3..10 [{}], minimum {:.4}, final {final_mean:.4} (>= {CURVE_MIN}); bootstrap {boot_time:.0?} + accretion {:.0?}",
            fmt(&curve),
            curve.iter().copied().fold(f64::MAX, f64::min),
            t.elapsed()
        ),
    );
    let worst = drops.iter().map(|d| d.1).fold(0.0, f64::max);
    suite.record(
        "C3",
        "no forgetting",
        drops.iter().all(|d| d.1 < MAX_DROP),
        format!(
            "largest per-class drop per step [{}], worst {worst:.4} (< {MAX_DROP})",
            drops.iter().map(|(m, d)| format!("M={m}:{d:.4}")).collect::<Vec<_>>().join(" ")
        ),
    );
    suite.record(
        "C6",
        "frozen-knowledge byte identity",
        byte_violations.is_empty(),
        if byte_violations.is_empty() {
            format!("trunk and all earlier heads bit-identical across {} steps", reports.len())
        } else {
            byte_violations.join(", ")
        },
    );

    replacement_criterion(suite, partition, &config, &full, reports.last().unwrap(), &mut cache);
    drop(cache);
    determinism_criterion(suite, partition, &config, &boot, &boot_report);
    order_criterion(suite, partition);
}

fn replacement_criterion(
    suite: &mut Suite,
    partition: &ClassPartition,
    config: &AccretionConfig,
    full: &AccretionState,
    original: &EvalReport,
    cache: &mut FeatureCache,
) {
    let title = "replacement trend";
    let mut means = Vec::new();
    let heads_before = frozen_bytes(full);
    for v in DecisionVariant::ALL {
        match replace_decision_network(full, v, partition, config, cache) {
            Ok((_, r)) => means.push((v, r.mean)),
            Err(e) => return suite.error("C5", title, format!("{}: {e}", v.name())),
        }
    }
    let single = means[0].1;
    let mut pass = original.mean >= single - REPLACEMENT_SLACK;
    for &(_, m) in &means[1..] {
        pass &= single >= m - REPLACEMENT_SLACK;
    }
    pass &= frozen_bytes(full) == heads_before;
    suite.record(
        "C5",
        title,
        pass,
        format!(
            "original {:.4}, {} (original >= fc1 - {REPLACEMENT_SLACK}, fc1 >= deeper - {REPLACEMENT_SLACK})",
            original.mean,
            means
                .iter()
                .map(|(v, m)| format!("{} {m:.4}", v.name()))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

fn determinism_criterion(
    suite: &mut Suite,
    partition: &ClassPartition,
    config: &AccretionConfig,
    first: &AccretionState,
    first_report: &EvalReport,
) {
    let title = "determinism";
    let mut cache = FeatureCache::new();
    let second = match bootstrap_train(config, partition, &mut cache)
        .and_then(|s| evaluate(&s, partition, &mut cache).map(|r| (s, r)))
    {
        Ok(v) => v,
        Err(e) => return suite.error("C9", title, e),
    };
    let csv = |r: &EvalReport| accuracy_csv(&report_rows("single-run", 3, "natural", r)).unwrap();
    let same_csv = csv(first_report) == csv(&second.1);
    let same_ckpt = encode_checkpoint(first) == encode_checkpoint(&second.0);
    suite.record(
        "C9",
        title,
        same_csv && same_ckpt,
        format!(
            "second bootstrap run: accuracy CSV {}, checkpoint bytes {} ({} bytes)",
            if same_csv { "identical" } else { "differs" },
            if same_ckpt { "identical" } else { "differ" },
            encode_checkpoint(first).len()
        ),
    );
}

fn order_criterion(suite: &mut Suite, partition: &ClassPartition) {
    let title = "order independence";
    let lines = match read_orders_file(&orders_fixture()) {
        Ok(l) => l,
        Err(e) => return suite.error("C4", title, e),
    };
    let chosen: Vec<_> = lines
        .iter()
        .filter(|l| l.bootstrap == [0, 1, 2, 3, 4])
        .take(ORDER_RUNS)
        .collect();
    if chosen.len() < ORDER_RUNS {
        return suite.error("C4", title, "fixture lacks orders for bootstrap 0,1,2,3,4");
    }
    let base = AccretionConfig {
        bootstrap_classes: chosen[0].bootstrap.clone(),
        accretion_order: chosen[0].order.clone(),
        ..AccretionConfig::default()
    };
    let mut cache = FeatureCache::new();
    let boot = match bootstrap_train(&base, partition, &mut cache) {
        Ok(s) => s,
        Err(e) => return suite.error("C4", title, e),
    };
    let mut finals = Vec::new();
    for line in &chosen {
        let config = AccretionConfig {
            accretion_order: line.order.clone(),
            ..base.clone()
        };
        match accrete_sequence(&boot, &line.order, partition, &config, &mut cache, |_, _| {}) {
            Ok((_, reports)) => finals.push(reports.last().unwrap().mean),
            Err(e) => return suite.error("C4", title, e),
        }
    }
    let band = finals.iter().copied().fold(f64::MIN, f64::max) - finals.iter().copied().fold(f64::MAX, f64::min);
    suite.record(
        "C4",
        title,
        band <= ORDER_BAND,
        format!(
            "final means [{}] for orders {}, band {band:.4} (<= {ORDER_BAND})",
            fmt(&finals),
            chosen
                .iter()
                .map(|l| l.order.iter().map(|d| d.to_string()).collect::<String>())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

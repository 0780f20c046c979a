#![allow(dead_code)]

use accretion_core::data::{partition_by_class, ClassPartition, LabeledImages};
use accretion_core::protocol::{AccretionConfig, TrainConfig};
use accretion_core::ClassId;

/// Class `c` is a bright 6x6 block at a class-specific spot plus
/// deterministic speckle, easy enough to learn in one epoch.
pub fn synthetic_images(classes: &[ClassId], per_class: usize, salt: u32) -> LabeledImages {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for &c in classes {
        for k in 0..per_class {
            let (r0, c0) = (2 + (c as usize % 4) * 6, 2 + (c as usize / 4) * 8);
            for y in 0..28 {
                for x in 0..28 {
                    let inside = (r0..r0 + 6).contains(&y) && (c0..c0 + 6).contains(&x);
                    let h = (y as u32 * 131 + x as u32 * 71 + k as u32 * 29 + salt * 17 + c as u32 * 7)
                        .wrapping_mul(2654435761)
                        >> 28;
                    let v = if inside { 0.9 } else { 0.0 } + h as f32 / 160.0;
                    pixels.push(v.min(1.0));
                }
            }
            labels.push(c);
        }
    }
    LabeledImages::from_parts(28, 28, pixels, labels).unwrap()
}

pub fn small_config(bootstrap: &[ClassId], order: &[ClassId]) -> AccretionConfig {
    let quick = |epochs| TrainConfig {
        epochs,
        batch_size: 16,
        step_size: 0.01,
        momentum: 0.9,
    };
    AccretionConfig {
        bootstrap_classes: bootstrap.to_vec(),
        accretion_order: order.to_vec(),
        train_per_class: 24,
        eval_per_class: 8,
        bootstrap: quick(2),
        detector: quick(3),
        decision: quick(3),
        head_hidden: 16,
        seed: 5,
        ..AccretionConfig::default()
    }
}

pub fn synthetic_partition(config: &AccretionConfig) -> ClassPartition {
    let classes = config.all_classes();
    let train = synthetic_images(&classes, config.train_per_class, 1);
    let eval = synthetic_images(&classes, config.eval_per_class, 2);
    partition_by_class(train, Some(&eval), &config.partition_config()).unwrap()
}

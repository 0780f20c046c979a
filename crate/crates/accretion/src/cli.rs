//! Command-line interface.

use std::path::PathBuf;

use accretion_core::data::Capacity;
use accretion_core::model::{DecisionVariant, TrunkArch};
use accretion_core::protocol::{AccretionConfig, TrainConfig};
use clap::{Args, Parser, Subcommand};

use crate::error::{AppError, Result};
use crate::io::{build_partition, load_mnist, mnist_paths};
use crate::metrics::{unix_now, write_accuracy_csv, ConfigSnapshot, DataFile, RunManifest, StudyKind};
use crate::orders::read_orders_file;
use crate::studies::{
    load_replacement_inputs, run_bootstrap_sweep, run_order_study, run_replacement_study, run_single, StudyOutput,
};

#[derive(Debug, Parser)]
#[command(name = "accretion", version, about = "Accretionary learning experiments on MNIST")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bootstrap on a set of digits and accrete the rest in natural order.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of leading digits learned in the bootstrap phase.
        #[arg(long, default_value_t = 3)]
        bootstrap_size: usize,
    },
    /// Accuracy curves for several bootstrap sizes.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated sizes or an inclusive range such as `3-9`.
        #[arg(long, default_value = "3-9", value_parser = parse_sizes)]
        // Fully qualified so clap parses one list value instead of many items.
        bootstrap_sizes: ::std::vec::Vec<usize>,
    },
    /// Accuracy curves for the learning orders listed in a file.
    Orders {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        orders_file: PathBuf,
    },
    /// Replace the decision network of fully accreted checkpoints.
    Replace {
        #[command(flatten)]
        common: CommonArgs,
        /// A checkpoint file or a sweep output directory.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated variants: fc1, fc3, fc5, conv2.
        #[arg(long, default_value = "fc1,fc3,fc5,conv2", value_parser = parse_variants)]
        variants: ::std::vec::Vec<DecisionVariant>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Directory holding the four MNIST IDX files.
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub epochs_bootstrap: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs_detector: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs_decision: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub step_size: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    /// Samples kept per class in the data pool, or `unlimited`.
    #[arg(long, default_value = "unlimited", value_parser = parse_capacity)]
    pub pool_capacity: Capacity,
    #[arg(long, default_value_t = 5000)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 800)]
    pub eval_per_class: usize,
    /// `conv-features` or `dense-bottleneck`.
    #[arg(long, default_value = "conv-features", value_parser = parse_trunk)]
    pub trunk: TrunkArch,
    #[arg(long, default_value_t = 64)]
    pub head_hidden: usize,
    /// Suppress progress lines on stderr.
    #[arg(long)]
    pub quiet: bool,
}

impl CommonArgs {
    pub fn config(&self, bootstrap_size: usize) -> AccretionConfig {
        let train = |epochs| TrainConfig {
            epochs,
            batch_size: self.batch_size,
            step_size: self.step_size,
            momentum: self.momentum,
        };
        AccretionConfig {
            train_per_class: self.train_per_class,
            eval_per_class: self.eval_per_class,
            bootstrap: train(self.epochs_bootstrap),
            detector: train(self.epochs_detector),
            decision: train(self.epochs_decision),
            pool_capacity: self.pool_capacity,
            seed: self.seed,
            trunk: self.trunk,
            head_hidden: self.head_hidden,
            ..AccretionConfig::natural(bootstrap_size)
        }
    }
}

pub fn parse_sizes(s: &str) -> std::result::Result<Vec<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a size"));
    let sizes: Vec<usize> = match s.split_once('-') {
        Some((a, b)) => (num(a)?..=num(b)?).collect(),
        None => s.split(',').map(num).collect::<std::result::Result<_, _>>()?,
    };
    if sizes.is_empty() {
        return Err("no bootstrap sizes given".into());
    }
    if let Some(bad) = sizes.iter().find(|&&k| !(2..=10).contains(&k)) {
        return Err(format!("bootstrap size {bad} is outside 2..=10"));
    }
    Ok(sizes)
}

pub fn parse_variants(s: &str) -> std::result::Result<Vec<DecisionVariant>, String> {
    s.split(',')
        .map(|v| DecisionVariant::parse(v.trim()).map_err(|e| e.to_string()))
        .collect()
}

pub fn parse_capacity(s: &str) -> std::result::Result<Capacity, String> {
    if s == "unlimited" {
        return Ok(Capacity::Unlimited);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Capacity::PerClass(n)),
        _ => Err(format!("`{s}` is neither a positive count nor `unlimited`")),
    }
}

pub fn parse_trunk(s: &str) -> std::result::Result<TrunkArch, String> {
    TrunkArch::from_name(s).ok_or_else(|| format!("unknown trunk `{s}`"))
}

fn finish(
    study: StudyKind,
    common: &CommonArgs,
    config: &AccretionConfig,
    parameters: serde_json::Value,
    started: u64,
    output: &StudyOutput,
) -> Result<()> {
    write_accuracy_csv(&common.out_dir, &output.rows)?;
    let data_files = mnist_paths(&common.data_dir)
        .iter()
        .map(|p| DataFile::describe(p))
        .collect::<Result<Vec<_>>>()?;
    RunManifest {
        study,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigSnapshot::from(config),
        parameters,
        data_files,
        out_dir: common.out_dir.clone(),
        started_unix: started,
        finished_unix: unix_now(),
    }
    .write()?;
    Ok(())
}

fn progress(quiet: bool) -> impl FnMut(&str) {
    move |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    }
}

fn paths_json(paths: &[PathBuf]) -> serde_json::Value {
    paths.iter().map(|p| p.display().to_string()).collect()
}

pub fn run(cli: Cli) -> Result<()> {
    let started = unix_now();
    match cli.command {
        Command::Run { common, bootstrap_size } => {
            if !(2..=10).contains(&bootstrap_size) {
                return Err(AppError::Usage(format!("bootstrap size {bootstrap_size} is outside 2..=10")));
            }
            let config = common.config(bootstrap_size);
            let partition = build_partition(load_mnist(&common.data_dir)?, &config)?;
            let out = run_single(&partition, &config, &common.out_dir, progress(common.quiet))?;
            let params = serde_json::json!({ "checkpoints": paths_json(&out.checkpoints) });
            finish(StudyKind::SingleRun, &common, &config, params, started, &out)
        }
        Command::Sweep { common, bootstrap_sizes } => {
            let config = common.config(3);
            let partition = build_partition(load_mnist(&common.data_dir)?, &config)?;
            let out = run_bootstrap_sweep(
                &partition,
                &config,
                &bootstrap_sizes,
                &common.out_dir,
                progress(common.quiet),
            )?;
            let params = serde_json::json!({
                "bootstrap_sizes": bootstrap_sizes,
                "checkpoints": paths_json(&out.checkpoints),
            });
            finish(StudyKind::BootstrapSweep, &common, &config, params, started, &out)
        }
        Command::Orders { common, orders_file } => {
            let orders = read_orders_file(&orders_file)?;
            let config = common.config(5);
            let partition = build_partition(load_mnist(&common.data_dir)?, &config)?;
            let out = run_order_study(&partition, &config, &orders, progress(common.quiet))?;
            let params = serde_json::json!({
                "orders_file": orders_file.display().to_string(),
                "orders": orders.len(),
            });
            finish(StudyKind::OrderStudy, &common, &config, params, started, &out)
        }
        Command::Replace {
            common,
            checkpoint,
            variants,
        } => {
            let states = load_replacement_inputs(&checkpoint)?;
            let config = common.config(3);
            let partition = build_partition(load_mnist(&common.data_dir)?, &config)?;
            let out = run_replacement_study(&partition, &config, &states, &variants, progress(common.quiet))?;
            let params = serde_json::json!({
                "checkpoint": checkpoint.display().to_string(),
                "variants": variants.iter().map(|v| v.name()).collect::<Vec<_>>(),
            });
            finish(StudyKind::ReplacementStudy, &common, &config, params, started, &out)
        }
    }
}

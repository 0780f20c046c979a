//! `accuracy.csv` rows and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use accretion_core::data::Capacity;
use accretion_core::protocol::{AccretionConfig, EvalReport, TrainConfig};
use serde::Serialize;

use crate::error::{AppError, Result};
use crate::io::write_atomic;

pub const ACCURACY_CSV: &str = "accuracy.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    BootstrapSweep,
    OrderStudy,
    ReplacementStudy,
    SingleRun,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::BootstrapSweep => "bootstrap-sweep",
            StudyKind::OrderStudy => "order-study",
            StudyKind::ReplacementStudy => "replacement-study",
            StudyKind::SingleRun => "single-run",
        }
    }
}

/// One line of `accuracy.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub study: String,
    pub bootstrap_size: usize,
    pub order_id: String,
    pub learned_count: usize,
    /// A class id, `mean`, or `band` for order-study summaries.
    pub class_id: String,
    pub accuracy: f64,
}

/// Per-class rows followed by the `mean` row of one evaluation.
pub fn report_rows(study: &str, bootstrap_size: usize, order_id: &str, report: &EvalReport) -> Vec<AccuracyRow> {
    let row = |class_id: String, accuracy: f64| AccuracyRow {
        study: study.to_string(),
        bootstrap_size,
        order_id: order_id.to_string(),
        learned_count: report.learned(),
        class_id,
        accuracy,
    };
    let mut rows: Vec<AccuracyRow> = report
        .classes
        .iter()
        .zip(&report.per_class)
        .map(|(c, &a)| row(c.to_string(), a))
        .collect();
    rows.push(row("mean".to_string(), report.mean));
    rows
}

/// Serialize rows with a header; an empty slice gives a header-only file.
pub fn accuracy_csv(rows: &[AccuracyRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let csv_err = |source| AppError::Csv {
        path: PathBuf::from(ACCURACY_CSV),
        source,
    };
    w.write_record(["study", "bootstrap_size", "order_id", "learned_count", "class_id", "accuracy"])
        .map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| AppError::Csv {
        path: PathBuf::from(ACCURACY_CSV),
        source: e.into_error().into(),
    })
}

pub fn write_accuracy_csv(out_dir: &Path, rows: &[AccuracyRow]) -> Result<PathBuf> {
    let path = out_dir.join(ACCURACY_CSV);
    write_atomic(&path, &accuracy_csv(rows)?)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSnapshot {
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub momentum: f64,
}

impl From<&TrainConfig> for TrainSnapshot {
    fn from(c: &TrainConfig) -> Self {
        Self {
            epochs: c.epochs,
            batch_size: c.batch_size,
            step_size: c.step_size,
            momentum: c.momentum,
        }
    }
}

/// Every setting that influences a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSnapshot {
    pub seed: u64,
    pub bootstrap_classes: Vec<u8>,
    pub accretion_order: Vec<u8>,
    pub train_per_class: usize,
    pub eval_per_class: usize,
    pub bootstrap: TrainSnapshot,
    pub detector: TrainSnapshot,
    pub decision: TrainSnapshot,
    /// `null` for an unlimited pool.
    pub pool_capacity: Option<usize>,
    pub trunk: String,
    pub head_hidden: usize,
    pub objective: String,
}

impl From<&AccretionConfig> for ConfigSnapshot {
    fn from(c: &AccretionConfig) -> Self {
        Self {
            seed: c.seed,
            bootstrap_classes: c.bootstrap_classes.clone(),
            accretion_order: c.accretion_order.clone(),
            train_per_class: c.train_per_class,
            eval_per_class: c.eval_per_class,
            bootstrap: (&c.bootstrap).into(),
            detector: (&c.detector).into(),
            decision: (&c.decision).into(),
            pool_capacity: match c.pool_capacity {
                Capacity::Unlimited => None,
                Capacity::PerClass(n) => Some(n),
            },
            trunk: c.trunk.name().to_string(),
            head_hidden: c.head_hidden,
            objective: format!("{:?}", c.objective),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataFile {
    pub path: PathBuf,
    pub bytes: u64,
    pub crc32: String,
}

impl DataFile {
    pub fn describe(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(AppError::io(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            bytes: bytes.len() as u64,
            crc32: format!("{:08x}", crc32fast::hash(&bytes)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub study: StudyKind,
    pub version: String,
    pub config: ConfigSnapshot,
    /// Study-specific inputs (sizes, orders file, variants, checkpoints).
    pub parameters: serde_json::Value,
    pub data_files: Vec<DataFile>,
    pub out_dir: PathBuf,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn write(&self) -> Result<PathBuf> {
        let path = self.out_dir.join(MANIFEST_JSON);
        let mut text = serde_json::to_vec_pretty(self)?;
        text.push(b'\n');
        write_atomic(&path, &text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream_is_header_only() {
        let bytes = accuracy_csv(&[]).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "study,bootstrap_size,order_id,learned_count,class_id,accuracy\n"
        );
    }

    #[test]
    fn rows_per_report() {
        let r = EvalReport::from_predictions(vec![0, 1, 2], &[0, 1, 2, 2], &[0, 1, 2, 0]).unwrap();
        let rows = report_rows("single-run", 3, "natural", &r);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3].class_id, "mean");
        assert_eq!(rows[2].accuracy, 0.5);
        let text = String::from_utf8(accuracy_csv(&rows).unwrap()).unwrap();
        assert!(text.lines().nth(3).unwrap().starts_with("single-run,3,natural,3,2,0.5"));
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use accretion::io::{load_checkpoint, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};

fn write_idx(dir: &Path, images: &str, labels: &str, per_class: usize, salt: u32) {
    let n = (10 * per_class) as u32;
    let mut img = vec![0, 0, 8, 3];
    for d in [n, 28, 28] {
        img.extend_from_slice(&d.to_be_bytes());
    }
    let mut lab = vec![0, 0, 8, 1];
    lab.extend_from_slice(&n.to_be_bytes());
    // Interleave classes so the loader has to regroup them.
    for k in 0..per_class {
        for c in 0..10u32 {
            let (r0, c0) = (2 + (c as usize % 4) * 6, 2 + (c as usize / 4) * 8);
            for y in 0..28 {
                for x in 0..28 {
                    let inside = (r0..r0 + 6).contains(&y) && (c0..c0 + 6).contains(&x);
                    let h = (y as u32 * 131 + x as u32 * 71 + k as u32 * 29 + salt * 17 + c * 7)
                        .wrapping_mul(2654435761)
                        >> 28;
                    img.push(if inside { 220 } else { 0 } + h as u8 * 2);
                }
            }
            lab.push(c as u8);
        }
    }
    fs::write(dir.join(images), img).unwrap();
    fs::write(dir.join(labels), lab).unwrap();
}

fn data_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_idx(dir.path(), TRAIN_IMAGES, TRAIN_LABELS, 24, 1);
    write_idx(dir.path(), TEST_IMAGES, TEST_LABELS, 8, 2);
    dir
}

fn accretion(data: &Path, out: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_accretion"));
    cmd.args(args)
        .arg("--data-dir")
        .arg(data)
        .arg("--out-dir")
        .arg(out)
        .args([
            "--train-per-class", "24", "--eval-per-class", "8", "--epochs-bootstrap", "2",
            "--epochs-detector", "3", "--epochs-decision", "3", "--batch-size", "16",
            "--head-hidden", "16", "--seed", "5", "--quiet",
        ]);
    cmd.output().unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn mean_rows(csv: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(csv).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .filter(|r| r[4] == "mean")
        .collect()
}

#[test]
fn run_writes_curve_manifest_and_checkpoint() {
    let data = data_dir();
    let out = tempfile::tempdir().unwrap();
    ok(accretion(data.path(), out.path(), &["run", "--bootstrap-size", "3"]));

    let csv = out.path().join("accuracy.csv");
    let header = fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("study,bootstrap_size,order_id,learned_count,class_id,accuracy"));
    let means = mean_rows(&csv);
    let counts: Vec<&str> = means.iter().map(|r| r[3].as_str()).collect();
    assert_eq!(counts, ["3", "4", "5", "6", "7", "8", "9", "10"]);
    for r in &means {
        let acc: f64 = r[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["data_files"].as_array().unwrap().len(), 4);

    let checkpoint = PathBuf::from(manifest["parameters"]["checkpoints"][0].as_str().unwrap());
    let state = load_checkpoint(&checkpoint).unwrap();
    assert_eq!(state.learned(), 10);
    assert_eq!(state.bootstrap_size, 3);
}

#[test]
fn identical_invocations_write_identical_curves() {
    let data = data_dir();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(accretion(data.path(), a.path(), &["run", "--bootstrap-size", "8"]));
    ok(accretion(data.path(), b.path(), &["run", "--bootstrap-size", "8"]));
    assert_eq!(
        fs::read(a.path().join("accuracy.csv")).unwrap(),
        fs::read(b.path().join("accuracy.csv")).unwrap()
    );
}

#[test]
fn sweep_of_ten_is_a_single_point_and_feeds_replacement() {
    let data = data_dir();
    let out = tempfile::tempdir().unwrap();
    ok(accretion(data.path(), out.path(), &["sweep", "--bootstrap-sizes", "10"]));
    let means = mean_rows(&out.path().join("accuracy.csv"));
    assert_eq!(means.len(), 1);
    assert_eq!(means[0][3], "10");

    let replaced = tempfile::tempdir().unwrap();
    let sweep_dir = out.path().to_str().unwrap().to_string();
    ok(accretion(data.path(), replaced.path(), &["replace", "--checkpoint", &sweep_dir]));
    let means = mean_rows(&replaced.path().join("accuracy.csv"));
    assert_eq!(means.len(), 5);
    assert!(means.iter().all(|r| r[3] == "10"));
}

#[test]
fn malformed_orders_file_reports_the_line() {
    let data = data_dir();
    let out = tempfile::tempdir().unwrap();
    let orders = out.path().join("orders.txt");
    fs::write(&orders, "[0,1,2,3,4] [5,6,7,8,9]\n[0,1,2,3,4] [5,6,7,8,8]\n").unwrap();
    let res = accretion(data.path(), out.path(), &["orders", "--orders-file", orders.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("orders.txt:2:"), "{stderr}");
}

#[test]
fn out_of_range_bootstrap_size_is_a_usage_error() {
    let data = data_dir();
    let out = tempfile::tempdir().unwrap();
    for size in ["1", "11"] {
        let res = accretion(data.path(), out.path(), &["run", "--bootstrap-size", size]);
        assert_eq!(res.status.code(), Some(2));
    }
    assert!(!out.path().join("accuracy.csv").exists());
}

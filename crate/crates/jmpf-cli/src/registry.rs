//! Benchmark dataset registry: resolves dataset names to CSV files under the
//! data directory and the evaluation protocol each one uses.

use std::path::{Path, PathBuf};

use jmpf_core::datasets::{load_csv, BenchTask, CsvSchema, TaskKind};
use jmpf_core::{Error, Result};

/// Data root: `$JMPF_DATA` if set, else `data/` next to the workspace (found
/// relative to the compiled crate), else `data/` under the current directory.
pub fn data_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("JMPF_DATA") {
        return PathBuf::from(dir);
    }
    let workspace = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    if workspace.is_dir() {
        return workspace;
    }
    PathBuf::from("data")
}

fn missing(name: &str, path: &Path) -> Error {
    Error::Csv {
        path: path.into(),
        msg: format!(
            "dataset {name:?} not found; run scripts/fetch_data.sh to download it"
        ),
    }
}

fn load_or_missing(name: &str, path: &Path, schema: &CsvSchema) -> Result<jmpf_core::datasets::Dataset> {
    if !path.is_file() {
        return Err(missing(name, path));
    }
    load_csv(path, schema)
}

/// Zero-based index of the last column of the first CSV row.
pub fn last_column(path: &Path) -> Result<usize> {
    let first = std::fs::read_to_string(path)?
        .lines()
        .next()
        .map(|l| l.split(',').count())
        .unwrap_or(0);
    if first == 0 {
        return Err(Error::EmptyInput("csv has no rows"));
    }
    Ok(first - 1)
}

/// Resolve a registered dataset name, or fall back to treating `name` as a
/// CSV path (label in the last column, 25% holdout).
pub fn bench_task(name: &str, task_kind: TaskKind) -> Result<BenchTask> {
    let root = data_dir();
    match name {
        "pendigits" => {
            let train_path = root.join("uci/pendigits_train.csv");
            let test_path = root.join("uci/pendigits_test.csv");
            let schema = CsvSchema {
                label_column: 16,
                task: TaskKind::Classification,
                has_header: false,
            };
            let mut train = load_or_missing(name, &train_path, &schema)?;
            let mut test = load_or_missing(name, &test_path, &schema)?;
            train.name = "pendigits".into();
            test.name = "pendigits".into();
            Ok(BenchTask {
                train,
                test: Some(test),
                test_fraction: 0.0,
            })
        }
        "kin8nm" => {
            let path = root.join("uci/kin8nm.csv");
            if !path.is_file() {
                return Err(missing(name, &path));
            }
            let schema = CsvSchema {
                label_column: last_column(&path)?,
                task: TaskKind::Regression,
                has_header: true,
            };
            let mut train = load_csv(&path, &schema)?;
            train.name = "kin8nm".into();
            Ok(BenchTask {
                train,
                test: None,
                test_fraction: 0.25,
            })
        }
        "digits" => {
            // bundled local surrogate: 8x8 handwritten digit bitmaps
            let path = root.join("local/digits.csv");
            if !path.is_file() {
                return Err(missing(name, &path));
            }
            let schema = CsvSchema {
                label_column: last_column(&path)?,
                task: TaskKind::Classification,
                has_header: false,
            };
            let mut train = load_csv(&path, &schema)?;
            train.name = "digits".into();
            Ok(BenchTask {
                train,
                test: None,
                test_fraction: 0.25,
            })
        }
        other => {
            let path = PathBuf::from(other);
            if !path.is_file() {
                return Err(missing(other, &path));
            }
            let schema = CsvSchema {
                label_column: last_column(&path)?,
                task: task_kind,
                has_header: false,
            };
            Ok(BenchTask {
                train: load_csv(&path, &schema)?,
                test: None,
                test_fraction: 0.25,
            })
        }
    }
}

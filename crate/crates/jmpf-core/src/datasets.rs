//! CSV ingestion, holdout splits, metrics, and the benchmark runner that
//! compares standard random forests against the rotated zero-threshold mode
//! with repeated-seed mean/std reporting.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::forest::{self, Forest, ForestConfig, SplitMode, Targets, Task};
use crate::numerics::Matrix;
use crate::rotation::{self, RotationModel, DEFAULT_ITQ_ITERATIONS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Classification,
    Regression,
}

#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub label_column: usize,
    pub task: TaskKind,
    pub has_header: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub x: Matrix,
    pub targets: Targets,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_classes(&self) -> usize {
        match &self.targets {
            Targets::Classes { num_classes, .. } => *num_classes,
            Targets::Values(_) => 0,
        }
    }

    fn select(&self, idx: &[usize]) -> Dataset {
        let targets = match &self.targets {
            Targets::Classes { labels, num_classes } => Targets::Classes {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                num_classes: *num_classes,
            },
            Targets::Values(m) => Targets::Values(m.select_rows(idx)),
        };
        Dataset {
            name: self.name.clone(),
            x: self.x.select_rows(idx),
            targets,
        }
    }
}

/// Load a numeric CSV. Classification labels are mapped to dense indices in
/// first-appearance order; any non-numeric or missing feature cell is a hard
/// error with its location.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.into(),
            msg: e.to_string(),
        })?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();

    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.into(),
            msg: e.to_string(),
        })?;
        if schema.label_column >= record.len() {
            return Err(Error::Csv {
                path: path.into(),
                msg: format!(
                    "label column {} out of range for a {}-column row",
                    schema.label_column,
                    record.len()
                ),
            });
        }
        let mut features = Vec::with_capacity(record.len() - 1);
        for (c, cell) in record.iter().enumerate() {
            if c == schema.label_column {
                match schema.task {
                    TaskKind::Classification => {
                        let idx = label_names
                            .iter()
                            .position(|n| n == cell)
                            .unwrap_or_else(|| {
                                label_names.push(cell.to_string());
                                label_names.len() - 1
                            });
                        labels.push(idx);
                    }
                    TaskKind::Regression => {
                        values.push(parse_cell(path, r, c, cell)?);
                    }
                }
            } else {
                features.push(parse_cell(path, r, c, cell)?);
            }
        }
        rows.push(features);
    }

    if rows.is_empty() {
        return Err(Error::EmptyInput("csv has no data rows"));
    }
    let x = Matrix::from_rows(&rows)?;
    let targets = match schema.task {
        TaskKind::Classification => Targets::Classes {
            labels,
            num_classes: label_names.len(),
        },
        TaskKind::Regression => {
            let n = values.len();
            Targets::Values(Matrix::new(n, 1, values)?)
        }
    };
    Ok(Dataset {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        x,
        targets,
    })
}

fn parse_cell(path: &Path, row: usize, col: usize, cell: &str) -> Result<f64> {
    if cell.is_empty() {
        return Err(Error::BadCell {
            path: path.into(),
            row,
            col,
            msg: "missing value".into(),
        });
    }
    cell.parse::<f64>().map_err(|_| Error::BadCell {
        path: path.into(),
        row,
        col,
        msg: format!("not numeric: {cell:?}"),
    })
}

/// Seeded shuffle-then-split; the two parts are disjoint and exhaustive.
pub fn split_holdout(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::OutOfRange(format!(
            "test_fraction {test_fraction} not in (0, 1)"
        )));
    }
    let n = dataset.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let n_test = n_test.clamp(1, n - 1);
    let (test_idx, train_idx) = idx.split_at(n_test);
    Ok((dataset.select(train_idx), dataset.select(test_idx)))
}

pub fn error_rate(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "error_rate: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    let wrong = pred.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / pred.len() as f64)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "rmse: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    let mse: f64 = pred
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Per-dimension zero-center and unit-scale transform fitted on training
/// statistics only.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn fit(x: &Matrix, unit_scale: bool) -> Self {
        let mean = x.column_means();
        let mut scale = vec![1.0; x.cols()];
        if unit_scale {
            for (c, s) in scale.iter_mut().enumerate() {
                let mut acc = 0.0;
                for r in 0..x.rows() {
                    acc += (x.get(r, c) - mean[c]).powi(2);
                }
                let sd = (acc / x.rows() as f64).sqrt();
                if sd > 0.0 {
                    *s = sd;
                }
            }
        }
        Normalizer { mean, scale }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::ShapeMismatch(format!(
                "normalizer dim {} vs {}",
                self.mean.len(),
                x.cols()
            )));
        }
        let mut out = x.clone();
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                out.set(r, c, (x.get(r, c) - self.mean[c]) / self.scale[c]);
            }
        }
        Ok(out)
    }
}

/// A trained predictor: normalization statistics, the optional learned
/// rotation (JMPF mode), and the forest.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub norm: Normalizer,
    pub rotation: Option<RotationModel>,
    pub forest: Forest,
}

impl FittedModel {
    pub fn fit(train: &Dataset, config: &ForestConfig) -> Result<Self> {
        Self::fit_with_iterations(train, config, DEFAULT_ITQ_ITERATIONS)
    }

    pub fn fit_with_iterations(
        train: &Dataset,
        config: &ForestConfig,
        itq_iterations: usize,
    ) -> Result<Self> {
        let norm = Normalizer::fit(&train.x, true);
        let xn = norm.apply(&train.x)?;
        let (rotation, xf) = match config.mode {
            SplitMode::Standard => (None, xn),
            SplitMode::Jmpf => {
                let rot = rotation::itq_fit(&xn, itq_iterations, config.seed)?;
                let rotated = rot.rotate(&xn)?;
                (Some(rot), rotated)
            }
        };
        let forest = forest::train_forest(&xf, &train.targets, config)?;
        Ok(FittedModel {
            norm,
            rotation,
            forest,
        })
    }

    fn transform(&self, x: &Matrix) -> Result<Matrix> {
        let xn = self.norm.apply(x)?;
        match &self.rotation {
            Some(rot) => rot.rotate(&xn),
            None => Ok(xn),
        }
    }

    pub fn predict_classes(&self, x: &Matrix) -> Result<Vec<usize>> {
        let xf = self.transform(x)?;
        (0..xf.rows())
            .map(|i| self.forest.predict_class(xf.row(i)))
            .collect()
    }

    pub fn predict_values(&self, x: &Matrix) -> Result<Vec<Vec<f64>>> {
        let xf = self.transform(x)?;
        (0..xf.rows())
            .map(|i| self.forest.predict_value(xf.row(i)))
            .collect()
    }

    /// Error rate (classification) or RMSE of the first target dimension.
    pub fn evaluate(&self, test: &Dataset) -> Result<f64> {
        match &test.targets {
            Targets::Classes { labels, .. } => {
                let pred = self.predict_classes(&test.x)?;
                error_rate(&pred, labels)
            }
            Targets::Values(m) => {
                let pred = self.predict_values(&test.x)?;
                let pred0: Vec<f64> = pred.iter().map(|p| p[0]).collect();
                let truth: Vec<f64> = (0..m.rows()).map(|i| m.get(i, 0)).collect();
                rmse(&pred0, &truth)
            }
        }
    }
}

/// One benchmark task: a training set plus either a predefined test set or
/// a holdout fraction re-split per repeat.
#[derive(Debug, Clone)]
pub struct BenchTask {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub test_fraction: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BenchReport {
    pub dataset: String,
    pub mode: String,
    pub repeats: usize,
    pub runs: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Power-of-ten display factor keeping the scaled mean in [1, 10).
    pub scale: i32,
    /// Relative reduction vs the standard-forest baseline, when present.
    pub reduction_vs_rf: Option<f64>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn display_scale(mean: f64) -> i32 {
    if mean <= 0.0 || !mean.is_finite() {
        return 0;
    }
    mean.log10().floor() as i32
}

/// Train and evaluate every config `repeats` times with the given seeds,
/// aggregating mean and std, and reporting the relative reduction against
/// the first Standard-mode config.
pub fn run_benchmark(
    task: &BenchTask,
    configs: &[(String, ForestConfig)],
    repeats: usize,
    seeds: &[u64],
) -> Result<Vec<BenchReport>> {
    if repeats < 1 || seeds.len() != repeats {
        return Err(Error::OutOfRange(format!(
            "repeats = {repeats} but {} seeds given",
            seeds.len()
        )));
    }
    let mut reports = Vec::new();
    let mut baseline: Option<f64> = None;
    for (label, config) in configs {
        let mut runs = Vec::with_capacity(repeats);
        for &seed in seeds {
            let mut cfg = config.clone();
            cfg.seed = seed;
            let (train, test) = match &task.test {
                Some(test) => (task.train.clone(), test.clone()),
                None => split_holdout(&task.train, task.test_fraction, seed)?,
            };
            let model = FittedModel::fit(&train, &cfg)?;
            runs.push(model.evaluate(&test)?);
        }
        let (mean, std) = mean_std(&runs);
        let is_standard = config.mode == SplitMode::Standard;
        if is_standard && baseline.is_none() {
            baseline = Some(mean);
        }
        let reduction = match (is_standard, baseline) {
            (false, Some(base)) if base > 0.0 => Some((base - mean) / base),
            _ => None,
        };
        reports.push(BenchReport {
            dataset: task.train.name.clone(),
            mode: label.clone(),
            repeats,
            runs,
            mean,
            std,
            scale: display_scale(mean),
            reduction_vs_rf: reduction,
        });
    }
    Ok(reports)
}

/// Aligned plain-text table of benchmark reports.
pub fn format_reports(reports: &[BenchReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:<10} {:>14} {:>8} {:>12}\n",
        "dataset", "mode", "mean+-std", "scale", "vs rf"
    ));
    for r in reports {
        let factor = 10f64.powi(r.scale);
        let reduction = r
            .reduction_vs_rf
            .map(|v| format!("{:+.1}%", v * 100.0))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<16} {:<10} {:>6.3}+-{:<6.3} {:>8} {:>12}\n",
            r.dataset,
            r.mode,
            r.mean / factor,
            r.std / factor,
            format!("1e{}", r.scale),
            reduction
        ));
    }
    out
}

/// One JSON object per report, newline-delimited.
pub fn reports_to_json_lines(reports: &[BenchReport]) -> String {
    reports
        .iter()
        .map(|r| serde_json::to_string(r).expect("report serializes"))
        .map(|s| s + "\n")
        .collect()
}

/// Mirror of Eq. 2 routing used as a convenience in harness code: whether a
/// config/task pair is a classification run.
pub fn is_classification(config: &ForestConfig) -> bool {
    config.task == Task::Classification
}

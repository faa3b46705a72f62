use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use jmpf_cli::model_file::{load_model, save_model, Model};
use jmpf_cli::registry;
use jmpf_core::datasets::{
    format_reports, load_csv, reports_to_json_lines, run_benchmark, CsvSchema, FittedModel,
    TaskKind,
};
use jmpf_core::forest::{ForestConfig, SplitMode, Targets};
use jmpf_core::srpipe::{
    self, bicubic_resize, evaluate_against_bicubic, load_luma, load_rgb, save_gray, save_rgb,
    sr_apply, sr_train, to_chroma, to_luminance, ycbcr_to_rgb, ImageGray, PatchConfig,
    SrTrainParams,
};
use jmpf_core::Matrix;

#[derive(Parser)]
#[command(name = "jmpf", version, about = "Rotation-clustered random forests and patch-regression super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Rf,
    Jmpf,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Classification,
    Regression,
}

impl From<TaskArg> for TaskKind {
    fn from(t: TaskArg) -> TaskKind {
        match t {
            TaskArg::Classification => TaskKind::Classification,
            TaskArg::Regression => TaskKind::Regression,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a forest on a CSV dataset and save the model.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "classification")]
        task: TaskArg,
        /// Zero-based label column; defaults to the last column.
        #[arg(long)]
        label_column: Option<usize>,
        /// Treat the first row as a header.
        #[arg(long)]
        header: bool,
        #[arg(long, value_enum, default_value = "jmpf")]
        mode: Mode,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 15)]
        depth: usize,
        /// Candidate feature dimensions per split.
        #[arg(long, default_value_t = 1)]
        candidates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict with a saved model on a features-only CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated train/evaluate runs with mean, std, and reduction vs the
    /// standard-forest baseline.
    Bench {
        /// Registered name (pendigits, kin8nm, digits) or a CSV path.
        #[arg(long)]
        dataset: String,
        #[arg(long, value_enum, default_value = "both")]
        mode: Mode,
        /// Task for unregistered CSV paths.
        #[arg(long, value_enum, default_value = "classification")]
        task: TaskArg,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 15)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        candidates: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the JSON-lines report to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Train a super-resolution model from a directory of HR images.
    SrTrain {
        #[arg(long)]
        train_dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        scale: usize,
        #[arg(long, default_value_t = 6)]
        patch: usize,
        #[arg(long, default_value_t = 3)]
        stride: usize,
        #[arg(long, default_value_t = 10)]
        trees: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 0.999)]
        energy: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Super-resolve a low-resolution image.
    SrRun {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Must match the model's training scale when given.
        #[arg(long)]
        scale: Option<usize>,
    },
    /// PSNR of the model vs the bicubic baseline over a directory of HR
    /// images.
    SrEval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn run(command: Command) -> Result<(), AnyError> {
    match command {
        Command::Train {
            data,
            task,
            label_column,
            header,
            mode,
            trees,
            depth,
            candidates,
            seed,
            out,
        } => {
            let split_mode = match mode {
                Mode::Rf => SplitMode::Standard,
                Mode::Jmpf | Mode::Both => SplitMode::Jmpf,
            };
            let label_column = match label_column {
                Some(c) => c,
                None => registry::last_column(&data)?,
            };
            let schema = CsvSchema {
                label_column,
                task: task.into(),
                has_header: header,
            };
            let train = load_csv(&data, &schema)?;
            let mut config = match task {
                TaskArg::Classification => ForestConfig::classification(trees, split_mode, seed),
                TaskArg::Regression => ForestConfig::regression(trees, split_mode, seed),
            };
            config.max_depth = depth;
            config.num_candidate_dims = candidates;
            let model = FittedModel::fit(&train, &config)?;
            let kind = match task {
                TaskArg::Classification => Model::Classifier(model),
                TaskArg::Regression => Model::Regressor(model),
            };
            save_model(&kind, &out)?;
            println!("saved model to {}", out.display());
            Ok(())
        }
        Command::Predict { model, data, out } => {
            let x = load_feature_csv(&data)?;
            let lines: Vec<String> = match load_model(&model)? {
                Model::Classifier(m) => m
                    .predict_classes(&x)?
                    .into_iter()
                    .map(|c| c.to_string())
                    .collect(),
                Model::Regressor(m) => m
                    .predict_values(&x)?
                    .into_iter()
                    .map(|v| {
                        v.iter()
                            .map(|y| y.to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect(),
                Model::Sr(_) => {
                    return Err("model is a super-resolution model; use sr-run".into())
                }
            };
            let text = lines.join("\n") + "\n";
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Bench {
            dataset,
            mode,
            task,
            trees,
            depth,
            candidates,
            repeats,
            seed,
            json,
        } => {
            let bench = registry::bench_task(&dataset, task.into())?;
            let kind = match &bench.train.targets {
                Targets::Classes { .. } => TaskArg::Classification,
                Targets::Values(_) => TaskArg::Regression,
            };
            let make = |m: SplitMode| {
                let mut c = match kind {
                    TaskArg::Classification => ForestConfig::classification(trees, m, seed),
                    TaskArg::Regression => ForestConfig::regression(trees, m, seed),
                };
                c.max_depth = depth;
                c.num_candidate_dims = candidates;
                c
            };
            let configs: Vec<(String, ForestConfig)> = match mode {
                Mode::Rf => vec![("rf".into(), make(SplitMode::Standard))],
                Mode::Jmpf => vec![("jmpf".into(), make(SplitMode::Jmpf))],
                Mode::Both => vec![
                    ("rf".into(), make(SplitMode::Standard)),
                    ("jmpf".into(), make(SplitMode::Jmpf)),
                ],
            };
            let seeds: Vec<u64> = (0..repeats as u64).map(|i| seed + i).collect();
            let reports = run_benchmark(&bench, &configs, repeats, &seeds)?;
            print!("{}", format_reports(&reports));
            let json_lines = reports_to_json_lines(&reports);
            print!("{json_lines}");
            if let Some(path) = json {
                std::fs::write(path, json_lines)?;
            }
            Ok(())
        }
        Command::SrTrain {
            train_dir,
            scale,
            patch,
            stride,
            trees,
            lambda,
            energy,
            seed,
            out,
        } => {
            let images = load_image_dir(&train_dir)?;
            let cfg = PatchConfig {
                patch_size: patch,
                stride,
                scale,
                pca_energy: energy,
            };
            let params = SrTrainParams {
                num_trees: trees,
                lambda,
                seed,
                ..SrTrainParams::default()
            };
            let model = sr_train(&images, &cfg, &params)?;
            save_model(&Model::Sr(model), &out)?;
            println!("saved model to {}", out.display());
            Ok(())
        }
        Command::SrRun {
            model,
            input,
            out,
            scale,
        } => {
            let sr_model = match load_model(&model)? {
                Model::Sr(m) => m,
                _ => return Err("model is not a super-resolution model".into()),
            };
            if let Some(s) = scale {
                if s != sr_model.patch.scale {
                    return Err(format!(
                        "requested scale {s} but the model was trained at x{}",
                        sr_model.patch.scale
                    )
                    .into());
                }
            }
            let scale = sr_model.patch.scale;
            let gray_out = out
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
            match load_rgb(&input)? {
                Some((w, h, rgb)) if !gray_out => {
                    // luminance through the model, chroma upscaled bicubically
                    let y = to_luminance(&rgb, w, h)?;
                    let (cb, cr) = to_chroma(&rgb, w, h)?;
                    let y_hr = sr_apply(&sr_model, &y)?;
                    let cb_hr = bicubic_resize(&cb, w * scale, h * scale)?;
                    let cr_hr = bicubic_resize(&cr, w * scale, h * scale)?;
                    let rgb_hr = ycbcr_to_rgb(&y_hr, &cb_hr, &cr_hr)?;
                    save_rgb(&out, w * scale, h * scale, rgb_hr)?;
                }
                _ => {
                    let lr = load_luma(&input)?;
                    let hr = sr_apply(&sr_model, &lr)?;
                    save_gray(&out, &hr)?;
                }
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::SrEval { model, dir, json } => {
            let sr_model = match load_model(&model)? {
                Model::Sr(m) => m,
                _ => return Err("model is not a super-resolution model".into()),
            };
            let paths = image_paths(&dir)?;
            if paths.is_empty() {
                return Err(format!("no images in {}", dir.display()).into());
            }
            let mut json_lines = String::new();
            let mut sums = (0.0, 0.0);
            println!("{:<24} {:>10} {:>10}", "image", "jmpf", "bicubic");
            for path in &paths {
                let hr = load_luma(path)?;
                let (sr, bi) = evaluate_against_bicubic(&sr_model, &hr)?;
                let name = path
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                println!("{name:<24} {sr:>10.2} {bi:>10.2}");
                json_lines += &format!(
                    "{}\n",
                    serde_json::json!({"image": name, "psnr_jmpf": sr, "psnr_bicubic": bi})
                );
                sums.0 += sr;
                sums.1 += bi;
            }
            let n = paths.len() as f64;
            println!(
                "{:<24} {:>10.2} {:>10.2}",
                "average",
                sums.0 / n,
                sums.1 / n
            );
            json_lines += &format!(
                "{}\n",
                serde_json::json!({
                    "image": "average",
                    "psnr_jmpf": sums.0 / n,
                    "psnr_bicubic": sums.1 / n
                })
            );
            if let Some(path) = json {
                std::fs::write(path, json_lines)?;
            }
            Ok(())
        }
    }
}

/// Numeric CSV with no label column and no header.
fn load_feature_csv(path: &Path) -> Result<Matrix, AnyError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect();
        rows.push(row.map_err(|e| format!("{}:{}: {e}", path.display(), r + 1))?);
    }
    if rows.is_empty() {
        return Err(format!("{}: no data rows", path.display()).into());
    }
    Ok(Matrix::from_rows(&rows)?)
}

fn image_paths(dir: &Path) -> Result<Vec<PathBuf>, AnyError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| {
                ["png", "pgm", "bmp"]
                    .iter()
                    .any(|x| e.eq_ignore_ascii_case(x))
            })
        })
        .collect();
    paths.sort();
    Ok(paths)
}

fn load_image_dir(dir: &Path) -> Result<Vec<ImageGray>, AnyError> {
    let paths = image_paths(dir)?;
    if paths.is_empty() {
        return Err(format!("no training images in {}", dir.display()).into());
    }
    paths
        .iter()
        .map(|p| srpipe::load_luma(p).map_err(Into::into))
        .collect()
}

use rayon::prelude::*;

use super::bicubic::{bicubic_resize, bicubic_round_trip};
use super::features::extract_features;
use super::image::{psnr, ImageGray};
use crate::forest::{self, Forest, ForestConfig, Impurity, SplitMode, Targets, Task};
use crate::numerics::{self, Matrix, PcaBasis};
use crate::rotation::{self, RotationModel};
use crate::{Error, Result};

/// Patch geometry on the high-resolution grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchConfig {
    pub patch_size: usize,
    pub stride: usize,
    pub scale: usize,
    /// Fraction of feature variance retained by PCA.
    pub pca_energy: f64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            patch_size: 6,
            stride: 3,
            scale: 3,
            pca_energy: 0.999,
        }
    }
}

impl PatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.stride > self.patch_size {
            return Err(Error::OutOfRange(format!(
                "stride {} must be in 1..=patch_size {}",
                self.stride, self.patch_size
            )));
        }
        if self.scale < 2 {
            return Err(Error::OutOfRange("scale must be >= 2".into()));
        }
        if !(self.pca_energy > 0.0 && self.pca_energy <= 1.0) {
            return Err(Error::OutOfRange("pca_energy must be in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        4 * self.patch_size * self.patch_size
    }

    pub fn target_dim(&self) -> usize {
        self.patch_size * self.patch_size
    }
}

/// Training parameters for the ridge-leaf forest stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SrTrainParams {
    pub num_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub num_candidate_dims: usize,
    pub lambda: f64,
    pub itq_iterations: usize,
    pub seed: u64,
    /// Regress raw HR intensities instead of bicubic residuals.
    pub raw_targets: bool,
}

impl Default for SrTrainParams {
    fn default() -> Self {
        Self {
            num_trees: 10,
            max_depth: 15,
            min_samples_split: 5,
            num_candidate_dims: 8,
            lambda: 0.1,
            itq_iterations: rotation::DEFAULT_ITQ_ITERATIONS,
            seed: 0,
            raw_targets: false,
        }
    }
}

/// A trained super-resolution model: patch geometry, the PCA basis over
/// gradient features, the learned rotation, and a ridge-leaf forest mapping
/// rotated features to residual patches.
#[derive(Debug, Clone, PartialEq)]
pub struct SrModel {
    pub patch: PatchConfig,
    pub pca: PcaBasis,
    pub rotation: RotationModel,
    pub forest: Forest,
    pub raw_targets: bool,
}

fn patch_origins(dim: usize, p: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..=dim.saturating_sub(p)).step_by(stride)
}

fn flatten_window(img: &ImageGray, x0: usize, y0: usize, p: usize, out: &mut Vec<f64>) {
    for y in y0..y0 + p {
        for x in x0..x0 + p {
            out.push(img.get(x, y));
        }
    }
}

/// Gradient-feature rows for every patch origin of an HR-grid image.
fn feature_rows(mid: &ImageGray, cfg: &PatchConfig) -> Result<(Vec<(usize, usize)>, Matrix)> {
    let p = cfg.patch_size;
    if mid.width < p || mid.height < p {
        return Err(Error::OutOfRange(format!(
            "image {}x{} has no {p}x{p} patch locations",
            mid.width, mid.height
        )));
    }
    let maps = extract_features(mid)?;
    let mut origins = Vec::new();
    for y0 in patch_origins(mid.height, p, cfg.stride) {
        for x0 in patch_origins(mid.width, p, cfg.stride) {
            origins.push((x0, y0));
        }
    }
    let mut data = Vec::with_capacity(origins.len() * cfg.feature_dim());
    for &(x0, y0) in &origins {
        for map in &maps {
            flatten_window(map, x0, y0, p, &mut data);
        }
    }
    let features = Matrix::new(origins.len(), cfg.feature_dim(), data)?;
    Ok((origins, features))
}

/// Build (feature, target) rows from HR images: the LR image is the bicubic
/// downscale, the mid image its upscale back to HR size, features come from
/// the mid image's gradient maps, and targets are the HR - mid residual
/// patches (or raw HR patches).
pub fn build_training_pairs(
    hr_images: &[ImageGray],
    cfg: &PatchConfig,
    raw_targets: bool,
) -> Result<(Matrix, Matrix)> {
    cfg.validate()?;
    let mut feat_rows: Vec<Matrix> = Vec::new();
    let mut target_data = Vec::new();
    let mut total = 0usize;
    for hr in hr_images {
        let hr = hr.center_crop_to_multiple(cfg.scale)?;
        let mid = bicubic_round_trip(&hr, cfg.scale)?;
        let (origins, features) = feature_rows(&mid, cfg)?;
        total += origins.len();
        for &(x0, y0) in &origins {
            for y in y0..y0 + cfg.patch_size {
                for x in x0..x0 + cfg.patch_size {
                    let v = if raw_targets {
                        hr.get(x, y)
                    } else {
                        hr.get(x, y) - mid.get(x, y)
                    };
                    target_data.push(v);
                }
            }
        }
        feat_rows.push(features);
    }
    if total == 0 {
        return Err(Error::EmptyInput("no valid patch locations"));
    }
    let mut all = Vec::with_capacity(total * cfg.feature_dim());
    for f in &feat_rows {
        all.extend_from_slice(f.data());
    }
    Ok((
        Matrix::new(total, cfg.feature_dim(), all)?,
        Matrix::new(total, cfg.target_dim(), target_data)?,
    ))
}

/// Truncate a full PCA fit to the smallest k reaching the energy fraction.
fn pca_by_energy(features: &Matrix, energy: f64) -> Result<PcaBasis> {
    let full = numerics::pca_fit(features, features.cols())?;
    let total: f64 = full.explained_variance.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("features carry no variance"));
    }
    let mut acc = 0.0;
    let mut k = full.explained_variance.len();
    for (i, ev) in full.explained_variance.iter().enumerate() {
        acc += ev;
        if acc >= energy * total {
            k = i + 1;
            break;
        }
    }
    Ok(PcaBasis {
        mean: full.mean,
        components: full.components.left_columns(k),
        explained_variance: full.explained_variance[..k].to_vec(),
    })
}

/// Train the full pipeline: gradient features, PCA, rotation, and a
/// ridge-leaf forest with zero-center thresholds.
pub fn sr_train(
    hr_images: &[ImageGray],
    cfg: &PatchConfig,
    params: &SrTrainParams,
) -> Result<SrModel> {
    let (features, targets) = build_training_pairs(hr_images, cfg, params.raw_targets)?;
    let pca = pca_by_energy(&features, cfg.pca_energy)?;
    let projected = numerics::pca_apply(&pca, &features)?;
    let rotation = rotation::itq_fit(&projected, params.itq_iterations, params.seed)?;
    let rotated = rotation.rotate(&projected)?;
    let forest_cfg = ForestConfig {
        num_trees: params.num_trees,
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        num_candidate_dims: params.num_candidate_dims,
        num_candidate_thresholds: 10,
        mode: SplitMode::Jmpf,
        task: Task::RidgeLeaves,
        lambda: params.lambda,
        impurity: Impurity::VarianceSum,
        seed: params.seed,
    };
    let forest = forest::train_forest(&rotated, &Targets::Values(targets), &forest_cfg)?;
    Ok(SrModel {
        patch: cfg.clone(),
        pca,
        rotation,
        forest,
        raw_targets: params.raw_targets,
    })
}

/// Average per-patch predictions into a per-pixel field; returns the value
/// sum and the coverage count per pixel.
fn accumulate_patches(
    width: usize,
    height: usize,
    cfg: &PatchConfig,
    origins: &[(usize, usize)],
    patches: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>) {
    let p = cfg.patch_size;
    let mut sum = vec![0.0; width * height];
    let mut coverage = vec![0.0; width * height];
    for (&(x0, y0), patch) in origins.iter().zip(patches) {
        let mut k = 0;
        for y in y0..y0 + p {
            for x in x0..x0 + p {
                sum[y * width + x] += patch[k];
                coverage[y * width + x] += 1.0;
                k += 1;
            }
        }
    }
    (sum, coverage)
}

/// Super-resolve without the final [0, 255] clamp.
pub fn sr_apply_raw(model: &SrModel, lr: &ImageGray) -> Result<ImageGray> {
    let cfg = &model.patch;
    let (out_w, out_h) = (lr.width * cfg.scale, lr.height * cfg.scale);
    let mid = bicubic_resize(lr, out_w, out_h)?;
    let (origins, features) = feature_rows(&mid, cfg)?;
    let projected = numerics::pca_apply(&model.pca, &features)?;
    let rotated = model.rotation.rotate(&projected)?;
    let patches: Vec<Vec<f64>> = (0..rotated.rows())
        .into_par_iter()
        .map(|i| model.forest.predict_value(rotated.row(i)))
        .collect::<Result<_>>()?;
    let (sum, coverage) = accumulate_patches(out_w, out_h, cfg, &origins, &patches);

    let mut samples = Vec::with_capacity(out_w * out_h);
    for i in 0..out_w * out_h {
        let v = if coverage[i] > 0.0 {
            let avg = sum[i] / coverage[i];
            if model.raw_targets {
                avg
            } else {
                mid.samples[i] + avg
            }
        } else {
            mid.samples[i]
        };
        samples.push(v);
    }
    ImageGray::new(out_w, out_h, samples)
}

/// Super-resolve an LR image by `scale`, clamped to [0, 255].
pub fn sr_apply(model: &SrModel, lr: &ImageGray) -> Result<ImageGray> {
    let mut out = sr_apply_raw(model, lr)?;
    for v in &mut out.samples {
        *v = v.clamp(0.0, 255.0);
    }
    Ok(out)
}

/// Degrade an HR image, super-resolve it, and report (sr, bicubic) PSNR
/// against the ground truth with border crop = scale.
pub fn evaluate_against_bicubic(model: &SrModel, hr: &ImageGray) -> Result<(f64, f64)> {
    let scale = model.patch.scale;
    let hr = hr.center_crop_to_multiple(scale)?;
    let lr = bicubic_resize(&hr, hr.width / scale, hr.height / scale)?;
    let mid = bicubic_resize(&lr, hr.width, hr.height)?;
    let sr = sr_apply(model, &lr)?;
    Ok((psnr(&sr, &hr, scale)?, psnr(&mid, &hr, scale)?))
}

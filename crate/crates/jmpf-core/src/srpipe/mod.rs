//! Single-image super-resolution pipeline: bicubic degradation model,
//! gradient-patch features, PCA + learned rotation, ridge-leaf forest.

mod bicubic;
mod features;
mod image;
mod pipeline;

pub use bicubic::{bicubic_resize, bicubic_round_trip};
pub use features::extract_features;
pub use image::{
    load_luma, load_pgm, load_rgb, psnr, save_gray, save_pgm, save_rgb, to_chroma, to_luminance,
    ycbcr_to_rgb, ImageGray,
};
pub use pipeline::{
    build_training_pairs, evaluate_against_bicubic, sr_apply, sr_apply_raw, sr_train, PatchConfig,
    SrModel, SrTrainParams,
};

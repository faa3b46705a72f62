//! Joint maximum purity forests.
//!
//! The pipeline: zero-center features, learn an orthonormal rotation by
//! iterative quantization so samples cluster at hypercube vertices, then
//! grow a random forest whose split thresholds are the inherent zero-center
//! hyperplanes of the rotated space. Leaves carry class histograms, target
//! means, or ridge projections; the ridge-leaf variant drives the
//! clustering-regression single-image super-resolution pipeline.

pub mod datasets;
mod error;
pub mod forest;
pub mod numerics;
pub mod rotation;
pub mod srpipe;

pub use error::{Error, Result};
pub use forest::{Forest, ForestConfig, Impurity, LeafModel, SplitMode, Targets, Task};
pub use numerics::{Matrix, PcaBasis, SvdResult};
pub use rotation::RotationModel;
pub use srpipe::{ImageGray, PatchConfig, SrModel};

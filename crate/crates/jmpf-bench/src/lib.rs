//! Shared fixtures for the criterion benchmarks.

use jmpf_core::forest::Targets;
use jmpf_core::srpipe::ImageGray;
use jmpf_core::Matrix;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// Gaussian blobs at hypercube-vertex centers, the regime the rotation is
/// meant to exploit.
pub fn blob_data(n: usize, m: usize, seed: u64) -> (Matrix, Targets) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let num_classes = 1 << m.min(3);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.random_range(0..num_classes);
        let row: Vec<f64> = (0..m)
            .map(|d| {
                let sign = if d < 3 && (class >> d) & 1 == 1 { 1.0 } else { -1.0 };
                sign + rng.random_range(-0.5..0.5)
            })
            .collect();
        rows.push(row);
        labels.push(class);
    }
    (
        Matrix::from_rows(&rows).unwrap(),
        Targets::Classes {
            labels,
            num_classes,
        },
    )
}

pub fn textured_image(w: usize, h: usize, seed: u64) -> ImageGray {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (fx, fy) = (rng.random_range(0.05..0.3), rng.random_range(0.05..0.3));
    let samples = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            128.0 + 80.0 * (fx * x).sin() * (fy * y).cos() + rng.random_range(-5.0..5.0)
        })
        .collect();
    ImageGray::new(w, h, samples).unwrap()
}

//! Iterative quantization: learn an orthonormal rotation that pulls the
//! zero-centered features toward the vertices of the {-1,+1}^m hypercube by
//! alternating a sign quantization step with a Procrustes rotation update.
//! The binary code matrix is transient; only the rotation is kept.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::numerics::{self, Matrix};
use crate::{Error, Result};

pub const DEFAULT_ITQ_ITERATIONS: usize = 50;
const RELATIVE_LOSS_TOLERANCE: f64 = 1e-7;

/// A learned rotation: the training mean, the orthonormal matrix R, and the
/// per-iteration quantization-loss trace (entry 0 is the initial loss).
#[derive(Debug, Clone, PartialEq)]
pub struct RotationModel {
    pub mean: Vec<f64>,
    pub r: Matrix,
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
}

impl RotationModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Apply the rotation: `(x - mean) . R`.
    pub fn rotate(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "rotate: {} cols vs model dim {}",
                x.cols(),
                self.dim()
            )));
        }
        let mut xc = x.clone();
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                xc.set(r, c, x.get(r, c) - self.mean[c]);
            }
        }
        xc.matmul(&self.r)
    }
}

/// Elementwise sign with the `>= 0 -> +1` convention.
pub fn sign_quantize(m: &Matrix) -> Matrix {
    let data = m
        .data()
        .iter()
        .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    Matrix::new(m.rows(), m.cols(), data).expect("sign data is finite")
}

/// Quantization loss `|sgn(XR) - XR|_F^2` for centered X and orthonormal R.
pub fn quantization_loss(x: &Matrix, r: &Matrix) -> Result<f64> {
    let rotated = x.matmul(r)?;
    let b = sign_quantize(&rotated);
    Ok(b.sub(&rotated)?.frobenius_norm().powi(2))
}

/// Seeded random orthonormal initialization: QR factor of a Gaussian matrix,
/// with the R-factor diagonal forced positive for determinism.
fn random_rotation(m: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..m * m).map(|_| rng.sample(StandardNormal)).collect();
    let g = Matrix::new(m, m, data).expect("gaussian sample is finite");
    let qr = g.to_na().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            for i in 0..m {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Matrix::from_na(&q)
}

/// Learn the rotation on `x` (centered internally) with a seeded random
/// orthonormal start.
pub fn itq_fit(x: &Matrix, iterations: usize, seed: u64) -> Result<RotationModel> {
    let r0 = random_rotation(x.cols(), seed);
    itq_fit_from(x, r0, iterations, seed)
}

/// Learn the rotation starting from a caller-supplied orthonormal `r0`.
///
/// Every iteration quantizes the rotated data to the nearest hypercube
/// vertex, then refits the rotation by orthogonal Procrustes; both half
/// steps are exact minimizers, so the loss trace is non-increasing. Stops
/// early once the relative improvement drops below 1e-7.
pub fn itq_fit_from(
    x: &Matrix,
    r0: Matrix,
    iterations: usize,
    seed: u64,
) -> Result<RotationModel> {
    if x.rows() < 2 {
        return Err(Error::OutOfRange("itq_fit needs at least 2 samples".into()));
    }
    if r0.rows() != x.cols() || r0.cols() != x.cols() {
        return Err(Error::ShapeMismatch(format!(
            "itq init: {}x{} vs feature dim {}",
            r0.rows(),
            r0.cols(),
            x.cols()
        )));
    }
    let (xc, mean) = numerics::center(x);
    let first = xc.row(0).to_vec();
    if (1..xc.rows()).all(|r| xc.row(r) == first.as_slice()) {
        return Err(Error::Degenerate(
            "all training rows are identical; rotation undefined",
        ));
    }

    let mut r = r0;
    let mut loss_trace = vec![quantization_loss(&xc, &r)?];
    let mut performed = 0;
    for _ in 0..iterations {
        let rotated = xc.matmul(&r)?;
        let b = sign_quantize(&rotated);
        r = numerics::procrustes_rotation(&b, &xc)?;
        let loss = quantization_loss(&xc, &r)?;
        let prev = *loss_trace.last().unwrap();
        loss_trace.push(loss);
        performed += 1;
        if prev - loss < RELATIVE_LOSS_TOLERANCE * prev.max(1e-300) {
            break;
        }
    }

    Ok(RotationModel {
        mean,
        r,
        loss_trace,
        iterations: performed,
        seed,
    })
}

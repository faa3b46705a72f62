//! Dense linear-algebra kernels: centering, SVD, PCA, ridge projections and
//! the orthogonal Procrustes solver. All functions are pure; heavy
//! factorizations are delegated to nalgebra behind these contracts.

mod matrix;

pub use matrix::Matrix;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Thin SVD, `A = U . diag(S) . V^T`, singular values non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// Orthonormal column basis from PCA, with the training mean it centers by.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// m x k, orthonormal columns.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
}

/// Subtract the per-column mean from every row.
pub fn center(x: &Matrix) -> (Matrix, Vec<f64>) {
    let mean = x.column_means();
    let mut xc = x.clone();
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            xc.set(r, c, x.get(r, c) - mean[c]);
        }
    }
    (xc, mean)
}

/// Thin SVD with a deterministic sign convention: the largest-magnitude
/// entry of each left singular vector is non-negative.
pub fn svd(a: &Matrix) -> SvdResult {
    let na = a.to_na();
    let decomp = na.svd(true, true);
    let mut u = decomp.u.expect("svd with u requested");
    let mut v = decomp.v_t.expect("svd with v_t requested").transpose();
    let s: Vec<f64> = decomp.singular_values.iter().copied().collect();

    for j in 0..u.ncols() {
        let mut best = 0usize;
        for i in 0..u.nrows() {
            if u[(i, j)].abs() > u[(best, j)].abs() {
                best = i;
            }
        }
        if u[(best, j)] < 0.0 {
            for i in 0..u.nrows() {
                u[(i, j)] = -u[(i, j)];
            }
            for i in 0..v.nrows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }

    SvdResult {
        u: Matrix::from_na(&u),
        s,
        v: Matrix::from_na(&v),
    }
}

/// Fit a k-component PCA basis via the symmetric eigendecomposition of the
/// population covariance of the centered data.
pub fn pca_fit(x: &Matrix, k: usize) -> Result<PcaBasis> {
    let m = x.cols();
    if k == 0 || k > m {
        return Err(Error::OutOfRange(format!("pca k={} not in 1..={}", k, m)));
    }
    let (xc, mean) = center(x);
    let xna = xc.to_na();
    let cov = xna.transpose() * &xna / x.rows() as f64;
    let eig = cov.symmetric_eigen();

    // sort eigenpairs by non-increasing eigenvalue
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut components = DMatrix::zeros(m, k);
    let mut explained = Vec::with_capacity(k);
    for (j, &idx) in order.iter().take(k).enumerate() {
        explained.push(eig.eigenvalues[idx].max(0.0));
        let mut best = 0usize;
        for i in 0..m {
            if eig.eigenvectors[(i, idx)].abs() > eig.eigenvectors[(best, idx)].abs() {
                best = i;
            }
        }
        let flip = if eig.eigenvectors[(best, idx)] < 0.0 {
            -1.0
        } else {
            1.0
        };
        for i in 0..m {
            components[(i, j)] = flip * eig.eigenvectors[(i, idx)];
        }
    }

    Ok(PcaBasis {
        mean,
        components: Matrix::from_na(&components),
        explained_variance: explained,
    })
}

/// Project rows of `x` onto the basis: `(x - mean) . components`.
pub fn pca_apply(basis: &PcaBasis, x: &Matrix) -> Result<Matrix> {
    if x.cols() != basis.mean.len() {
        return Err(Error::ShapeMismatch(format!(
            "pca_apply: {} cols vs basis dim {}",
            x.cols(),
            basis.mean.len()
        )));
    }
    let mut xc = x.clone();
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            xc.set(r, c, x.get(r, c) - basis.mean[c]);
        }
    }
    xc.matmul(&basis.components)
}

/// Ridge projection `P = Y^T F (F^T F + lambda I)^-1` mapping feature rows
/// of F (s x d) to target rows of Y (s x q); P is q x d and minimizes
/// `sum_i |y_i - P f_i|^2 + lambda |P|_F^2`.
pub fn ridge_projection(f: &Matrix, y: &Matrix, lambda: f64) -> Result<Matrix> {
    if f.rows() != y.rows() {
        return Err(Error::ShapeMismatch(format!(
            "ridge: {} feature rows vs {} target rows",
            f.rows(),
            y.rows()
        )));
    }
    if lambda < 0.0 {
        return Err(Error::OutOfRange("ridge lambda must be >= 0".into()));
    }
    let fna = f.to_na();
    let d = f.cols();
    let mut gram = fna.transpose() * &fna;
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    // F^T Y is d x q; solve (F^T F + lambda I) Z = F^T Y, then P = Z^T.
    let rhs = fna.transpose() * y.to_na();
    let z = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None if lambda == 0.0 => return Err(Error::Singular("F^T F singular at lambda = 0")),
        None => {
            let pinv = gram
                .svd(true, true)
                .pseudo_inverse(1e-12)
                .map_err(|_| Error::Singular("pseudo-inverse failed"))?;
            pinv * rhs
        }
    };
    Ok(Matrix::from_na(&z.transpose()))
}

/// Orthogonal Procrustes: the orthonormal R minimizing `|B - X R|_F`,
/// i.e. maximizing `tr(B^T X R)`; computed as `V U^T` from the SVD of
/// `B^T X = U diag(S) V^T`.
pub fn procrustes_rotation(b: &Matrix, x: &Matrix) -> Result<Matrix> {
    if b.rows() != x.rows() || b.cols() != x.cols() {
        return Err(Error::ShapeMismatch(format!(
            "procrustes: {}x{} vs {}x{}",
            b.rows(),
            b.cols(),
            x.rows(),
            x.cols()
        )));
    }
    let c = b.transpose().matmul(x)?;
    let dec = svd(&c);
    dec.v.matmul(&dec.u.transpose())
}

//! Generative invariant checks over random inputs.

use jmpf_core::forest::{entropy, info_gain, variance_sum, Impurity, Targets};
use jmpf_core::numerics::{pca_apply, pca_fit, procrustes_rotation};
use jmpf_core::rotation::{itq_fit, sign_quantize};
use jmpf_core::srpipe::{bicubic_resize, psnr, ImageGray};
use jmpf_core::Matrix;
use proptest::prelude::*;

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = Matrix> {
    (rows, cols).prop_flat_map(|(r, c)| {
        proptest::collection::vec(-100.0..100.0f64, r * c)
            .prop_map(move |data| Matrix::new(r, c, data).unwrap())
    })
}

fn frob(m: &Matrix) -> f64 {
    m.frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_bounded_by_log_k(counts in proptest::collection::vec(0usize..50, 2..6)) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let h = entropy(&counts).unwrap();
        let k = counts.iter().filter(|&&c| c > 0).count() as f64;
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= k.ln() + 1e-12);
    }

    #[test]
    fn entropy_split_gain_never_negative(labels in proptest::collection::vec(0usize..3, 4..40), cut in 1usize..3) {
        let n = labels.len();
        let cut = (cut * n / 3).clamp(1, n - 1);
        let targets = Targets::Classes { labels, num_classes: 3 };
        let parent: Vec<usize> = (0..n).collect();
        let left: Vec<usize> = (0..cut).collect();
        let right: Vec<usize> = (cut..n).collect();
        let gain = info_gain(&targets, &parent, &left, &right, Impurity::Entropy).unwrap();
        // concavity of entropy: splitting can never increase impurity
        prop_assert!(gain >= -1e-9);
    }

    #[test]
    fn variance_sum_quadratic_scaling(m in matrix(2..20, 1..4), a in -3.0..3.0f64) {
        let scaled = Matrix::new(
            m.rows(), m.cols(),
            m.data().iter().map(|v| a * v).collect(),
        ).unwrap();
        let (v, vs) = (variance_sum(&m), variance_sum(&scaled));
        prop_assert!((vs - a * a * v).abs() <= 1e-8 * (1.0 + vs.abs() + v.abs()));
    }

    #[test]
    fn rotation_is_an_isometry(m in matrix(3..25, 2..6), seed in 0u64..1000) {
        // all-identical rows are rejected as degenerate; our generator makes
        // that astronomically unlikely but guard anyway
        prop_assume!(m.row(0) != m.row(1));
        let model = itq_fit(&m, 10, seed).unwrap();
        let rotated = model.rotate(&m).unwrap();
        // distances between rows survive the centering + rotation
        for i in 0..m.rows().min(6) {
            for j in i + 1..m.rows().min(6) {
                let d0: f64 = m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
                let d1: f64 = rotated.row(i).iter().zip(rotated.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
                prop_assert!((d0.sqrt() - d1.sqrt()).abs() < 1e-8 * (1.0 + d0.sqrt()));
            }
        }
    }

    #[test]
    fn sign_quantize_is_plus_minus_one(m in matrix(1..10, 1..6)) {
        let b = sign_quantize(&m);
        prop_assert!(b.data().iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn procrustes_result_is_orthonormal(b in matrix(4..20, 2..4)) {
        let x = Matrix::new(
            b.rows(), b.cols(),
            b.data().iter().map(|v| v * 0.7 + 1.3).collect(),
        ).unwrap();
        let bq = sign_quantize(&b);
        let r = procrustes_rotation(&bq, &x).unwrap();
        let rtr = r.transpose().matmul(&r).unwrap();
        let eye = Matrix::identity(r.cols());
        prop_assert!(frob(&rtr.sub(&eye).unwrap()) < 1e-9);
    }

    #[test]
    fn pca_projection_never_grows_energy(m in matrix(4..20, 2..5), k in 1usize..5) {
        let k = k.min(m.cols());
        let basis = pca_fit(&m, k).unwrap();
        let proj = pca_apply(&basis, &m).unwrap();
        let mut centered = m.clone();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                centered.set(r, c, m.get(r, c) - basis.mean[c]);
            }
        }
        prop_assert!(frob(&proj) <= frob(&centered) + 1e-9);
    }

    #[test]
    fn bicubic_preserves_constants(w in 4usize..16, h in 4usize..16, v in 0.0..255.0f64, ow in 4usize..24, oh in 4usize..24) {
        let img = ImageGray::constant(w, h, v);
        let out = bicubic_resize(&img, ow, oh).unwrap();
        prop_assert!(out.samples.iter().all(|s| (s - v).abs() < 1e-9));
    }

    #[test]
    fn psnr_is_symmetric(w in 5usize..12, h in 5usize..12, seed in 0u64..100) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let a = ImageGray::new(w, h, (0..w * h).map(|_| rng.random_range(0.0..255.0)).collect()).unwrap();
        let b = ImageGray::new(w, h, (0..w * h).map(|_| rng.random_range(0.0..255.0)).collect()).unwrap();
        let p1 = psnr(&a, &b, 0).unwrap();
        let p2 = psnr(&b, &a, 0).unwrap();
        prop_assert!((p1 - p2).abs() < 1e-12);
    }
}

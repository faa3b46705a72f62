use super::*;
use approx::assert_abs_diff_eq;

fn cfg_class(mode: SplitMode, seed: u64) -> ForestConfig {
    ForestConfig {
        num_candidate_dims: 2,
        ..ForestConfig::classification(5, mode, seed)
    }
}

/// Four classes at the quadrants of {-1,1}^2 plus small noise.
fn quadrant_data(n_per_class: usize, noise: f64, seed: u64) -> (Matrix, Targets) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let centers = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            rows.push(vec![
                c[0] + rng.random_range(-noise..noise),
                c[1] + rng.random_range(-noise..noise),
            ]);
            labels.push(k);
        }
    }
    (
        Matrix::from_rows(&rows).unwrap(),
        Targets::Classes {
            labels,
            num_classes: 4,
        },
    )
}

#[test]
fn entropy_examples() {
    assert_abs_diff_eq!(entropy(&[8, 0]).unwrap(), 0.0);
    assert_abs_diff_eq!(entropy(&[4, 4]).unwrap(), 2f64.ln(), epsilon = 1e-12);
    let expected = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
    assert_abs_diff_eq!(entropy(&[3, 1]).unwrap(), expected, epsilon = 1e-12);
    assert_abs_diff_eq!(entropy(&[3, 1]).unwrap(), 0.562335, epsilon = 1e-6);
    assert!(entropy(&[0, 0]).is_err());
}

#[test]
fn variance_sum_examples() {
    let constant = Matrix::from_rows(&vec![vec![3.0, 3.0]; 5]).unwrap();
    assert_abs_diff_eq!(variance_sum(&constant), 0.0);

    let scalar = Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
    assert_abs_diff_eq!(variance_sum(&scalar), 1.0, epsilon = 1e-12);
}

#[test]
fn variance_sum_matches_covariance_trace_oracle() {
    let mut rng = ChaCha12Rng::seed_from_u64(61);
    let data: Vec<f64> = (0..300).map(|_| rng.random_range(-3.0..3.0)).collect();
    let m = Matrix::new(100, 3, data).unwrap();

    // oracle: trace of the population covariance matrix
    let means = m.column_means();
    let mut trace = 0.0;
    for c in 0..3 {
        let mut acc = 0.0;
        for r in 0..100 {
            acc += (m.get(r, c) - means[c]).powi(2);
        }
        trace += acc / 100.0;
    }
    assert_abs_diff_eq!(variance_sum(&m), trace, epsilon = 1e-9);
}

#[test]
fn gaussian_entropy_printed_form() {
    // unit population variance in one dimension
    let t = Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
    let v = gaussian_entropy(&t, 0.0).unwrap();
    let expected = 0.5 * (1.0 - (2.0 * std::f64::consts::PI).ln());
    assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
    assert_abs_diff_eq!(v, -0.418939, epsilon = 1e-6);
}

#[test]
fn gaussian_entropy_scaling_shift() {
    let t = Matrix::from_rows(&[vec![-1.0], vec![0.5], vec![1.5]]).unwrap();
    let scaled = Matrix::from_rows(&[vec![-2.0], vec![1.0], vec![3.0]]).unwrap();
    let a = gaussian_entropy(&t, 0.0).unwrap();
    let b = gaussian_entropy(&scaled, 0.0).unwrap();
    assert_abs_diff_eq!(b - a, 0.5 * 4f64.ln(), epsilon = 1e-12);
}

#[test]
fn gaussian_entropy_rank_deficient_is_finite() {
    // two perfectly correlated dimensions
    let t = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
    let v = gaussian_entropy(&t, 1e-9).unwrap();
    assert!(v.is_finite());
}

#[test]
fn info_gain_examples() {
    let targets = Targets::Classes {
        labels: vec![0, 0, 0, 0, 1, 1, 1, 1],
        num_classes: 2,
    };
    let parent: Vec<usize> = (0..8).collect();

    // perfect split: IG = ln 2
    let ig = info_gain(&targets, &parent, &[0, 1, 2, 3], &[4, 5, 6, 7], Impurity::Entropy)
        .unwrap();
    assert_abs_diff_eq!(ig, 2f64.ln(), epsilon = 1e-12);

    // children with the parent's class proportions: IG = 0
    let ig = info_gain(&targets, &parent, &[0, 1, 4, 5], &[2, 3, 6, 7], Impurity::Entropy)
        .unwrap();
    assert_abs_diff_eq!(ig, 0.0, epsilon = 1e-12);

    assert!(split_score(&targets, &[], &parent, Impurity::Entropy).is_err());
}

#[test]
fn info_gain_nonnegative_for_random_splits() {
    let mut rng = ChaCha12Rng::seed_from_u64(67);
    for _ in 0..200 {
        let n = rng.random_range(4..40);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let targets = Targets::Classes {
            labels,
            num_classes: 3,
        };
        let parent: Vec<usize> = (0..n).collect();
        let cut = rng.random_range(1..n);
        let ig = info_gain(
            &targets,
            &parent,
            &parent[..cut],
            &parent[cut..],
            Impurity::Entropy,
        )
        .unwrap();
        assert!(ig >= -1e-12);
    }
}

#[test]
fn best_split_jmpf_separating_dimension() {
    // class A strictly above zero on dim 1, class B strictly below
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..10 {
        rows.push(vec![0.1 * i as f64 - 0.5, 0.2 + 0.05 * i as f64]);
        labels.push(0);
        rows.push(vec![0.1 * i as f64 - 0.5, -0.2 - 0.05 * i as f64]);
        labels.push(1);
    }
    let x = Matrix::from_rows(&rows).unwrap();
    let targets = Targets::Classes {
        labels,
        num_classes: 2,
    };
    let config = ForestConfig {
        num_candidate_dims: 2, // both dims are candidates
        mode: SplitMode::Jmpf,
        ..ForestConfig::classification(1, SplitMode::Jmpf, 0)
    };
    let node: Vec<usize> = (0..x.rows()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    match best_split(&x, &targets, &node, &config, &mut rng).unwrap() {
        SplitChoice::Split { dim, threshold, gain } => {
            assert_eq!(dim, 1);
            assert_eq!(threshold, 0.0);
            assert_abs_diff_eq!(gain, 2f64.ln(), epsilon = 1e-12);
        }
        SplitChoice::NoSplit => panic!("expected a split"),
    }
}

#[test]
fn best_split_identical_samples_is_nosplit() {
    let x = Matrix::from_rows(&vec![vec![1.0, 2.0]; 8]).unwrap();
    let targets = Targets::Classes {
        labels: vec![0, 1, 0, 1, 0, 1, 0, 1],
        num_classes: 2,
    };
    let node: Vec<usize> = (0..8).collect();
    for mode in [SplitMode::Standard, SplitMode::Jmpf] {
        let config = cfg_class(mode, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert_eq!(
            best_split(&x, &targets, &node, &config, &mut rng).unwrap(),
            SplitChoice::NoSplit
        );
    }
}

#[test]
fn single_class_training_gives_point_mass_leaves() {
    let (x, _) = quadrant_data(10, 0.3, 71);
    let targets = Targets::Classes {
        labels: vec![2; x.rows()],
        num_classes: 4,
    };
    let forest = train_forest(&x, &targets, &cfg_class(SplitMode::Standard, 2)).unwrap();
    forest.for_each_node(|node| {
        if let Node::Leaf(LeafModel::Histogram(h)) = node {
            assert_eq!(h[2], 1.0);
            assert_abs_diff_eq!(h.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    });
}

#[test]
fn jmpf_perfect_on_quadrant_vertex_data() {
    let (x, targets) = quadrant_data(25, 0.1, 73);
    let forest = train_forest(&x, &targets, &cfg_class(SplitMode::Jmpf, 3)).unwrap();
    let Targets::Classes { labels, .. } = &targets else {
        unreachable!()
    };
    for (i, &label) in labels.iter().enumerate() {
        assert_eq!(forest.predict_class(x.row(i)).unwrap(), label);
    }
}

#[test]
fn jmpf_thresholds_are_exactly_zero() {
    let (x, targets) = quadrant_data(20, 0.4, 79);
    let forest = train_forest(&x, &targets, &cfg_class(SplitMode::Jmpf, 4)).unwrap();
    let mut splits = 0;
    forest.for_each_node(|node| {
        if let Node::Split { threshold, .. } = node {
            assert_eq!(*threshold, 0.0);
            splits += 1;
        }
    });
    assert!(splits > 0);
}

#[test]
fn depth_budget_is_respected() {
    let (x, targets) = quadrant_data(30, 0.8, 83);
    let config = ForestConfig {
        max_depth: 3,
        ..cfg_class(SplitMode::Standard, 5)
    };
    let forest = train_forest(&x, &targets, &config).unwrap();
    for tree in &forest.trees {
        assert!(tree.depth() <= 3);
    }
}

#[test]
fn constant_regression_target_predicts_constant() {
    let (x, _) = quadrant_data(10, 0.5, 89);
    let targets = Targets::Values(Matrix::from_rows(&vec![vec![4.25]; 40]).unwrap());
    let forest =
        train_forest(&x, &targets, &ForestConfig::regression(3, SplitMode::Standard, 6)).unwrap();
    for i in 0..x.rows() {
        let pred = forest.predict_value(x.row(i)).unwrap();
        assert_abs_diff_eq!(pred[0], 4.25, epsilon = 1e-12);
    }
}

#[test]
fn single_tree_forest_equals_tree_prediction() {
    let (x, targets) = quadrant_data(15, 0.3, 97);
    let config = ForestConfig {
        num_trees: 1,
        ..cfg_class(SplitMode::Standard, 7)
    };
    let forest = train_forest(&x, &targets, &config).unwrap();
    for i in 0..x.rows() {
        let leaf = forest.trees[0].route(x.row(i));
        let LeafModel::Histogram(h) = leaf else {
            panic!()
        };
        assert_eq!(forest.class_probabilities(x.row(i)).unwrap(), *h);
    }
}

#[test]
fn averaged_argmax_matches_exhaustive_oracle() {
    let (x, targets) = quadrant_data(12, 0.6, 101);
    let config = ForestConfig {
        num_trees: 3,
        ..cfg_class(SplitMode::Standard, 8)
    };
    let forest = train_forest(&x, &targets, &config).unwrap();
    for i in 0..x.rows() {
        // oracle: enumerate every (tree, class) pair and sum by class
        let mut sums = [0.0; 4];
        for tree in &forest.trees {
            let LeafModel::Histogram(h) = tree.route(x.row(i)) else {
                panic!()
            };
            for (k, sum) in sums.iter_mut().enumerate() {
                *sum += h[k];
            }
        }
        let mut oracle = 0usize;
        for k in 1..4 {
            if sums[k] > sums[oracle] {
                oracle = k;
            }
        }
        assert_eq!(forest.predict_class(x.row(i)).unwrap(), oracle);
    }
}

#[test]
fn agreement_gives_probability_one() {
    let (x, _) = quadrant_data(10, 0.2, 103);
    let targets = Targets::Classes {
        labels: vec![1; 40],
        num_classes: 3,
    };
    let forest = train_forest(&x, &targets, &cfg_class(SplitMode::Standard, 9)).unwrap();
    let probs = forest.class_probabilities(x.row(0)).unwrap();
    assert_abs_diff_eq!(probs[1], 1.0, epsilon = 1e-12);
    assert_eq!(forest.predict_class(x.row(0)).unwrap(), 1);
}

#[test]
fn training_is_reproducible() {
    let (x, targets) = quadrant_data(20, 0.5, 107);
    let a = train_forest(&x, &targets, &cfg_class(SplitMode::Standard, 10)).unwrap();
    let b = train_forest(&x, &targets, &cfg_class(SplitMode::Standard, 10)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ridge_leaves_require_positive_lambda() {
    let (x, _) = quadrant_data(10, 0.5, 109);
    let targets = Targets::Values(Matrix::from_rows(&vec![vec![1.0, 2.0]; 40]).unwrap());
    let config = ForestConfig {
        lambda: 0.0,
        ..ForestConfig::ridge_leaves(2, 0.1, 11)
    };
    assert!(train_forest(&x, &targets, &config).is_err());
}

#[test]
fn ridge_leaf_forest_learns_linear_map() {
    let mut rng = ChaCha12Rng::seed_from_u64(113);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let x = Matrix::from_rows(&rows).unwrap();
    // target is the linear map y = (2a - b, a + 3b)
    let targets_m = Matrix::from_rows(
        &rows
            .iter()
            .map(|r| vec![2.0 * r[0] - r[1], r[0] + 3.0 * r[1]])
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let targets = Targets::Values(targets_m.clone());
    let forest = train_forest(&x, &targets, &ForestConfig::ridge_leaves(5, 1e-6, 12)).unwrap();
    for i in 0..x.rows() {
        let pred = forest.predict_value(x.row(i)).unwrap();
        assert_abs_diff_eq!(pred[0], targets_m.get(i, 0), epsilon = 1e-2);
        assert_abs_diff_eq!(pred[1], targets_m.get(i, 1), epsilon = 1e-2);
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let (x, targets) = quadrant_data(10, 0.4, 127);
    let forest = train_forest(&x, &targets, &cfg_class(SplitMode::Standard, 13)).unwrap();
    assert!(forest.predict_class(&[0.0, 0.0, 0.0]).is_err());
}

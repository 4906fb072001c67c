mod common;

use common::{correlation, planted_mixture};
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::seq::SliceRandom;
use stereocomfort::spatial::{fit_spatial_filter, scatter_matrices, solve_generalized};
use stereocomfort::{ConditionLabel, LabeledEpochSet, TimeWindow};

const FIT: TimeWindow = TimeWindow::new(0.0, 1.0);

fn weights_dmatrix(w: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[[i, j]])
}

#[test]
fn first_virtual_channel_recovers_the_planted_source() {
    let mix = planted_mixture(11, 200, 16);
    let model = fit_spatial_filter(&mix.set, FIT, 5).unwrap();
    let w1 = model.weights.column(0);
    let (mut virt, mut truth) = (Vec::new(), Vec::new());
    for (e, s) in mix.set.epochs.iter().zip(&mix.sources) {
        virt.extend(w1.dot(&e.data).iter());
        truth.extend(s);
    }
    let r = correlation(&virt, &truth).abs();
    assert!(r > 0.95, "correlation {r}");
}

#[test]
fn generalized_eigen_residual_is_tiny() {
    let mix = planted_mixture(12, 120, 16);
    let sc = scatter_matrices(&mix.set, FIT).unwrap();
    let (w, lambdas) = solve_generalized(&sc.between, &sc.noise_regularized, 16).unwrap();
    let w = weights_dmatrix(&w);
    let scale = sc.between.norm().max(sc.noise_regularized.norm());
    for (k, &l) in lambdas.iter().enumerate() {
        let v = w.column(k);
        let resid = &sc.between * v - (&sc.noise_regularized * v) * l;
        assert!(resid.norm() / (scale * v.norm()) < 1e-8, "pair {k}");
    }
    assert!(lambdas.windows(2).all(|p| p[0] >= p[1]));
}

#[test]
fn filters_whiten_the_regularized_noise() {
    let mix = planted_mixture(13, 120, 12);
    let sc = scatter_matrices(&mix.set, FIT).unwrap();
    let (w, _) = solve_generalized(&sc.between, &sc.noise_regularized, 12).unwrap();
    let w = weights_dmatrix(&w);
    let gram = w.transpose() * &sc.noise_regularized * &w;
    assert!((gram - DMatrix::identity(12, 12)).amax() < 1e-9);
}

#[test]
fn patterns_have_unit_activation() {
    // A = N W is a left inverse of Wᵀ: each pattern drives only its own
    // virtual channel, with unit gain.
    let mix = planted_mixture(14, 120, 16);
    let sc = scatter_matrices(&mix.set, FIT).unwrap();
    let model = fit_spatial_filter(&mix.set, FIT, 5).unwrap();
    let w = weights_dmatrix(&model.weights);
    let patterns = &sc.noise_regularized * &w;
    let activation = w.transpose() * &patterns;
    assert!((activation - DMatrix::identity(5, 5)).amax() < 1e-9);
    // the dominant pattern points along the planted mixing vector
    let a: Vec<f64> = patterns.column(0).iter().copied().collect();
    assert!(correlation(&a, mix.pattern.as_slice().unwrap()).abs() > 0.95);
}

#[test]
fn uniform_rescaling_scales_weights_only() {
    let mix = planted_mixture(15, 100, 10);
    let base = fit_spatial_filter(&mix.set, FIT, 4).unwrap();
    let scaled_set = mix.set.with_epochs(
        mix.set
            .epochs
            .iter()
            .map(|e| stereocomfort::Epoch {
                data: &e.data * 1000.0,
                ..e.clone()
            })
            .collect(),
    );
    let scaled = fit_spatial_filter(&scaled_set, FIT, 4).unwrap();
    for (a, b) in base.eigenvalues.iter().zip(&scaled.eigenvalues) {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
    let diff = (&base.weights - &(&scaled.weights * 1000.0)).mapv(f64::abs);
    assert!(diff.iter().copied().fold(0.0, f64::max) < 1e-8 * base.weights.mapv(f64::abs).sum());
}

fn shuffled_labels(set: &LabeledEpochSet, seed: u64) -> LabeledEpochSet {
    let mut labels = set.labels();
    labels.shuffle(&mut common::rng(seed));
    set.with_epochs(
        set.epochs
            .iter()
            .zip(labels)
            .map(|(e, label)| stereocomfort::Epoch { label, ..e.clone() })
            .collect(),
    )
}

#[test]
fn label_permutation_null_without_a_source() {
    // Pure noise: the leading eigenvalue under the true labels should look
    // like any label permutation.
    let mut r = common::rng(16);
    let data: Vec<_> = (0..100)
        .map(|i| (common::gaussian(&mut r, 8, 128), common::alternating_label(i)))
        .collect();
    let set = common::epoch_set(128.0, FIT, data);
    let observed = fit_spatial_filter(&set, FIT, 1).unwrap().eigenvalues[0];
    let n_perm = 199;
    let at_least = (0..n_perm)
        .filter(|&k| fit_spatial_filter(&shuffled_labels(&set, k), FIT, 1).unwrap().eigenvalues[0] >= observed)
        .count();
    let p = (at_least + 1) as f64 / (n_perm + 1) as f64;
    assert!(p > 0.05, "p = {p}");

    // and with a planted source the true labels are extreme
    let mix = planted_mixture(17, 100, 8);
    let observed = fit_spatial_filter(&mix.set, FIT, 1).unwrap().eigenvalues[0];
    let beaten = (0..50)
        .filter(|&k| fit_spatial_filter(&shuffled_labels(&mix.set, k), FIT, 1).unwrap().eigenvalues[0] >= observed)
        .count();
    assert_eq!(beaten, 0);
}

#[test]
fn needs_both_classes() {
    let mix = planted_mixture(18, 20, 4);
    let only_c = mix.set.with_epochs(
        mix.set
            .epochs
            .iter()
            .filter(|e| e.label == ConditionLabel::Comfort)
            .cloned()
            .collect(),
    );
    assert!(matches!(
        fit_spatial_filter(&only_c, FIT, 2),
        Err(stereocomfort::Error::ClassTooSmall { .. })
    ));
}

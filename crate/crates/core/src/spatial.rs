//! Supervised spatial filtering for ERPs.
//!
//! Filters maximize the energy of the class-difference ERP relative to the
//! single-trial residual noise: the generalized symmetric eigenproblem
//! `S w = λ N w`, with `S = D Dᵀ` for the difference of class-mean ERPs `D`
//! and `N` the pooled covariance of epochs minus their class mean.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{ConditionLabel, LabeledEpochSet, TimeWindow};
use crate::error::{Error, Result};

/// Trace-scaled ridge added to the residual covariance.
pub const NOISE_RIDGE: f64 = 1e-6;

/// Fitted projection from recorded channels to virtual channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialFilterModel {
    /// `[n_channels × n_virtual]`, columns by descending eigenvalue.
    pub weights: Array2<f64>,
    pub eigenvalues: Vec<f64>,
    pub channel_names: Vec<String>,
}

/// Between-class and (regularized) residual scatter on the fit window.
#[derive(Debug, Clone)]
pub struct ScatterMatrices {
    pub between: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub noise_regularized: DMatrix<f64>,
}

fn class_mean(set: &LabeledEpochSet, label: ConditionLabel, range: std::ops::Range<usize>) -> Array2<f64> {
    let mut acc = Array2::zeros((set.n_channels(), range.len()));
    let mut n = 0usize;
    for e in set.epochs.iter().filter(|e| e.label == label) {
        acc += &e.data.slice(s![.., range.clone()]);
        n += 1;
    }
    acc / n as f64
}

fn to_dmatrix(a: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn scatter_matrices(train: &LabeledEpochSet, fit_window: TimeWindow) -> Result<ScatterMatrices> {
    train.check_consistent()?;
    for label in [ConditionLabel::Comfort, ConditionLabel::NoComfort] {
        let count = train.count(label);
        if count < 2 {
            return Err(Error::ClassTooSmall { label, count, needed: 2 });
        }
    }
    if train.count(ConditionLabel::Flat) > 0 {
        return Err(Error::FlatLabel);
    }
    let range = train.window.sub_range(&fit_window, train.sample_rate_hz)?;
    let n_w = range.len() as f64;
    let n_ch = train.n_channels();

    let mean_c = class_mean(train, ConditionLabel::Comfort, range.clone());
    let mean_nc = class_mean(train, ConditionLabel::NoComfort, range.clone());
    let diff = &mean_c - &mean_nc;
    let between = diff.dot(&diff.t()) / n_w;

    let mut noise = Array2::<f64>::zeros((n_ch, n_ch));
    for e in &train.epochs {
        let mean = if e.label == ConditionLabel::Comfort { &mean_c } else { &mean_nc };
        let resid = &e.data.slice(s![.., range.clone()]) - mean;
        noise += &resid.dot(&resid.t());
    }
    noise /= n_w * train.len() as f64;
    // exact symmetry
    let noise = (&noise + &noise.t()) / 2.0;

    let between = to_dmatrix(between.view());
    let noise = to_dmatrix(noise.view());
    let ridge = NOISE_RIDGE * noise.trace() / n_ch as f64;
    let noise_regularized = &noise + DMatrix::identity(n_ch, n_ch) * ridge;
    Ok(ScatterMatrices {
        between,
        noise,
        noise_regularized,
    })
}

/// Fits `n_virtual` filters on `fit_window` of the training epochs.
pub fn fit_spatial_filter(
    train: &LabeledEpochSet,
    fit_window: TimeWindow,
    n_virtual: usize,
) -> Result<SpatialFilterModel> {
    let n_ch = train.n_channels();
    if n_virtual == 0 || n_virtual > n_ch {
        return Err(Error::TooManyVirtualChannels {
            requested: n_virtual,
            available: n_ch,
        });
    }
    let sc = scatter_matrices(train, fit_window)?;
    let (weights, eigenvalues) = solve_generalized(&sc.between, &sc.noise_regularized, n_virtual)?;
    Ok(SpatialFilterModel {
        weights,
        eigenvalues,
        channel_names: train.channel_names.clone(),
    })
}

/// Top `k` eigenpairs of `S w = λ N w` for symmetric `S` and SPD `N`, with
/// `wᵀ N w = 1`. Reduced to a standard problem through the Cholesky factor
/// of `N`.
pub fn solve_generalized(
    between: &DMatrix<f64>,
    noise: &DMatrix<f64>,
    k: usize,
) -> Result<(Array2<f64>, Vec<f64>)> {
    let n = noise.nrows();
    let chol = noise.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let l = chol.l();
    // M = L⁻¹ S L⁻ᵀ
    let linv_s = l
        .solve_lower_triangular(between)
        .ok_or(Error::SingularCovariance)?;
    let m = l
        .solve_lower_triangular(&linv_s.transpose())
        .ok_or(Error::SingularCovariance)?;
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lt = l.transpose();
    let mut weights = Array2::zeros((n, k));
    let mut values = Vec::with_capacity(k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(idx).into_owned();
        let mut w = lt.solve_upper_triangular(&v).ok_or(Error::SingularCovariance)?;
        let scale = w.amax();
        if let Some(first) = w.iter().copied().find(|c| c.abs() > 1e-12 * scale) {
            if first < 0.0 {
                w.neg_mut();
            }
        }
        for i in 0..n {
            weights[[i, col]] = w[i];
        }
        values.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok((weights, values))
}

impl SpatialFilterModel {
    pub fn n_virtual(&self) -> usize {
        self.weights.ncols()
    }

    /// `weightsᵀ · data` for a `[n_channels × n_samples]` block.
    pub fn project(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        if data.nrows() != self.weights.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.nrows(),
                got: data.nrows(),
            });
        }
        Ok(self.weights.t().dot(&data))
    }
}

/// Projects an epoch recorded on `channel_names` onto the virtual channels.
pub fn apply_spatial_filter(
    model: &SpatialFilterModel,
    channel_names: &[String],
    data: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    if channel_names != model.channel_names.as_slice() {
        return Err(Error::MontageMismatch {
            expected: model.channel_names.clone(),
            actual: channel_names.to_vec(),
        });
    }
    model.project(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Epoch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noisy_set(n_ch: usize, per_class: usize, signal_ch: usize, seed: u64) -> LabeledEpochSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_s = 64;
        let epochs = (0..2 * per_class)
            .map(|i| {
                let label = if i % 2 == 0 { ConditionLabel::Comfort } else { ConditionLabel::NoComfort };
                let amp = if label == ConditionLabel::Comfort { 2.0 } else { -2.0 };
                let data = Array2::from_shape_fn((n_ch, n_s), |(c, t)| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    let sig = if c == signal_ch { amp * (t as f64 / 10.0).sin() } else { 0.0 };
                    sig + noise
                });
                Epoch { data, label, onset_sample: i * 1000 }
            })
            .collect();
        LabeledEpochSet {
            sample_rate_hz: 64.0,
            channel_names: (0..n_ch).map(|i| format!("ch{i}")).collect(),
            window: TimeWindow::new(0.0, 1.0),
            epochs,
            provenance: String::new(),
            rejected_indices: vec![],
        }
    }

    #[test]
    fn first_filter_targets_the_discriminant_channel() {
        let set = noisy_set(8, 400, 0, 3);
        let m = fit_spatial_filter(&set, set.window, 3).unwrap();
        let w = m.weights.column(0);
        let cos = w[0].abs() / w.dot(&w).sqrt();
        assert!(cos > 0.99, "cos {cos}");
        assert!(m.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
        assert!(m.eigenvalues.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn identity_noise_gives_exact_unit_vector() {
        // rank-structured S with N = I
        let mut s = DMatrix::zeros(6, 6);
        s[(0, 0)] = 5.0;
        let n = DMatrix::identity(6, 6);
        let (w, l) = solve_generalized(&s, &n, 2).unwrap();
        assert!((w[[0, 0]] - 1.0).abs() < 1e-12);
        assert!((l[0] - 5.0).abs() < 1e-12);
        assert!(l[1].abs() < 1e-12);
    }

    #[test]
    fn columns_are_noise_normalized_and_decorrelated() {
        let set = noisy_set(6, 100, 2, 11);
        let m = fit_spatial_filter(&set, set.window, 5).unwrap();
        let sc = scatter_matrices(&set, set.window).unwrap();
        let w = to_dmatrix(m.weights.view());
        let proj = w.transpose() * &sc.noise_regularized * &w;
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((proj[(i, j)] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn errors() {
        let set = noisy_set(4, 10, 0, 1);
        assert!(matches!(
            fit_spatial_filter(&set, set.window, 5),
            Err(Error::TooManyVirtualChannels { requested: 5, available: 4 })
        ));
        let mut one_class = set.clone();
        one_class.epochs.retain(|e| e.label == ConditionLabel::Comfort);
        assert!(matches!(
            fit_spatial_filter(&one_class, set.window, 2),
            Err(Error::ClassTooSmall { label: ConditionLabel::NoComfort, .. })
        ));
        let m = fit_spatial_filter(&set, set.window, 2).unwrap();
        let wrong: Vec<String> = (0..4).map(|i| format!("x{i}")).collect();
        assert!(matches!(
            apply_spatial_filter(&m, &wrong, set.epochs[0].data.view()),
            Err(Error::MontageMismatch { .. })
        ));
    }

    #[test]
    fn projection_is_linear() {
        let set = noisy_set(5, 20, 1, 2);
        let m = fit_spatial_filter(&set, set.window, 3).unwrap();
        let names = &set.channel_names;
        let x = &set.epochs[0].data;
        let zero = apply_spatial_filter(&m, names, Array2::zeros(x.dim()).view()).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let y1 = apply_spatial_filter(&m, names, x.view()).unwrap();
        let y2 = apply_spatial_filter(&m, names, (x * 2.0).view()).unwrap();
        assert!(y1.iter().zip(y2.iter()).all(|(a, b)| (2.0 * a - b).abs() < 1e-12));
    }
}

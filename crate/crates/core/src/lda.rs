//! Shrinkage linear discriminant analysis.
//!
//! The pooled within-class covariance is shrunk toward `ν·I` (`ν` the mean
//! eigenvalue) with the analytic Ledoit-Wolf intensity, which keeps the
//! estimate well conditioned with 160 features and ~150 training epochs.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::ConditionLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ShrunkCovariance {
    /// Shrinkage intensity in `[0, 1]`.
    pub lambda: f64,
    /// Scale of the identity target, `trace(S)/p`.
    pub target_scale: f64,
    pub covariance: Array2<f64>,
}

/// Ledoit-Wolf shrinkage of the empirical covariance `S = XᵀX/n` of
/// already-centered rows.
pub fn ledoit_wolf(centered: ArrayView2<f64>) -> Result<ShrunkCovariance> {
    let (n, p) = centered.dim();
    if p == 0 {
        return Err(Error::Empty);
    }
    if n < 2 {
        return Err(Error::TooFewEpochs { needed: 2, got: n });
    }
    let nf = n as f64;
    let emp = centered.t().dot(&centered) / nf;
    let nu = emp.diag().sum() / p as f64;

    // d² = ‖S − νI‖²_F / p
    let mut d2 = emp.iter().map(|v| v * v).sum::<f64>();
    d2 += -2.0 * nu * emp.diag().sum() + p as f64 * nu * nu;
    d2 /= p as f64;
    // b̄² = Σ_k ‖x_k x_kᵀ − S‖²_F / (n² p) = (Σ_k ‖x_k‖⁴ / n − ‖S‖²_F) / (n p)
    let fourth: f64 = centered
        .axis_iter(Axis(0))
        .map(|row| row.dot(&row).powi(2))
        .sum();
    let frob2 = emp.iter().map(|v| v * v).sum::<f64>();
    let b2 = ((fourth / nf - frob2) / (nf * p as f64)).max(0.0);

    let lambda = if d2 > 0.0 { (b2.min(d2) / d2).clamp(0.0, 1.0) } else { 1.0 };
    Ok(shrink(emp, nu, lambda))
}

fn shrink(mut emp: Array2<f64>, nu: f64, lambda: f64) -> ShrunkCovariance {
    emp *= 1.0 - lambda;
    emp.diag_mut().iter_mut().for_each(|d| *d += lambda * nu);
    ShrunkCovariance {
        lambda,
        target_scale: nu,
        covariance: emp,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Shrinkage {
    #[default]
    LedoitWolf,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMeans {
    pub comfort: Vec<f64>,
    pub no_comfort: Vec<f64>,
}

/// Linear decision rule `sign(wᵀx + b)`; positive means Comfort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub shrinkage_lambda: f64,
    pub class_means: ClassMeans,
}

pub fn fit_lda(features: ArrayView2<f64>, labels: &[ConditionLabel]) -> Result<LdaModel> {
    fit_lda_with(features, labels, Shrinkage::LedoitWolf)
}

/// Fits on rows of `features` (one epoch per row).
pub fn fit_lda_with(
    features: ArrayView2<f64>,
    labels: &[ConditionLabel],
    shrinkage: Shrinkage,
) -> Result<LdaModel> {
    let (n, p) = features.dim();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if p == 0 {
        return Err(Error::Empty);
    }
    if labels.contains(&ConditionLabel::Flat) {
        return Err(Error::FlatLabel);
    }
    let idx = |l: ConditionLabel| -> Vec<usize> { (0..n).filter(|&i| labels[i] == l).collect() };
    let (ic, inc) = (idx(ConditionLabel::Comfort), idx(ConditionLabel::NoComfort));
    for (label, ids) in [(ConditionLabel::Comfort, &ic), (ConditionLabel::NoComfort, &inc)] {
        if ids.len() < 2 {
            return Err(Error::ClassTooSmall {
                label,
                count: ids.len(),
                needed: 2,
            });
        }
    }
    let mean_of = |ids: &[usize]| -> Array1<f64> {
        features.select(Axis(0), ids).mean_axis(Axis(0)).expect("non-empty class")
    };
    let (mu_c, mu_nc) = (mean_of(&ic), mean_of(&inc));

    let mut centered = features.to_owned();
    for (i, mut row) in centered.axis_iter_mut(Axis(0)).enumerate() {
        let mu = if labels[i] == ConditionLabel::Comfort { &mu_c } else { &mu_nc };
        row -= mu;
    }

    let cov = match shrinkage {
        Shrinkage::LedoitWolf => ledoit_wolf(centered.view())?,
        Shrinkage::Fixed(lambda) => {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::InvalidConfig(format!("shrinkage {lambda} outside [0, 1]")));
            }
            let emp = centered.t().dot(&centered) / n as f64;
            let nu = emp.diag().sum() / p as f64;
            shrink(emp, nu, lambda)
        }
    };
    if !(cov.target_scale > 0.0) {
        return Err(Error::DegenerateCovariance);
    }

    let diff = &mu_c - &mu_nc;
    let sigma = DMatrix::from_fn(p, p, |i, j| cov.covariance[[i, j]]);
    let rhs = DVector::from_iterator(p, diff.iter().copied());
    let w = sigma
        .cholesky()
        .ok_or(Error::SingularCovariance)?
        .solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularCovariance);
    }
    let weights: Vec<f64> = w.iter().copied().collect();
    let mid = (&mu_c + &mu_nc) / 2.0;
    let bias = -ArrayView1::from(&weights).dot(&mid);

    Ok(LdaModel {
        weights,
        bias,
        shrinkage_lambda: cov.lambda,
        class_means: ClassMeans {
            comfort: mu_c.to_vec(),
            no_comfort: mu_nc.to_vec(),
        },
    })
}

impl LdaModel {
    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision_value(&self, x: ArrayView1<f64>) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(ArrayView1::from(&self.weights).dot(&x) + self.bias)
    }

    /// Comfort iff the decision value is strictly positive.
    pub fn classify(&self, x: ArrayView1<f64>) -> Result<ConditionLabel> {
        Ok(label_for(self.decision_value(x)?))
    }
}

pub fn label_for(decision_value: f64) -> ConditionLabel {
    if decision_value > 0.0 {
        ConditionLabel::Comfort
    } else {
        ConditionLabel::NoComfort
    }
}

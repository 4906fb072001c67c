//! Majority voting over clusters of same-condition trials.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ConditionLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteConfig {
    pub cluster_size: usize,
    pub n_draws: usize,
    pub rng_seed: u64,
}

impl VoteConfig {
    pub fn new(cluster_size: usize, rng_seed: u64) -> Self {
        Self {
            cluster_size,
            n_draws: 10_000,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cluster_size % 2 == 0 {
            return Err(Error::EvenClusterSize(self.cluster_size));
        }
        if self.n_draws == 0 {
            return Err(Error::InvalidConfig("n_draws must be positive".into()));
        }
        Ok(())
    }
}

/// Clustered accuracy with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteEstimate {
    pub cluster_size: usize,
    pub accuracy: f64,
    pub std_error: f64,
    pub n_draws: usize,
}

/// Label held by more than half of `predicted`.
pub fn majority_vote(predicted: &[ConditionLabel]) -> Result<ConditionLabel> {
    if predicted.len() % 2 == 0 {
        return Err(Error::EvenClusterSize(predicted.len()));
    }
    let mut comfort = 0usize;
    for &l in predicted {
        match l {
            ConditionLabel::Comfort => comfort += 1,
            ConditionLabel::NoComfort => {}
            ConditionLabel::Flat => return Err(Error::FlatLabel),
        }
    }
    Ok(if 2 * comfort > predicted.len() {
        ConditionLabel::Comfort
    } else {
        ConditionLabel::NoComfort
    })
}

/// Monte Carlo estimate of majority-vote accuracy over clusters of
/// `cluster_size` distinct same-class test trials. `predictions` holds
/// `(true, predicted)` pairs.
pub fn monte_carlo_cluster_accuracy(
    predictions: &[(ConditionLabel, ConditionLabel)],
    config: &VoteConfig,
) -> Result<VoteEstimate> {
    config.validate()?;
    let n = config.cluster_size;
    let mut by_class: [(ConditionLabel, Vec<ConditionLabel>); 2] = [
        (ConditionLabel::Comfort, Vec::new()),
        (ConditionLabel::NoComfort, Vec::new()),
    ];
    for &(truth, pred) in predictions {
        if !truth.is_classifiable() || !pred.is_classifiable() {
            return Err(Error::FlatLabel);
        }
        let slot = if truth == ConditionLabel::Comfort { 0 } else { 1 };
        by_class[slot].1.push(pred);
    }
    for (label, preds) in &by_class {
        if preds.len() < n {
            return Err(Error::InsufficientTrials {
                label: *label,
                needed: n,
                have: preds.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let total = predictions.len();
    let n_comfort = by_class[0].1.len();
    let mut cluster = Vec::with_capacity(n);
    let mut correct = 0usize;
    for _ in 0..config.n_draws {
        let (truth, preds) = if rng.random_range(0..total) < n_comfort {
            (&by_class[0].0, &by_class[0].1)
        } else {
            (&by_class[1].0, &by_class[1].1)
        };
        cluster.clear();
        cluster.extend(sample(&mut rng, preds.len(), n).iter().map(|i| preds[i]));
        if majority_vote(&cluster)? == *truth {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / config.n_draws as f64;
    Ok(VoteEstimate {
        cluster_size: n,
        accuracy,
        std_error: (accuracy * (1.0 - accuracy) / config.n_draws as f64).sqrt(),
        n_draws: config.n_draws,
    })
}

/// Probability that a strict majority of `n` independent trials, each right
/// with probability `p`, is right. Intended for odd `n`.
pub fn binomial_vote_accuracy(p: f64, n: usize) -> f64 {
    let q = 1.0 - p;
    let mut coef = 1.0f64; // C(n, k)
    let mut total = 0.0;
    for k in 0..=n {
        if 2 * k > n {
            total += coef * p.powi(k as i32) * q.powi((n - k) as i32);
        }
        coef = coef * (n - k) as f64 / (k + 1) as f64;
    }
    total
}

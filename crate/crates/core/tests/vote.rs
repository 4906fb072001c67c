mod common;

use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{Binomial, DiscreteCDF};
use stereocomfort::vote::{binomial_vote_accuracy, monte_carlo_cluster_accuracy, VoteConfig};
use stereocomfort::ConditionLabel;

/// i.i.d. predictions: balanced truth, each correct with probability `p`.
fn stream(p: f64, n: usize, seed: u64) -> Vec<(ConditionLabel, ConditionLabel)> {
    let mut r = common::rng(seed);
    (0..n)
        .map(|i| {
            let truth = common::alternating_label(i);
            let other = if truth == ConditionLabel::Comfort {
                ConditionLabel::NoComfort
            } else {
                ConditionLabel::Comfort
            };
            (truth, if r.random_bool(p) { truth } else { other })
        })
        .collect()
}

#[test]
fn closed_form_matches_binomial_survival() {
    for &p in &[0.51, 0.633, 0.8, 0.95] {
        for n in [1usize, 3, 5, 7, 9, 21] {
            let oracle = Binomial::new(p, n as u64).unwrap().sf((n / 2) as u64);
            assert!((binomial_vote_accuracy(p, n) - oracle).abs() < 1e-12, "p={p} n={n}");
        }
    }
    // exact sums, evaluated independently in rational arithmetic
    let expected = [(3, 0.694794726), (5, 0.737861510), (7, 0.771211135)];
    for (n, v) in expected {
        assert!((binomial_vote_accuracy(0.633, n) - v).abs() < 1e-9, "n={n}");
    }
}

#[test]
fn monte_carlo_agrees_with_closed_form() {
    let predictions = stream(0.633, 200_000, 1);
    for n in [3, 5, 7] {
        let est = monte_carlo_cluster_accuracy(&predictions, &VoteConfig::new(n, 42)).unwrap();
        let exact = binomial_vote_accuracy(0.633, n);
        assert!(
            (est.accuracy - exact).abs() <= 2.0 * est.std_error,
            "n={n}: {} vs {exact} (se {})",
            est.accuracy,
            est.std_error
        );
    }
}

#[test]
fn large_draw_counts_stay_in_the_three_sigma_band() {
    let predictions = stream(0.7, 100_000, 2);
    let cfg = VoteConfig {
        n_draws: 100_000,
        ..VoteConfig::new(5, 3)
    };
    let est = monte_carlo_cluster_accuracy(&predictions, &cfg).unwrap();
    let exact = binomial_vote_accuracy(0.7, 5);
    let sigma = (exact * (1.0 - exact) / 1e5).sqrt();
    assert!((est.accuracy - exact).abs() < 3.0 * sigma);
}

#[test]
fn closed_form_grows_with_cluster_size_above_chance() {
    for k in 1..40 {
        let p = 0.5 + k as f64 / 80.0;
        let accs: Vec<f64> = [1, 3, 5, 7, 9, 11].iter().map(|&n| binomial_vote_accuracy(p, n)).collect();
        assert!(accs.windows(2).all(|w| w[1] > w[0]), "p={p}: {accs:?}");
    }
    assert!((binomial_vote_accuracy(0.5, 7) - 0.5).abs() < 1e-12);
    assert!(binomial_vote_accuracy(0.4, 7) < 0.4);
}

#[test]
fn order_of_predictions_does_not_matter() {
    let predictions = stream(0.633, 20_000, 4);
    let mut shuffled = predictions.clone();
    shuffled.shuffle(&mut common::rng(5));
    let cfg = VoteConfig::new(5, 6);
    let a = monte_carlo_cluster_accuracy(&predictions, &cfg).unwrap();
    let b = monte_carlo_cluster_accuracy(&shuffled, &cfg).unwrap();
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.accuracy - b.accuracy).abs() < 4.0 * se);
}

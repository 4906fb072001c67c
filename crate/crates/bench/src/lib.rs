//! Fixtures shared by the benchmarks.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use stereocomfort::preprocess::EPOCH_WINDOW;
use stereocomfort::stereo::{generate_schedule, ComfortZoneSpec, TrialSchedule};
use stereocomfort::synth::{generate_recording, SynthConfig};
use stereocomfort::{ConditionLabel, Epoch, LabeledEpochSet, SyntheticDataset};

pub fn noise(seed: u64, rows: usize, cols: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(&mut rng))
}

/// Calibrated synthetic session restricted to its first `n_trials` trials.
pub fn session(n_trials: usize) -> SyntheticDataset {
    let schedule = generate_schedule(&ComfortZoneSpec::default(), 1).unwrap();
    let schedule = TrialSchedule {
        trials: schedule.trials[..n_trials].to_vec(),
    };
    generate_recording(&SynthConfig::default().with_seed(1), &schedule).unwrap()
}

/// `n` alternating-label 28-channel epochs of white noise.
pub fn epochs(n: usize) -> LabeledEpochSet {
    let n_s = EPOCH_WINDOW.n_samples(512.0);
    LabeledEpochSet {
        sample_rate_hz: 512.0,
        channel_names: stereocomfort::data::montage_names(),
        window: EPOCH_WINDOW,
        epochs: (0..n)
            .map(|i| Epoch {
                data: noise(i as u64, 28, n_s),
                label: if i % 2 == 0 {
                    ConditionLabel::Comfort
                } else {
                    ConditionLabel::NoComfort
                },
                onset_sample: 4000 * (i + 1),
            })
            .collect(),
        provenance: "bench".into(),
        rejected_indices: Vec::new(),
    }
}

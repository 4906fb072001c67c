#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use stereocomfort::{ConditionLabel, Epoch, LabeledEpochSet, TimeWindow};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

pub fn channel_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("E{i}")).collect()
}

pub fn epoch_set(rate: f64, window: TimeWindow, data: Vec<(Array2<f64>, ConditionLabel)>) -> LabeledEpochSet {
    let n_ch = data.first().map_or(0, |(d, _)| d.nrows());
    LabeledEpochSet {
        sample_rate_hz: rate,
        channel_names: channel_names(n_ch),
        window,
        epochs: data
            .into_iter()
            .enumerate()
            .map(|(i, (data, label))| Epoch {
                data,
                label,
                onset_sample: 1000 * (i + 1),
            })
            .collect(),
        provenance: "test".into(),
        rejected_indices: Vec::new(),
    }
}

pub fn alternating_label(i: usize) -> ConditionLabel {
    if i % 2 == 0 {
        ConditionLabel::Comfort
    } else {
        ConditionLabel::NoComfort
    }
}

/// One latent source with a class-dependent evoked bump plus its own
/// ongoing activity, mixed into every channel through `pattern`, on top of
/// spatially correlated white noise.
pub struct PlantedMixture {
    pub set: LabeledEpochSet,
    pub pattern: Array1<f64>,
    /// Source time course per epoch.
    pub sources: Vec<Vec<f64>>,
}

pub fn planted_mixture(seed: u64, n_epochs: usize, n_ch: usize) -> PlantedMixture {
    let rate = 128.0;
    let window = TimeWindow::new(0.0, 1.0);
    let n_s = window.n_samples(rate);
    let mut r = rng(seed);
    let pattern: Array1<f64> = gaussian(&mut r, n_ch, 1).column(0).mapv(|v| 2.0 * v);
    let mixing = Array2::<f64>::eye(n_ch) + gaussian(&mut r, n_ch, n_ch) * 0.5;
    let bump: Vec<f64> = (0..n_s)
        .map(|k| {
            let t = k as f64 / rate - 0.4;
            (-t * t / (2.0 * 0.1 * 0.1)).exp()
        })
        .collect();
    let mut sources = Vec::with_capacity(n_epochs);
    let mut data = Vec::with_capacity(n_epochs);
    for i in 0..n_epochs {
        let label = alternating_label(i);
        let gain = if label == ConditionLabel::Comfort { 2.0 } else { 0.0 };
        let own = gaussian(&mut r, 1, n_s);
        let s: Vec<f64> = (0..n_s).map(|k| gain * bump[k] + own[[0, k]]).collect();
        let noise = mixing.dot(&gaussian(&mut r, n_ch, n_s));
        let x = Array2::from_shape_fn((n_ch, n_s), |(c, k)| pattern[c] * s[k] + noise[[c, k]]);
        sources.push(s);
        data.push((x, label));
    }
    PlantedMixture {
        set: epoch_set(rate, window, data),
        pattern,
        sources,
    }
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Least-squares fit of `a·sin(ωt) + b·cos(ωt) + c`; returns amplitude and
/// phase (radians, relative to `sin`).
pub fn sinusoid_fit(signal: &[f64], freq_hz: f64, rate: f64, offset: usize) -> (f64, f64) {
    use nalgebra::{DMatrix, DVector};
    let n = signal.len();
    let w = 2.0 * std::f64::consts::PI * freq_hz / rate;
    let design = DMatrix::from_fn(n, 3, |i, j| {
        let t = (i + offset) as f64 * w;
        match j {
            0 => t.sin(),
            1 => t.cos(),
            _ => 1.0,
        }
    });
    let y = DVector::from_column_slice(signal);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .expect("least squares");
    (coef[0].hypot(coef[1]), coef[1].atan2(coef[0]))
}

pub fn median(values: &[f64]) -> f64 {
    stereocomfort::synth::median(values)
}

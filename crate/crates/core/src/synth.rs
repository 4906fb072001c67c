//! Ground-truth synthetic EEG.
//!
//! A recording is the sum of
//! - a Gaussian positive ERP after every C/NC object onset, larger for C,
//!   projected through a centro-parietal topography;
//! - independent pink (1/f) noise on every channel;
//! - eye blinks at Poisson times, weighted toward the frontal electrodes;
//! - large ocular transients (blink topography, either polarity) planted in
//!   a fixed fraction of C/NC trials, for the rejection stage to find.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{
    self, AnnotatedEvent, ConditionLabel, EventMarker, MultichannelRecording, DEFAULT_SAMPLE_RATE_HZ,
};
use crate::error::{Error, Result};
use crate::eval::{self, PipelineConfig};
use crate::stereo::TrialSchedule;

/// Pink-noise scale that puts the offline pipeline near 63% accuracy on the
/// default configuration, found with [`calibrate_noise`].
pub const CALIBRATED_NOISE_SCALE_UV: f64 = 2.94;

/// Approximate scalp positions of [`data::EEG_MONTAGE_28`] on a unit disc,
/// x to the right, y toward the nose.
const MONTAGE_XY: [(f64, f64); 28] = [
    (-0.30, 0.80), (0.30, 0.80),
    (-0.80, 0.55), (-0.40, 0.55), (0.00, 0.55), (0.40, 0.55), (0.80, 0.55),
    (-0.65, 0.28), (-0.22, 0.28), (0.22, 0.28), (0.65, 0.28),
    (-0.50, 0.00), (0.00, 0.00), (0.50, 0.00),
    (-0.65, -0.28), (-0.22, -0.28), (0.22, -0.28), (0.65, -0.28),
    (-0.80, -0.55), (-0.40, -0.55), (0.00, -0.55), (0.40, -0.55), (0.80, -0.55),
    (-0.30, -0.80), (0.30, -0.80),
    (-0.30, -0.95), (0.00, -1.00), (0.30, -0.95),
];

/// Unit-norm centro-parietal topography peaking at Pz.
pub fn default_erp_topography() -> Vec<f64> {
    let w: Vec<f64> = MONTAGE_XY
        .iter()
        .map(|&(x, y)| (-(x * x + (y + 0.45).powi(2)) / (2.0 * 0.45f64.powi(2))).exp())
        .collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.into_iter().map(|v| v / norm).collect()
}

/// Frontal weighting with maximum 1 on AF3/AF4.
pub fn default_blink_topography() -> Vec<f64> {
    let w: Vec<f64> = MONTAGE_XY
        .iter()
        .map(|&(_, y)| (-(1.0 - y).powi(2) / (2.0 * 0.25f64.powi(2))).exp())
        .collect();
    let max = w.iter().copied().fold(0.0, f64::max);
    w.into_iter().map(|v| v / max).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub erp_peak_amplitude_comfort_uv: f64,
    pub erp_peak_amplitude_no_comfort_uv: f64,
    pub erp_latency_s: f64,
    pub erp_width_s: f64,
    /// Unit vector over channels.
    pub source_topography: Vec<f64>,
    pub pink_noise_scale_uv: f64,
    pub blink_rate_hz: f64,
    pub blink_amplitude_uv: f64,
    pub blink_width_s: f64,
    pub blink_topography: Vec<f64>,
    /// Share of C/NC trials carrying a planted transient.
    pub artifact_fraction: f64,
    pub artifact_amplitude_uv: f64,
    pub artifact_width_s: f64,
    /// Signal before the first trial and after the last one.
    pub lead_in_s: f64,
    pub lead_out_s: f64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            channel_names: data::montage_names(),
            erp_peak_amplitude_comfort_uv: 6.0,
            erp_peak_amplitude_no_comfort_uv: 3.5,
            erp_latency_s: 0.30,
            erp_width_s: 0.12,
            source_topography: default_erp_topography(),
            pink_noise_scale_uv: CALIBRATED_NOISE_SCALE_UV,
            blink_rate_hz: 0.2,
            blink_amplitude_uv: 120.0,
            blink_width_s: 0.06,
            blink_topography: default_blink_topography(),
            artifact_fraction: 0.10,
            artifact_amplitude_uv: 500.0,
            artifact_width_s: 0.10,
            lead_in_s: 2.0,
            lead_out_s: 2.0,
            rng_seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.channel_names.len();
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if n == 0 {
            return Err(Error::ZeroChannels);
        }
        if self.source_topography.len() != n || self.blink_topography.len() != n {
            return bad(format!("topographies must have {n} entries"));
        }
        let norm = self.source_topography.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return bad(format!("source topography must be unit norm, got {norm}"));
        }
        if self.erp_peak_amplitude_no_comfort_uv < 0.0
            || self.erp_peak_amplitude_comfort_uv <= self.erp_peak_amplitude_no_comfort_uv
        {
            return bad("need C amplitude > NC amplitude ≥ 0".into());
        }
        if !(self.erp_width_s > 0.0 && self.erp_latency_s + 3.0 * self.erp_width_s < 1.0) {
            return bad("ERP peak must fall inside the first second".into());
        }
        let non_negative = [
            self.pink_noise_scale_uv,
            self.blink_rate_hz,
            self.blink_amplitude_uv,
            self.artifact_amplitude_uv,
        ];
        if non_negative.iter().any(|v| !(*v >= 0.0)) {
            return bad("amplitudes and rates must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.artifact_fraction) {
            return bad("artifact fraction must lie in [0, 1]".into());
        }
        if self.lead_in_s < 1.0 || self.lead_out_s < 0.0 {
            return bad("lead-in must cover the 1 s pre-stimulus epoch span".into());
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidSampleRate(self.sample_rate_hz));
        }
        Ok(())
    }

    pub fn with_noise_scale(&self, scale_uv: f64) -> Self {
        Self {
            pink_noise_scale_uv: scale_uv,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..self.clone()
        }
    }

    pub fn erp_amplitude(&self, label: ConditionLabel) -> f64 {
        match label {
            ConditionLabel::Comfort => self.erp_peak_amplitude_comfort_uv,
            ConditionLabel::NoComfort => self.erp_peak_amplitude_no_comfort_uv,
            ConditionLabel::Flat => 0.0,
        }
    }

    /// Unit-amplitude ERP shape at `t_s` after onset. Zero beyond 8 widths
    /// of the peak.
    pub fn erp_template(&self, t_s: f64) -> f64 {
        let d = t_s - self.erp_latency_s;
        if d.abs() > 8.0 * self.erp_width_s {
            0.0
        } else {
            (-d * d / (2.0 * self.erp_width_s * self.erp_width_s)).exp()
        }
    }
}

/// Paul Kellet's refined pink-noise filter: a parallel bank of one-pole
/// lowpass sections approximating a −10 dB/decade slope.
#[derive(Debug, Clone, Default)]
pub struct PinkFilter {
    b: [f64; 7],
}

impl PinkFilter {
    const POLES: [f64; 6] = [0.99886, 0.99332, 0.96900, 0.86650, 0.55000, -0.7616];
    const GAINS: [f64; 6] = [0.0555179, 0.0750759, 0.1538520, 0.3104856, 0.5329522, -0.0168980];

    pub fn step(&mut self, white: f64) -> f64 {
        for i in 0..6 {
            self.b[i] = Self::POLES[i] * self.b[i] + white * Self::GAINS[i];
        }
        let out = self.b.iter().sum::<f64>() + white * 0.5362;
        self.b[6] = white * 0.115926;
        out
    }

    /// Output standard deviation for unit-variance white input, from the
    /// energy of the impulse response.
    pub fn output_std() -> f64 {
        let mut f = PinkFilter::default();
        let mut energy = f.step(1.0).powi(2);
        for _ in 0..40_000 {
            energy += f.step(0.0).powi(2);
        }
        energy.sqrt()
    }
}

/// Unit-variance pink noise.
pub fn pink_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let gain = 1.0 / PinkFilter::output_std();
    let mut f = PinkFilter::default();
    // settle the slowest pole
    for _ in 0..4096 {
        f.step(StandardNormal.sample(rng));
    }
    (0..n)
        .map(|_| gain * f.step(StandardNormal.sample(rng)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub recording: MultichannelRecording,
    /// One event per schedule trial, in order.
    pub events: Vec<AnnotatedEvent>,
    /// Schedule indices of trials carrying a planted transient.
    pub artifact_trials: Vec<usize>,
    pub blink_times_s: Vec<f64>,
}

impl SyntheticDataset {
    pub fn markers(&self) -> Vec<EventMarker> {
        self.events.iter().map(AnnotatedEvent::marker).collect()
    }
}

fn add_pulse(
    data: &mut Array2<f64>,
    rate: f64,
    center_s: f64,
    width_s: f64,
    support_widths: f64,
    weights: &[f64],
    amplitude: f64,
) {
    let n = data.ncols() as i64;
    let lo = (((center_s - support_widths * width_s) * rate).floor() as i64).max(0);
    let hi = (((center_s + support_widths * width_s) * rate).ceil() as i64).min(n - 1);
    for s in lo..=hi {
        let d = s as f64 / rate - center_s;
        let v = amplitude * (-d * d / (2.0 * width_s * width_s)).exp();
        for (ch, w) in weights.iter().enumerate() {
            data[[ch, s as usize]] += w * v;
        }
    }
}

/// Synthesizes the continuous recording for `schedule`. Deterministic in
/// `config.rng_seed`.
pub fn generate_recording(config: &SynthConfig, schedule: &TrialSchedule) -> Result<SyntheticDataset> {
    config.validate()?;
    let rate = config.sample_rate_hz;
    let n_ch = config.channel_names.len();
    let total_s = config.lead_in_s + schedule.end_s() + config.lead_out_s;
    let n_samples = (total_s * rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut data = Array2::<f64>::zeros((n_ch, n_samples));

    let events: Vec<AnnotatedEvent> = schedule
        .trials
        .iter()
        .map(|t| AnnotatedEvent {
            onset_sample: ((config.lead_in_s + t.object_onset_s()) * rate).round() as usize,
            condition: t.condition,
            depth_m: t.depth_m,
            sub_session: t.sub_session,
        })
        .collect();

    // ERPs, placed sample-exactly relative to the onset sample
    let support = (8.0 * config.erp_width_s * rate).ceil() as i64;
    let peak = (config.erp_latency_s * rate).round() as i64;
    for ev in &events {
        let amp = config.erp_amplitude(ev.condition);
        if amp == 0.0 {
            continue;
        }
        for k in (peak - support).max(-(ev.onset_sample as i64))..=peak + support {
            let s = ev.onset_sample as i64 + k;
            if s >= n_samples as i64 {
                break;
            }
            let v = amp * config.erp_template(k as f64 / rate);
            for (ch, w) in config.source_topography.iter().enumerate() {
                data[[ch, s as usize]] += w * v;
            }
        }
    }

    let mut blink_times_s = Vec::new();
    if config.blink_rate_hz > 0.0 && config.blink_amplitude_uv > 0.0 {
        let gaps = Exp::new(config.blink_rate_hz).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut t = gaps.sample(&mut rng);
        while t < total_s {
            blink_times_s.push(t);
            add_pulse(
                &mut data,
                rate,
                t,
                config.blink_width_s,
                5.0,
                &config.blink_topography,
                config.blink_amplitude_uv,
            );
            t += gaps.sample(&mut rng);
        }
    }

    let classifiable: Vec<usize> = (0..events.len())
        .filter(|&i| events[i].condition.is_classifiable())
        .collect();
    let n_art = (config.artifact_fraction * classifiable.len() as f64).round() as usize;
    let mut artifact_trials: Vec<usize> = sample(&mut rng, classifiable.len(), n_art)
        .iter()
        .map(|i| classifiable[i])
        .collect();
    artifact_trials.sort_unstable();
    for &trial in &artifact_trials {
        let onset_s = events[trial].onset_sample as f64 / rate;
        let center = onset_s + rng.random_range(-0.8..2.3);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let weights: Vec<f64> = config.blink_topography.iter().map(|w| sign * w).collect();
        add_pulse(
            &mut data,
            rate,
            center,
            config.artifact_width_s,
            4.0,
            &weights,
            config.artifact_amplitude_uv,
        );
    }

    if config.pink_noise_scale_uv > 0.0 {
        for mut row in data.outer_iter_mut() {
            let noise = pink_noise(&mut rng, n_samples);
            row.iter_mut()
                .zip(noise)
                .for_each(|(d, v)| *d += config.pink_noise_scale_uv * v);
        }
    }

    let recording = MultichannelRecording::new(rate, config.channel_names.clone(), data)?;
    Ok(SyntheticDataset {
        recording,
        events,
        artifact_trials,
        blink_times_s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub target_accuracy: f64,
    pub tolerance: f64,
    /// Generator seeds; the median accuracy over them is calibrated.
    pub seeds: Vec<u64>,
    /// Noise scales (µV) bracketing the target: low noise → high accuracy.
    pub bracket_uv: (f64, f64),
    pub max_iterations: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            target_accuracy: 0.633,
            tolerance: 0.02,
            seeds: vec![1, 2, 3, 4, 5],
            bracket_uv: (1.5, 6.0),
            max_iterations: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStep {
    pub noise_scale_uv: f64,
    pub median_accuracy: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub noise_scale_uv: f64,
    pub median_accuracy: f64,
    pub accuracies: Vec<f64>,
    pub steps: Vec<CalibrationStep>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Pipeline test accuracy for each seed at one noise scale.
pub fn accuracies_at(
    noise_scale_uv: f64,
    seeds: &[u64],
    schedule: &TrialSchedule,
    synth: &SynthConfig,
    pipeline: &PipelineConfig,
) -> Result<Vec<f64>> {
    seeds
        .iter()
        .map(|&seed| {
            let cfg = synth.with_noise_scale(noise_scale_uv).with_seed(seed);
            let ds = generate_recording(&cfg, schedule)?;
            Ok(eval::run_pipeline(&ds.recording, &ds.markers(), pipeline)?.accuracy)
        })
        .collect()
}

/// Bisection on log noise scale until the median accuracy over
/// `calibration.seeds` is within tolerance of the target.
pub fn calibrate_noise(
    calibration: &CalibrationConfig,
    schedule: &TrialSchedule,
    synth: &SynthConfig,
    pipeline: &PipelineConfig,
) -> Result<Calibration> {
    let target = calibration.target_accuracy;
    let mut steps = Vec::new();
    let probe = |scale: f64, steps: &mut Vec<CalibrationStep>| -> Result<CalibrationStep> {
        let accuracies = accuracies_at(scale, &calibration.seeds, schedule, synth, pipeline)?;
        let step = CalibrationStep {
            noise_scale_uv: scale,
            median_accuracy: median(&accuracies),
            accuracies,
        };
        steps.push(step.clone());
        Ok(step)
    };

    let (mut lo, mut hi) = calibration.bracket_uv;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidConfig(format!("bad bracket {:?}", calibration.bracket_uv)));
    }
    let at_lo = probe(lo, &mut steps)?;
    let at_hi = probe(hi, &mut steps)?;
    if !(at_lo.median_accuracy > target && at_hi.median_accuracy < target) {
        return Err(Error::CalibrationUnreachable {
            target,
            low_noise_accuracy: at_lo.median_accuracy,
            high_noise_accuracy: at_hi.median_accuracy,
        });
    }
    let mut best = if (at_lo.median_accuracy - target).abs() < (at_hi.median_accuracy - target).abs() {
        at_lo
    } else {
        at_hi
    };
    for _ in 0..calibration.max_iterations {
        if (best.median_accuracy - target).abs() <= calibration.tolerance {
            break;
        }
        let mid = (lo * hi).sqrt();
        let step = probe(mid, &mut steps)?;
        if step.median_accuracy > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (step.median_accuracy - target).abs() < (best.median_accuracy - target).abs() {
            best = step;
        }
    }
    if (best.median_accuracy - target).abs() > calibration.tolerance {
        return Err(Error::CalibrationUnreachable {
            target,
            low_noise_accuracy: steps[0].median_accuracy,
            high_noise_accuracy: steps[1].median_accuracy,
        });
    }
    Ok(Calibration {
        noise_scale_uv: best.noise_scale_uv,
        median_accuracy: best.median_accuracy,
        accuracies: best.accuracies,
        steps,
    })
}

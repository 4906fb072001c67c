//! Epoch extraction, baseline correction and automated artifact rejection.

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{Epoch, EventMarker, LabeledEpochSet, MultichannelRecording, TimeWindow};
use crate::error::{Error, Result};

/// Epoch span around each onset.
pub const EPOCH_WINDOW: TimeWindow = TimeWindow::new(-1.0, 2.5);
/// Pre-stimulus interval used for baseline removal.
pub const BASELINE_WINDOW: TimeWindow = TimeWindow::new(-0.2, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionConfig {
    pub amplitude_limit_uv: f64,
    pub variance_z_threshold: f64,
    pub max_iterations: usize,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            amplitude_limit_uv: 250.0,
            variance_z_threshold: 5.0,
            max_iterations: 5,
        }
    }
}

impl RejectionConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.amplitude_limit_uv > 0.0
            && self.variance_z_threshold > 0.0
            && self.max_iterations > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "rejection parameters must be strictly positive: {self:?}"
            )))
        }
    }
}

/// Cuts one epoch per marker, in marker order, copying the marker's label.
pub fn extract_epochs(
    recording: &MultichannelRecording,
    markers: &[EventMarker],
    window: TimeWindow,
) -> Result<LabeledEpochSet> {
    let rate = recording.sample_rate_hz();
    let n_window = window.n_samples(rate);
    let offset = (window.start_s * rate).round() as i64;
    let data = recording.data();

    let epochs = markers
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let start = m.onset_sample as i64 + offset;
            let end = start + n_window as i64;
            if start < 0 || end > recording.n_samples() as i64 {
                return Err(Error::MarkerOutOfRange {
                    index,
                    onset: m.onset_sample,
                    start_s: window.start_s,
                    end_s: window.end_s,
                });
            }
            Ok(Epoch {
                data: data.slice(s![.., start as usize..end as usize]).to_owned(),
                label: m.condition,
                onset_sample: m.onset_sample,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(LabeledEpochSet {
        sample_rate_hz: rate,
        channel_names: recording.channel_names().to_vec(),
        window,
        epochs,
        provenance: String::new(),
        rejected_indices: Vec::new(),
    })
}

/// Subtracts each channel's mean over `baseline` from the whole epoch.
pub fn baseline_correct_epoch(
    data: &Array2<f64>,
    window: TimeWindow,
    sample_rate_hz: f64,
    baseline: TimeWindow,
) -> Result<Array2<f64>> {
    let range = window.sub_range(&baseline, sample_rate_hz)?;
    if range.is_empty() {
        return Err(Error::IntervalOutsideWindow {
            start_s: baseline.start_s,
            end_s: baseline.end_s,
            window_start_s: window.start_s,
            window_end_s: window.end_s,
        });
    }
    let means = data
        .slice(s![.., range])
        .mean_axis(Axis(1))
        .expect("non-empty baseline");
    Ok(data - &means.insert_axis(Axis(1)))
}

pub fn baseline_correct(epochs: &LabeledEpochSet, baseline: TimeWindow) -> Result<LabeledEpochSet> {
    let corrected = epochs
        .epochs
        .iter()
        .map(|e| {
            Ok(Epoch {
                data: baseline_correct_epoch(&e.data, epochs.window, epochs.sample_rate_hz, baseline)?,
                ..e.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // an interval check even when the set is empty
    epochs.window.sub_range(&baseline, epochs.sample_rate_hz)?;
    Ok(epochs.with_epochs(corrected))
}

/// Log of the channel-averaged variance of one epoch.
fn pooled_log_variance(data: &Array2<f64>) -> f64 {
    let v = data.var_axis(Axis(1), 0.0).mean().unwrap_or(0.0);
    v.max(f64::MIN_POSITIVE).ln()
}

/// Two-stage rejection: an absolute amplitude gate, then iterative z-scoring
/// of per-epoch log-variance. Returns the kept epochs (chronological order
/// preserved) and the rejected positions in the input.
pub fn reject_artifacts(
    epochs: &LabeledEpochSet,
    config: &RejectionConfig,
) -> Result<(LabeledEpochSet, Vec<usize>)> {
    config.validate()?;
    if epochs.len() < 2 {
        return Err(Error::TooFewEpochs {
            needed: 2,
            got: epochs.len(),
        });
    }

    let mut keep: Vec<bool> = epochs
        .epochs
        .iter()
        .map(|e| e.data.iter().all(|v| v.abs() <= config.amplitude_limit_uv))
        .collect();

    let log_var: Vec<f64> = epochs.epochs.iter().map(|e| pooled_log_variance(&e.data)).collect();
    for _ in 0..config.max_iterations {
        let alive: Vec<usize> = (0..keep.len()).filter(|&i| keep[i]).collect();
        if alive.len() < 2 {
            break;
        }
        let n = alive.len() as f64;
        let mean = alive.iter().map(|&i| log_var[i]).sum::<f64>() / n;
        let var = alive.iter().map(|&i| (log_var[i] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            break;
        }
        let mut removed = false;
        for &i in &alive {
            if ((log_var[i] - mean) / sd).abs() > config.variance_z_threshold {
                keep[i] = false;
                removed = true;
            }
        }
        if !removed {
            break;
        }
    }

    let rejected: Vec<usize> = (0..keep.len()).filter(|&i| !keep[i]).collect();
    if rejected.len() == epochs.len() {
        return Err(Error::AllRejected);
    }
    let kept = epochs
        .epochs
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(e, _)| e.clone())
        .collect();
    let mut out = epochs.with_epochs(kept);
    out.rejected_indices = rejected.clone();
    Ok((out, rejected))
}

//! Domain types shared by every pipeline stage.
//!
//! Signals are stored in microvolts, times in seconds. A recording is a dense
//! `channels × samples` matrix; epochs are slices of it cut around stimulus
//! onsets.

use std::fmt;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 28 EEG electrodes of the acquisition montage, in recording order.
pub const EEG_MONTAGE_28: [&str; 28] = [
    "AF3", "AF4", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FC2", "FC6", "C3", "Cz", "C4",
    "CP5", "CP1", "CP2", "CP6", "P7", "P3", "Pz", "P4", "P8", "PO3", "PO4", "O1", "Oz", "O2",
];

pub const MONTAGE_NAME: &str = "10-20/28";

/// Acquisition rate of the amplifiers.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 512.0;

pub fn montage_names() -> Vec<String> {
    EEG_MONTAGE_28.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionLabel {
    #[serde(rename = "C")]
    Comfort,
    #[serde(rename = "NC")]
    NoComfort,
    #[serde(rename = "FLAT")]
    Flat,
}

impl ConditionLabel {
    pub fn is_classifiable(self) -> bool {
        !matches!(self, ConditionLabel::Flat)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionLabel::Comfort => "C",
            ConditionLabel::NoComfort => "NC",
            ConditionLabel::Flat => "FLAT",
        }
    }
}

impl fmt::Display for ConditionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ConditionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" => Ok(ConditionLabel::Comfort),
            "NC" => Ok(ConditionLabel::NoComfort),
            "FLAT" => Ok(ConditionLabel::Flat),
            other => Err(Error::Format(format!("unknown condition label {other:?}"))),
        }
    }
}

/// Continuous multichannel signal in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelRecording {
    sample_rate_hz: f64,
    channel_names: Vec<String>,
    data: Array2<f64>,
}

impl MultichannelRecording {
    pub fn new(sample_rate_hz: f64, channel_names: Vec<String>, data: Array2<f64>) -> Result<Self> {
        check_parts(sample_rate_hz, &channel_names, data.view())?;
        Ok(Self {
            sample_rate_hz,
            channel_names,
            data,
        })
    }

    /// Builds a recording from per-channel rows, reporting ragged input.
    pub fn from_rows(
        sample_rate_hz: f64,
        channel_names: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::ZeroChannels);
        }
        let expected = rows[0].len();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != expected) {
            return Err(Error::RaggedRows {
                row,
                len: r.len(),
                expected,
            });
        }
        let n_rows = rows.len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let data = Array2::from_shape_vec((n_rows, expected), flat)
            .map_err(|e| Error::Format(e.to_string()))?;
        Self::new(sample_rate_hz, channel_names, data)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }

    /// Replaces the signal, keeping rate and montage.
    pub fn with_data(&self, data: Array2<f64>) -> Result<Self> {
        Self::new(self.sample_rate_hz, self.channel_names.clone(), data)
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }
}

fn check_parts(sample_rate_hz: f64, names: &[String], data: ArrayView2<f64>) -> Result<()> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidSampleRate(sample_rate_hz));
    }
    if names.is_empty() || data.nrows() == 0 {
        return Err(Error::ZeroChannels);
    }
    if names.len() != data.nrows() {
        return Err(Error::ChannelCountMismatch {
            names: names.len(),
            rows: data.nrows(),
        });
    }
    for (channel, row) in data.outer_iter().enumerate() {
        if let Some(sample) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { channel, sample });
        }
    }
    Ok(())
}

/// Re-checks every recording invariant and reports the first violation.
pub fn validate_recording(recording: &MultichannelRecording) -> Result<()> {
    check_parts(
        recording.sample_rate_hz,
        &recording.channel_names,
        recording.data.view(),
    )
}

/// Stimulus onset with its condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventMarker {
    pub onset_sample: usize,
    pub condition: ConditionLabel,
}

/// Event with the protocol annotations stored in the events file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedEvent {
    pub onset_sample: usize,
    pub condition: ConditionLabel,
    pub depth_m: f64,
    pub sub_session: usize,
}

impl AnnotatedEvent {
    pub fn marker(&self) -> EventMarker {
        EventMarker {
            onset_sample: self.onset_sample,
            condition: self.condition,
        }
    }
}

/// Interval relative to stimulus onset, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeWindow {
    pub const fn new(start_s: f64, end_s: f64) -> Self {
        Self { start_s, end_s }
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// `round((end − start) · rate)`.
    pub fn n_samples(&self, sample_rate_hz: f64) -> usize {
        (self.duration_s() * sample_rate_hz).round() as usize
    }

    pub fn contains(&self, inner: &TimeWindow) -> bool {
        inner.start_s >= self.start_s && inner.end_s <= self.end_s && inner.start_s < inner.end_s
    }

    /// Sample range of `inner` inside an array that spans `self`.
    pub fn sub_range(&self, inner: &TimeWindow, sample_rate_hz: f64) -> Result<std::ops::Range<usize>> {
        if !self.contains(inner) {
            return Err(Error::IntervalOutsideWindow {
                start_s: inner.start_s,
                end_s: inner.end_s,
                window_start_s: self.start_s,
                window_end_s: self.end_s,
            });
        }
        let start = ((inner.start_s - self.start_s) * sample_rate_hz).round() as usize;
        let len = inner.n_samples(sample_rate_hz);
        Ok(start..(start + len).min(self.n_samples(sample_rate_hz)))
    }
}

/// Fixed-window slice of a recording around one onset.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    /// `[n_channels × n_window_samples]`, microvolts.
    pub data: Array2<f64>,
    pub label: ConditionLabel,
    pub onset_sample: usize,
}

/// Epochs sharing montage, window and rate, in acquisition order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEpochSet {
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub window: TimeWindow,
    pub epochs: Vec<Epoch>,
    pub provenance: String,
    /// Indices (into the set before rejection) that were discarded.
    pub rejected_indices: Vec<usize>,
}

impl LabeledEpochSet {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn n_window_samples(&self) -> usize {
        self.window.n_samples(self.sample_rate_hz)
    }

    pub fn labels(&self) -> Vec<ConditionLabel> {
        self.epochs.iter().map(|e| e.label).collect()
    }

    pub fn count(&self, label: ConditionLabel) -> usize {
        self.epochs.iter().filter(|e| e.label == label).count()
    }

    /// Same metadata, different epochs.
    pub fn with_epochs(&self, epochs: Vec<Epoch>) -> Self {
        Self {
            sample_rate_hz: self.sample_rate_hz,
            channel_names: self.channel_names.clone(),
            window: self.window,
            epochs,
            provenance: self.provenance.clone(),
            rejected_indices: self.rejected_indices.clone(),
        }
    }

    pub fn check_consistent(&self) -> Result<()> {
        let n_s = self.n_window_samples();
        for (i, e) in self.epochs.iter().enumerate() {
            if e.data.dim() != (self.n_channels(), n_s) {
                return Err(Error::InconsistentEpochs(format!(
                    "epoch {i} has shape {:?}, expected ({}, {n_s})",
                    e.data.dim(),
                    self.n_channels()
                )));
            }
        }
        Ok(())
    }
}

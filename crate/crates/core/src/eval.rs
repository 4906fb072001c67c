//! End-to-end pipeline, chronological train/test protocol and metrics.
//!
//! filter → epoch → (reject) → baseline → split → fit spatial filter and
//! LDA on the first half → classify the second half → vote analysis →
//! significance against chance.

use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{ConditionLabel, EventMarker, LabeledEpochSet, MultichannelRecording, TimeWindow};
use crate::dsp::{self, FilterKind, FilterMode};
use crate::error::{Error, Result};
use crate::lda::{self, LdaModel, Shrinkage};
use crate::preprocess::{self, RejectionConfig, BASELINE_WINDOW, EPOCH_WINDOW};
use crate::spatial::{self, SpatialFilterModel};
use crate::vote::{self, VoteConfig, VoteEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// Zero-phase filters and artifact rejection.
    Offline,
    /// Causal filters, no rejection.
    OnlineSim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mode: PipelineMode,
    pub highpass_hz: f64,
    pub lowpass_hz: f64,
    pub filter_order: usize,
    pub epoch_window: TimeWindow,
    pub baseline_window: TimeWindow,
    pub classification_window: TimeWindow,
    pub decimation_factor: usize,
    pub n_virtual: usize,
    pub rejection: Option<RejectionConfig>,
    pub shrinkage: Shrinkage,
    pub votes: Vec<VoteConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: PipelineMode::Offline,
            highpass_hz: 0.5,
            lowpass_hz: 25.0,
            filter_order: 4,
            epoch_window: EPOCH_WINDOW,
            baseline_window: BASELINE_WINDOW,
            classification_window: TimeWindow::new(0.0, 1.0),
            decimation_factor: 16,
            n_virtual: 5,
            rejection: Some(RejectionConfig::default()),
            shrinkage: Shrinkage::LedoitWolf,
            votes: [3, 5, 7].iter().map(|&n| VoteConfig::new(n, 0)).collect(),
        }
    }
}

impl PipelineConfig {
    pub fn offline() -> Self {
        Self::default()
    }

    pub fn online_sim() -> Self {
        Self {
            mode: PipelineMode::OnlineSim,
            rejection: None,
            ..Self::default()
        }
    }

    pub fn with_mode(&self, mode: PipelineMode) -> Self {
        let mut c = self.clone();
        c.mode = mode;
        if mode == PipelineMode::Offline && c.rejection.is_none() {
            c.rejection = Some(RejectionConfig::default());
        }
        c
    }

    pub fn filter_mode(&self) -> FilterMode {
        match self.mode {
            PipelineMode::Offline => FilterMode::ZeroPhase,
            PipelineMode::OnlineSim => FilterMode::Causal,
        }
    }

    /// Rejection in effect; always `None` in online simulation.
    pub fn effective_rejection(&self) -> Option<&RejectionConfig> {
        match self.mode {
            PipelineMode::Offline => self.rejection.as_ref(),
            PipelineMode::OnlineSim => None,
        }
    }

    pub fn feature_dim(&self, sample_rate_hz: f64) -> usize {
        self.n_virtual * self.classification_window.n_samples(sample_rate_hz) / self.decimation_factor
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !self.epoch_window.contains(&self.classification_window) {
            return Err(Error::InvalidConfig(format!(
                "classification window {:?} outside epoch window {:?}",
                self.classification_window, self.epoch_window
            )));
        }
        if !self.epoch_window.contains(&self.baseline_window) {
            return Err(Error::InvalidConfig(format!(
                "baseline window {:?} outside epoch window {:?}",
                self.baseline_window, self.epoch_window
            )));
        }
        let n = self.classification_window.n_samples(sample_rate_hz);
        if self.decimation_factor == 0 || n % self.decimation_factor != 0 {
            return Err(Error::NotDivisible {
                len: n,
                factor: self.decimation_factor,
            });
        }
        if self.n_virtual == 0 {
            return Err(Error::InvalidConfig("n_virtual must be positive".into()));
        }
        if let Some(r) = &self.rejection {
            r.validate()?;
        }
        self.votes.iter().try_for_each(VoteConfig::validate)
    }
}

/// Per-test-epoch outcome, enough to recompute every accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialPrediction {
    pub onset_sample: usize,
    pub truth: ConditionLabel,
    pub predicted: ConditionLabel,
    pub decision_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClassAccuracy {
    pub comfort: f64,
    pub no_comfort: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mode: PipelineMode,
    pub n_train: usize,
    pub n_test: usize,
    pub n_rejected: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    pub per_class_accuracy: PerClassAccuracy,
    pub vote_accuracies: BTreeMap<usize, VoteEstimate>,
    pub chance_p_value: f64,
    pub shrinkage_lambda: f64,
    pub predictions: Vec<TrialPrediction>,
}

impl EvaluationReport {
    /// Plain-text summary table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("mode              {:?}\n", self.mode));
        s.push_str(&format!(
            "epochs            train {}  test {}  rejected {}\n",
            self.n_train, self.n_test, self.n_rejected
        ));
        s.push_str(&format!(
            "accuracy          {:.2}%  ({} / {})\n",
            100.0 * self.accuracy,
            self.n_correct,
            self.n_test
        ));
        s.push_str(&format!(
            "per class         C {:.2}%  NC {:.2}%\n",
            100.0 * self.per_class_accuracy.comfort,
            100.0 * self.per_class_accuracy.no_comfort
        ));
        s.push_str(&format!("p (vs chance)     {:.3e}\n", self.chance_p_value));
        s.push_str(&format!("shrinkage λ       {:.4}\n", self.shrinkage_lambda));
        for (n, v) in &self.vote_accuracies {
            s.push_str(&format!(
                "vote n={:<2}         {:.2}% ± {:.2}\n",
                n,
                100.0 * v.accuracy,
                100.0 * v.std_error
            ));
        }
        s
    }

    pub fn truth_prediction_pairs(&self) -> Vec<(ConditionLabel, ConditionLabel)> {
        self.predictions.iter().map(|p| (p.truth, p.predicted)).collect()
    }
}

/// Both fitted stages, trained on the same epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub spatial_filter: SpatialFilterModel,
    pub lda: LdaModel,
    pub config: PipelineConfig,
}

/// First `⌈n/2⌉` epochs train, the rest test. Order must be chronological.
pub fn split_half(epochs: &LabeledEpochSet) -> Result<(LabeledEpochSet, LabeledEpochSet)> {
    let n = epochs.len();
    if n < 4 {
        return Err(Error::TooFewEpochs { needed: 4, got: n });
    }
    if let Some(i) = epochs
        .epochs
        .windows(2)
        .position(|w| w[1].onset_sample <= w[0].onset_sample)
    {
        return Err(Error::NonChronological(i + 1));
    }
    let cut = n.div_ceil(2);
    Ok((
        epochs.with_epochs(epochs.epochs[..cut].to_vec()),
        epochs.with_epochs(epochs.epochs[cut..].to_vec()),
    ))
}

/// One-sided exact binomial tail `P[X ≥ n_correct]` for `X ~ Bin(n_test, ½)`.
pub fn chance_significance(n_correct: usize, n_test: usize) -> f64 {
    if n_correct == 0 {
        return 1.0;
    }
    if n_correct > n_test {
        return 0.0;
    }
    // C(n, k) grows to ~1e47 at n = 160: still comfortably inside f64.
    let mut coef = 1.0f64;
    let mut tail = 0.0;
    for k in 0..=n_test {
        if k >= n_correct {
            tail += coef;
        }
        coef = coef * (n_test - k) as f64 / (k + 1) as f64;
    }
    (tail * 0.5f64.powi(n_test as i32)).min(1.0)
}

/// Filters, epochs C/NC onsets, rejects (offline) and baseline-corrects.
pub fn preprocess_recording(
    recording: &MultichannelRecording,
    markers: &[EventMarker],
    config: &PipelineConfig,
) -> Result<LabeledEpochSet> {
    let rate = recording.sample_rate_hz();
    config.validate(rate)?;
    let mode = config.filter_mode();
    let hp = dsp::design_butterworth(FilterKind::Highpass, &[config.highpass_hz], config.filter_order, rate)?;
    let lp = dsp::design_butterworth(FilterKind::Lowpass, &[config.lowpass_hz], config.filter_order, rate)?;
    let mut data = recording.data().clone();
    dsp::filter_rows_in_place(&mut data, &hp, mode);
    dsp::filter_rows_in_place(&mut data, &lp, mode);
    let filtered = recording.with_data(data)?;

    let markers: Vec<EventMarker> = markers
        .iter()
        .copied()
        .filter(|m| m.condition.is_classifiable())
        .collect();
    let epochs = preprocess::extract_epochs(&filtered, &markers, config.epoch_window)?;
    drop(filtered);

    let epochs = match config.effective_rejection() {
        Some(rc) => preprocess::reject_artifacts(&epochs, rc)?.0,
        None => epochs,
    };
    preprocess::baseline_correct(&epochs, config.baseline_window)
}

/// Virtual-channel block means on the classification window, flattened
/// channel-major: one row per epoch.
pub fn extract_features(
    spatial_filter: &SpatialFilterModel,
    epochs: &LabeledEpochSet,
    config: &PipelineConfig,
) -> Result<Array2<f64>> {
    let range = epochs
        .window
        .sub_range(&config.classification_window, epochs.sample_rate_hz)?;
    let dim = config.feature_dim(epochs.sample_rate_hz);
    let mut out = Array2::zeros((epochs.len(), dim));
    for (e, mut row) in epochs.epochs.iter().zip(out.axis_iter_mut(Axis(0))) {
        let window = e.data.slice(ndarray::s![.., range.clone()]);
        let virt = spatial::apply_spatial_filter(spatial_filter, &epochs.channel_names, window)?;
        let dec = dsp::decimate_block_mean(virt.view(), config.decimation_factor)?;
        row.iter_mut().zip(dec.iter()).for_each(|(d, v)| *d = *v);
    }
    Ok(out)
}

pub fn train(train: &LabeledEpochSet, config: &PipelineConfig) -> Result<TrainedPipeline> {
    config.validate(train.sample_rate_hz)?;
    let spatial_filter =
        spatial::fit_spatial_filter(train, config.classification_window, config.n_virtual)?;
    let features = extract_features(&spatial_filter, train, config)?;
    let lda = lda::fit_lda_with(features.view(), &train.labels(), config.shrinkage)?;
    Ok(TrainedPipeline {
        spatial_filter,
        lda,
        config: config.clone(),
    })
}

impl TrainedPipeline {
    pub fn predict(&self, epochs: &LabeledEpochSet) -> Result<Vec<TrialPrediction>> {
        let features = extract_features(&self.spatial_filter, epochs, &self.config)?;
        features
            .axis_iter(Axis(0))
            .zip(&epochs.epochs)
            .map(|(x, e)| {
                let dv = self.lda.decision_value(x)?;
                Ok(TrialPrediction {
                    onset_sample: e.onset_sample,
                    truth: e.label,
                    predicted: lda::label_for(dv),
                    decision_value: dv,
                })
            })
            .collect()
    }

    /// Scores `test`; `n_train`/`n_rejected` are carried into the report.
    pub fn evaluate(
        &self,
        test: &LabeledEpochSet,
        n_train: usize,
        n_rejected: usize,
    ) -> Result<EvaluationReport> {
        let predictions = self.predict(test)?;
        report_from_predictions(
            self.config.mode,
            predictions,
            n_train,
            n_rejected,
            self.lda.shrinkage_lambda,
            &self.config.votes,
        )
    }
}

pub fn report_from_predictions(
    mode: PipelineMode,
    predictions: Vec<TrialPrediction>,
    n_train: usize,
    n_rejected: usize,
    shrinkage_lambda: f64,
    votes: &[VoteConfig],
) -> Result<EvaluationReport> {
    if predictions.is_empty() {
        return Err(Error::Empty);
    }
    let class_acc = |label: ConditionLabel| -> f64 {
        let of: Vec<_> = predictions.iter().filter(|p| p.truth == label).collect();
        if of.is_empty() {
            return 0.0;
        }
        of.iter().filter(|p| p.predicted == label).count() as f64 / of.len() as f64
    };
    let n_test = predictions.len();
    let n_correct = predictions.iter().filter(|p| p.truth == p.predicted).count();
    let pairs: Vec<_> = predictions.iter().map(|p| (p.truth, p.predicted)).collect();
    let vote_accuracies = votes
        .iter()
        .map(|v| Ok((v.cluster_size, vote::monte_carlo_cluster_accuracy(&pairs, v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(EvaluationReport {
        mode,
        n_train,
        n_test,
        n_rejected,
        n_correct,
        accuracy: n_correct as f64 / n_test as f64,
        per_class_accuracy: PerClassAccuracy {
            comfort: class_acc(ConditionLabel::Comfort),
            no_comfort: class_acc(ConditionLabel::NoComfort),
        },
        vote_accuracies,
        chance_p_value: chance_significance(n_correct, n_test),
        shrinkage_lambda,
        predictions,
    })
}

/// Train on the first half of the preprocessed epochs, test on the second.
pub fn evaluate_epochs(epochs: &LabeledEpochSet, config: &PipelineConfig) -> Result<EvaluationReport> {
    let (train_set, test_set) = split_half(epochs)?;
    let model = train(&train_set, config)?;
    model.evaluate(&test_set, train_set.len(), epochs.rejected_indices.len())
}

pub fn run_pipeline(
    recording: &MultichannelRecording,
    markers: &[EventMarker],
    config: &PipelineConfig,
) -> Result<EvaluationReport> {
    let epochs = preprocess_recording(recording, markers, config)?;
    evaluate_epochs(&epochs, config)
}

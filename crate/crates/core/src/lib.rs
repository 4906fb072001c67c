//! EEG pipeline that classifies whether a stereoscopic object is shown inside
//! or outside the viewer's zone of comfort, from 1-second post-stimulus
//! epochs.
//!
//! Stages: [`dsp`] filtering and decimation, [`preprocess`] epoching and
//! artifact rejection, [`spatial`] discriminative spatial filtering, [`lda`]
//! shrinkage LDA, [`vote`] majority voting over trial clusters. [`eval`]
//! wires them into the offline and simulated-online pipelines; [`synth`]
//! generates labeled recordings and [`stereo`] the viewing geometry and
//! trial schedule behind them.

pub mod data;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod io;
pub mod lda;
pub mod preprocess;
pub mod spatial;
pub mod stereo;
pub mod synth;
pub mod vote;

pub use data::{
    AnnotatedEvent, ConditionLabel, Epoch, EventMarker, LabeledEpochSet, MultichannelRecording, TimeWindow,
};
pub use dsp::{FilterKind, FilterMode, FilterSpec};
pub use error::{Error, Result};
pub use eval::{EvaluationReport, PipelineConfig, PipelineMode, TrainedPipeline};
pub use lda::{LdaModel, Shrinkage};
pub use preprocess::RejectionConfig;
pub use spatial::SpatialFilterModel;
pub use stereo::{ComfortZoneSpec, TrialSchedule, ViewingGeometry};
pub use synth::{SynthConfig, SyntheticDataset};
pub use vote::{VoteConfig, VoteEstimate};

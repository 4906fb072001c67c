use crate::data::ConditionLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("zero channels")]
    ZeroChannels,
    #[error("channel name count {names} does not match data rows {rows}")]
    ChannelCountMismatch { names: usize, rows: usize },
    #[error("ragged rows: row {row} has {len} samples, expected {expected}")]
    RaggedRows { row: usize, len: usize, expected: usize },
    #[error("non-finite at ({channel},{sample})")]
    NonFinite { channel: usize, sample: usize },
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),

    #[error("corner frequency {corner_hz} Hz outside (0, {nyquist_hz}) Hz")]
    InvalidCorner { corner_hz: f64, nyquist_hz: f64 },
    #[error("filter order must be one of 2, 4, 6, 8, got {0}")]
    InvalidOrder(usize),
    #[error("filter designed for {expected} Hz but signal is sampled at {actual} Hz")]
    RateMismatch { expected: f64, actual: f64 },
    #[error("{len} samples not divisible by decimation factor {factor}")]
    NotDivisible { len: usize, factor: usize },

    #[error("marker {index} at sample {onset} does not admit window ({start_s}, {end_s}) s")]
    MarkerOutOfRange {
        index: usize,
        onset: usize,
        start_s: f64,
        end_s: f64,
    },
    #[error("interval ({start_s}, {end_s}) s lies outside epoch window ({window_start_s}, {window_end_s}) s")]
    IntervalOutsideWindow {
        start_s: f64,
        end_s: f64,
        window_start_s: f64,
        window_end_s: f64,
    },
    #[error("need at least {needed} epochs, got {got}")]
    TooFewEpochs { needed: usize, got: usize },
    #[error("all epochs rejected")]
    AllRejected,
    #[error("epochs out of chronological order at index {0}")]
    NonChronological(usize),
    #[error("epoch set is inconsistent: {0}")]
    InconsistentEpochs(String),

    #[error("class {label} has {count} samples, need at least {needed}")]
    ClassTooSmall {
        label: ConditionLabel,
        count: usize,
        needed: usize,
    },
    #[error("flat trials cannot be used for classification")]
    FlatLabel,
    #[error("requested {requested} virtual channels but only {available} channels")]
    TooManyVirtualChannels { requested: usize, available: usize },
    #[error("montage mismatch: model fitted on {expected:?}, epoch has {actual:?}")]
    MontageMismatch {
        expected: Vec<String>,
        actual: Vec<String>,
    },
    #[error("degenerate covariance: features carry no within-class variance")]
    DegenerateCovariance,
    #[error("covariance is singular and cannot be solved")]
    SingularCovariance,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input")]
    Empty,

    #[error("cluster size must be odd and positive, got {0}")]
    EvenClusterSize(usize),
    #[error("not enough {label} trials for clusters of {needed}: have {have}")]
    InsufficientTrials {
        label: ConditionLabel,
        needed: usize,
        have: usize,
    },

    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("invalid viewing geometry: {0}")]
    InvalidGeometry(String),
    #[error("expected {expected} task responses, got {got}")]
    WrongResponseCount { expected: usize, got: usize },

    #[error("target accuracy {target} unreachable: bracket accuracies are {low_noise_accuracy} and {high_noise_accuracy}")]
    CalibrationUnreachable {
        target: f64,
        low_noise_accuracy: f64,
        high_noise_accuracy: f64,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

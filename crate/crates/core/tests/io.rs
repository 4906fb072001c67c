mod common;

use ndarray::Axis;
use stereocomfort::eval::{extract_features, preprocess_recording, split_half, train};
use stereocomfort::io;
use stereocomfort::stereo::{generate_schedule, ComfortZoneSpec, TrialSchedule};
use stereocomfort::synth::{generate_recording, SynthConfig};
use stereocomfort::{PipelineConfig, SyntheticDataset};

fn short_session(n_trials: usize) -> SyntheticDataset {
    let s = generate_schedule(&ComfortZoneSpec::default(), 3).unwrap();
    let short = TrialSchedule {
        trials: s.trials[..n_trials].to_vec(),
    };
    generate_recording(&SynthConfig::default().with_seed(4), &short).unwrap()
}

#[test]
fn recording_round_trips_through_csv_and_sidecar() {
    let ds = short_session(6);
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rec.csv");
    io::save_recording(&ds.recording, &csv, "10-20/28").unwrap();
    let meta: io::RecordingMetadata = io::load_json(&io::sidecar_path(&csv)).unwrap();
    assert_eq!(meta.montage_name, "10-20/28");
    assert_eq!(meta.channel_names, ds.recording.channel_names());
    let back = io::load_recording(&csv).unwrap();
    let worst = (back.data() - ds.recording.data()).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
    assert!(worst <= 1e-9, "max deviation {worst} µV");
    assert_eq!(back.n_samples(), ds.recording.n_samples());

    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), ds.recording.n_samples() + 1);
    assert!(text.starts_with("time_s,AF3,AF4,F7,"));
}

#[test]
fn events_round_trip() {
    let ds = short_session(12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.json");
    io::save_events(&ds.events, &path).unwrap();
    assert_eq!(io::load_events(&path).unwrap(), ds.events);
    let raw = std::fs::read_to_string(&path).unwrap();
    assert!(raw.contains("\"condition\": \"NC\"") || raw.contains("\"condition\": \"C\""));

    let mut swapped = ds.events.clone();
    swapped.swap(0, 1);
    std::fs::write(&path, serde_json::to_string(&swapped).unwrap()).unwrap();
    assert!(matches!(io::load_events(&path), Err(stereocomfort::Error::NonChronological(1))));
}

#[test]
fn model_and_archive_round_trip() {
    let ds = short_session(120);
    let config = PipelineConfig::offline();
    let epochs = preprocess_recording(&ds.recording, &ds.markers(), &config).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let archive = dir.path().join("epochs.bin");
    io::save_epoch_archive(&epochs, &archive).unwrap();
    assert_eq!(io::load_epoch_archive(&archive).unwrap(), epochs);

    let (train_set, test_set) = split_half(&epochs).unwrap();
    let model = train(&train_set, &config).unwrap();
    let path = dir.path().join("model.json");
    io::save_model(&model, &path).unwrap();
    let loaded = io::load_model(&path).unwrap();
    let features = extract_features(&model.spatial_filter, &test_set, &config).unwrap();
    for x in features.axis_iter(Axis(0)) {
        let (a, b) = (model.lda.decision_value(x).unwrap(), loaded.lda.decision_value(x).unwrap());
        assert!((a - b).abs() <= 1e-12);
    }
    assert_eq!(loaded, model);

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for key in ["format_version", "montage", "spatial_filter", "lda", "pipeline_config"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    for key in ["w", "b", "lambda", "class_means"] {
        assert!(json["lda"].get(key).is_some(), "missing lda.{key}");
    }
}

#[test]
fn truncated_archive_is_rejected() {
    let ds = short_session(20);
    let epochs = preprocess_recording(&ds.recording, &ds.markers(), &PipelineConfig::online_sim()).unwrap();
    let mut bytes = Vec::new();
    io::write_epoch_archive(&epochs, &mut bytes).unwrap();
    assert!(io::read_epoch_archive(&bytes[..bytes.len() - 8]).is_err());
    bytes.push(0);
    assert!(io::read_epoch_archive(&bytes[..]).is_err());
}

//! File formats: CSV recordings with a JSON sidecar, JSON events, JSON
//! models and a binary epoch archive.
//!
//! Epoch archive layout:
//!
//! ```text
//! magic        8 bytes   b"SCEPOCH1"
//! header_len   u64 LE
//! header       header_len bytes of UTF-8 JSON (ArchiveHeader)
//! samples      f64 LE, epoch by epoch, each [n_channels × n_window_samples] row-major
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{AnnotatedEvent, ConditionLabel, Epoch, LabeledEpochSet, MultichannelRecording, TimeWindow};
use crate::error::{Error, Result};
use crate::eval::{PipelineConfig, TrainedPipeline};
use crate::lda::{ClassMeans, LdaModel};
use crate::spatial::SpatialFilterModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const ARCHIVE_MAGIC: &[u8; 8] = b"SCEPOCH1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMetadata {
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub montage_name: String,
}

/// Writes the CSV body. Values use the shortest representation that parses
/// back to the identical `f64`.
pub fn write_recording_csv<W: Write>(recording: &MultichannelRecording, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(b"time_s")?;
    for name in recording.channel_names() {
        if name.contains(',') || name.contains('\n') {
            return Err(Error::Format(format!("channel name {name:?} not CSV-safe")));
        }
        write!(out, ",{name}")?;
    }
    out.write_all(b"\n")?;
    let data = recording.data();
    let rate = recording.sample_rate_hz();
    for s in 0..recording.n_samples() {
        write!(out, "{}", s as f64 / rate)?;
        for v in data.column(s) {
            write!(out, ",{v}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a CSV body against known metadata. The header must list the
/// metadata channels in order.
pub fn read_recording_csv<R: Read>(input: R, metadata: &RecordingMetadata) -> Result<MultichannelRecording> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))??;
    let mut cols = header.trim_end_matches('\r').split(',');
    if cols.next() != Some("time_s") {
        return Err(Error::Format("first CSV column must be time_s".into()));
    }
    let names: Vec<&str> = cols.collect();
    if names.len() != metadata.channel_names.len()
        || names.iter().zip(&metadata.channel_names).any(|(a, b)| *a != b)
    {
        return Err(Error::Format(format!(
            "CSV header {names:?} does not match metadata channels {:?}",
            metadata.channel_names
        )));
    }
    let n_ch = names.len();
    let mut flat = Vec::new();
    let mut n_rows = 0usize;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        fields.next();
        let before = flat.len();
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad number {f:?}", i + 2)))?;
            flat.push(v);
        }
        if flat.len() - before != n_ch {
            return Err(Error::Format(format!(
                "line {}: expected {n_ch} values, got {}",
                i + 2,
                flat.len() - before
            )));
        }
        n_rows += 1;
    }
    let data = Array2::from_shape_vec((n_rows, n_ch), flat)
        .map_err(|e| Error::Format(e.to_string()))?
        .reversed_axes()
        .as_standard_layout()
        .into_owned();
    MultichannelRecording::new(metadata.sample_rate_hz, metadata.channel_names.clone(), data)
}

pub fn metadata_of(recording: &MultichannelRecording, montage_name: &str) -> RecordingMetadata {
    RecordingMetadata {
        sample_rate_hz: recording.sample_rate_hz(),
        channel_names: recording.channel_names().to_vec(),
        montage_name: montage_name.to_string(),
    }
}

/// Sidecar path for a CSV: `x.csv` → `x.json`.
pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("json")
}

pub fn save_recording(recording: &MultichannelRecording, csv: &Path, montage_name: &str) -> Result<()> {
    write_recording_csv(recording, File::create(csv)?)?;
    save_json(&metadata_of(recording, montage_name), &sidecar_path(csv))
}

pub fn load_recording(csv: &Path) -> Result<MultichannelRecording> {
    let metadata: RecordingMetadata = load_json(&sidecar_path(csv))?;
    read_recording_csv(File::open(csv)?, &metadata)
}

pub fn validate_events(events: &[AnnotatedEvent]) -> Result<()> {
    match events.windows(2).position(|w| w[1].onset_sample <= w[0].onset_sample) {
        Some(i) => Err(Error::NonChronological(i + 1)),
        None => Ok(()),
    }
}

pub fn save_events(events: &[AnnotatedEvent], path: &Path) -> Result<()> {
    validate_events(events)?;
    save_json(&events, path)
}

pub fn load_events(path: &Path) -> Result<Vec<AnnotatedEvent>> {
    let events: Vec<AnnotatedEvent> = load_json(path)?;
    validate_events(&events)?;
    Ok(events)
}

pub fn save_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialFilterFile {
    /// One row per channel, one column per virtual channel.
    pub weights: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaFile {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
    pub class_means: ClassMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    /// Channel names the spatial filter expects, in order.
    pub montage: Vec<String>,
    pub spatial_filter: SpatialFilterFile,
    pub lda: LdaFile,
    pub pipeline_config: PipelineConfig,
}

impl From<&TrainedPipeline> for ModelFile {
    fn from(p: &TrainedPipeline) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            montage: p.spatial_filter.channel_names.clone(),
            spatial_filter: SpatialFilterFile {
                weights: p.spatial_filter.weights.outer_iter().map(|r| r.to_vec()).collect(),
                eigenvalues: p.spatial_filter.eigenvalues.clone(),
            },
            lda: LdaFile {
                w: p.lda.weights.clone(),
                b: p.lda.bias,
                lambda: p.lda.shrinkage_lambda,
                class_means: p.lda.class_means.clone(),
            },
            pipeline_config: p.config.clone(),
        }
    }
}

impl TryFrom<ModelFile> for TrainedPipeline {
    type Error = Error;

    fn try_from(m: ModelFile) -> Result<Self> {
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model format_version {}", m.format_version)));
        }
        let n_ch = m.montage.len();
        let n_virt = m.spatial_filter.eigenvalues.len();
        if m.spatial_filter.weights.len() != n_ch || m.spatial_filter.weights.iter().any(|r| r.len() != n_virt) {
            return Err(Error::Format(format!("spatial filter weights must be {n_ch}×{n_virt}")));
        }
        let weights = Array2::from_shape_vec((n_ch, n_virt), m.spatial_filter.weights.concat())
            .map_err(|e| Error::Format(e.to_string()))?;
        let dim = m.lda.w.len();
        if m.lda.class_means.comfort.len() != dim || m.lda.class_means.no_comfort.len() != dim {
            return Err(Error::Format("LDA class means do not match weight length".into()));
        }
        Ok(TrainedPipeline {
            spatial_filter: SpatialFilterModel {
                weights,
                eigenvalues: m.spatial_filter.eigenvalues,
                channel_names: m.montage,
            },
            lda: LdaModel {
                weights: m.lda.w,
                bias: m.lda.b,
                shrinkage_lambda: m.lda.lambda,
                class_means: m.lda.class_means,
            },
            config: m.pipeline_config,
        })
    }
}

pub fn save_model(model: &TrainedPipeline, path: &Path) -> Result<()> {
    save_json(&ModelFile::from(model), path)
}

pub fn load_model(path: &Path) -> Result<TrainedPipeline> {
    let file: ModelFile = load_json(path)?;
    file.try_into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ArchiveEpoch {
    label: ConditionLabel,
    onset_sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ArchiveHeader {
    sample_rate_hz: f64,
    channel_names: Vec<String>,
    window: TimeWindow,
    n_window_samples: usize,
    provenance: String,
    rejected_indices: Vec<usize>,
    epochs: Vec<ArchiveEpoch>,
}

pub fn write_epoch_archive<W: Write>(set: &LabeledEpochSet, out: W) -> Result<()> {
    set.check_consistent()?;
    let header = ArchiveHeader {
        sample_rate_hz: set.sample_rate_hz,
        channel_names: set.channel_names.clone(),
        window: set.window,
        n_window_samples: set.n_window_samples(),
        provenance: set.provenance.clone(),
        rejected_indices: set.rejected_indices.clone(),
        epochs: set
            .epochs
            .iter()
            .map(|e| ArchiveEpoch {
                label: e.label,
                onset_sample: e.onset_sample,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = BufWriter::new(out);
    out.write_all(ARCHIVE_MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for e in &set.epochs {
        for v in e.data.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_epoch_archive<R: Read>(input: R) -> Result<LabeledEpochSet> {
    let mut input = BufReader::new(input);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != ARCHIVE_MAGIC {
        return Err(Error::Format("not an epoch archive".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = usize::try_from(u64::from_le_bytes(len)).map_err(|e| Error::Format(e.to_string()))?;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let header: ArchiveHeader = serde_json::from_slice(&json)?;
    let shape = (header.channel_names.len(), header.n_window_samples);
    let mut buf = vec![0u8; shape.0 * shape.1 * 8];
    let mut epochs = Vec::with_capacity(header.epochs.len());
    for e in header.epochs {
        input.read_exact(&mut buf)?;
        let values: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        epochs.push(Epoch {
            data: Array2::from_shape_vec(shape, values).map_err(|e| Error::Format(e.to_string()))?,
            label: e.label,
            onset_sample: e.onset_sample,
        });
    }
    if input.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after epoch data".into()));
    }
    let set = LabeledEpochSet {
        sample_rate_hz: header.sample_rate_hz,
        channel_names: header.channel_names,
        window: header.window,
        epochs,
        provenance: header.provenance,
        rejected_indices: header.rejected_indices,
    };
    set.check_consistent()?;
    Ok(set)
}

pub fn save_epoch_archive(set: &LabeledEpochSet, path: &Path) -> Result<()> {
    write_epoch_archive(set, File::create(path)?)
}

pub fn load_epoch_archive(path: &Path) -> Result<LabeledEpochSet> {
    read_epoch_archive(File::open(path)?)
}

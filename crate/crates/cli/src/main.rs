//! `stereocomfort` command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stereocomfort::data::MONTAGE_NAME;
use stereocomfort::eval::{self, split_half};
use stereocomfort::stereo::{self, ComfortZoneSpec, TrialSchedule, ViewingGeometry};
use stereocomfort::synth::{self, CalibrationConfig, SynthConfig};
use stereocomfort::vote::{self, VoteConfig, VoteEstimate};
use stereocomfort::{io, EvaluationReport, PipelineConfig, PipelineMode};

#[derive(Debug, Parser)]
#[command(name = "stereocomfort", version, about = "Classify stereoscopic viewing comfort from EEG epochs")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Seed for every random draw made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON pipeline configuration (fields of PipelineConfig; missing fields take defaults).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Leave wall-clock timestamps out of written JSON so reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Offline,
    OnlineSim,
}

impl From<ModeArg> for PipelineMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Offline => PipelineMode::Offline,
            ModeArg::OnlineSim => PipelineMode::OnlineSim,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic session: recording CSV + metadata JSON + events JSON.
    Simulate {
        /// Output directory (created if missing).
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        /// Pink-noise scale in µV (default: the calibrated value).
        #[arg(long)]
        noise_scale: Option<f64>,
        /// Keep only the first N trials of the 480-trial schedule.
        #[arg(long, value_name = "N")]
        trials: Option<usize>,
        /// JSON generator configuration (fields of SynthConfig).
        #[arg(long, value_name = "PATH")]
        synth_config: Option<PathBuf>,
    },
    /// Vergence angle, screen disparity and comfort class of one depth.
    Geometry {
        /// Apparent object depth in meters.
        #[arg(long, allow_negative_numbers = true)]
        depth: f64,
        /// Interpupillary distance in meters.
        #[arg(long, default_value_t = 0.06)]
        ipd: f64,
        /// Viewer-to-screen distance in meters.
        #[arg(long, default_value_t = 1.0)]
        screen: f64,
    },
    /// Filter, epoch, reject and baseline-correct a recording into an epoch archive.
    Preprocess {
        /// Recording CSV (metadata sidecar read from the same stem with .json).
        #[arg(long, value_name = "CSV")]
        recording: PathBuf,
        /// Events JSON.
        #[arg(long, value_name = "JSON")]
        events: PathBuf,
        /// Epoch archive to write.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Overrides the configured pipeline mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Fit the spatial filter and LDA on the first half of an epoch archive.
    Train {
        #[arg(long, value_name = "PATH")]
        epochs: PathBuf,
        /// Model JSON to write.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
    },
    /// Score a model on the second half of an epoch archive.
    Test {
        #[arg(long, value_name = "PATH")]
        epochs: PathBuf,
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Report JSON to write.
        #[arg(long, value_name = "PATH")]
        report: PathBuf,
    },
    /// Monte Carlo majority-vote accuracies from a report's predictions.
    Vote {
        #[arg(long, value_name = "PATH")]
        report: PathBuf,
        /// Odd cluster sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        n: Vec<usize>,
        /// Monte Carlo draws per cluster size.
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        /// Optional JSON output.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Full run: preprocess, half split, train, test, voting, significance.
    Pipeline {
        #[arg(long, value_name = "CSV")]
        recording: PathBuf,
        #[arg(long, value_name = "JSON")]
        events: PathBuf,
        #[arg(long, value_enum, default_value = "offline")]
        mode: ModeArg,
        #[arg(long, value_name = "PATH")]
        report: PathBuf,
    },
    /// Search the pink-noise scale that brings median offline accuracy to a target.
    Calibrate {
        #[arg(long, default_value_t = 0.633)]
        target: f64,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        /// Generator seeds whose median accuracy is calibrated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        /// Noise scale bracket in µV: low,high.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1.5, 6.0])]
        bracket: Vec<f64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

/// JSON written by the report-producing commands.
#[derive(Debug, Serialize, Deserialize)]
struct ReportFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generated_at_unix_s: Option<u64>,
    seed: u64,
    report: EvaluationReport,
}

#[derive(Debug, Serialize)]
struct VoteFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix_s: Option<u64>,
    seed: u64,
    single_trial_accuracy: f64,
    votes: Vec<VoteEstimate>,
}

struct Ctx {
    seed: u64,
    deterministic: bool,
    config: PipelineConfig,
}

impl Ctx {
    fn timestamp(&self) -> Option<u64> {
        if self.deterministic {
            None
        } else {
            SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
        }
    }

    fn pipeline_config(&self, mode: Option<PipelineMode>) -> PipelineConfig {
        let config = match mode {
            Some(m) => self.config.with_mode(m),
            None => self.config.clone(),
        };
        seed_votes(config, self.seed)
    }

    fn write_report(&self, report: EvaluationReport, path: &Path) -> Result<()> {
        println!("{}", report.summary().trim_end());
        let file = ReportFile {
            generated_at_unix_s: self.timestamp(),
            seed: self.seed,
            report,
        };
        io::save_json(&file, path).with_context(|| format!("writing {}", path.display()))
    }
}

/// Vote seeds are drawn from the command seed.
fn seed_votes(mut config: PipelineConfig, seed: u64) -> PipelineConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in &mut config.votes {
        v.rng_seed = rng.random();
    }
    config
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let config = match path {
        Some(p) => io::load_json(p).with_context(|| format!("reading config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    Ok(config)
}

fn simulate(
    ctx: &Ctx,
    out_dir: &Path,
    noise_scale: Option<f64>,
    trials: Option<usize>,
    synth_config: Option<&Path>,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let schedule_seed: u64 = rng.random();
    let synth_seed: u64 = rng.random();
    let mut schedule = stereo::generate_schedule(&ComfortZoneSpec::default(), schedule_seed)?;
    if let Some(n) = trials {
        if n == 0 || n > schedule.trials.len() {
            bail!("--trials must be between 1 and {}", schedule.trials.len());
        }
        schedule = TrialSchedule {
            trials: schedule.trials[..n].to_vec(),
        };
    }
    let mut synth: SynthConfig = match synth_config {
        Some(p) => io::load_json(p).with_context(|| format!("reading {}", p.display()))?,
        None => SynthConfig::default(),
    };
    synth.rng_seed = synth_seed;
    if let Some(s) = noise_scale {
        synth.pink_noise_scale_uv = s;
    }
    let ds = synth::generate_recording(&synth, &schedule)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let csv = out_dir.join("recording.csv");
    io::save_recording(&ds.recording, &csv, MONTAGE_NAME)?;
    io::save_events(&ds.events, &out_dir.join("events.json"))?;
    io::save_json(&schedule, &out_dir.join("schedule.json"))?;
    io::save_json(&synth, &out_dir.join("synth_config.json"))?;
    println!(
        "wrote {} trials, {} samples × {} channels ({:.1} s) to {}",
        ds.events.len(),
        ds.recording.n_samples(),
        ds.recording.n_channels(),
        ds.recording.duration_s(),
        out_dir.display()
    );
    println!(
        "noise {} µV, {} planted artifact trials, {} blinks",
        synth.pink_noise_scale_uv,
        ds.artifact_trials.len(),
        ds.blink_times_s.len()
    );
    Ok(())
}

fn geometry(depth: f64, ipd: f64, screen: f64) -> Result<()> {
    let g = ViewingGeometry::new(ipd, screen)?;
    let vergence = stereo::vergence_angle(depth, &g)?;
    let disparity = stereo::screen_disparity(depth, &g)?;
    let class = stereo::classify_depth(depth, &ComfortZoneSpec::default())?;
    println!("depth      {depth} m");
    println!("vergence   {vergence:.6} rad ({:.4}°)", vergence.to_degrees());
    println!("disparity  {disparity:.6} m");
    println!("class      {class:?}");
    Ok(())
}

fn load_inputs(recording: &Path, events: &Path) -> Result<(stereocomfort::MultichannelRecording, Vec<stereocomfort::EventMarker>)> {
    let rec = io::load_recording(recording).with_context(|| format!("reading {}", recording.display()))?;
    let events = io::load_events(events).with_context(|| format!("reading {}", events.display()))?;
    Ok((rec, events.iter().map(|e| e.marker()).collect()))
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        seed: cli.common.seed,
        deterministic: cli.common.deterministic,
        config: load_config(cli.common.config.as_deref())?,
    };
    match cli.command {
        Command::Simulate {
            out_dir,
            noise_scale,
            trials,
            synth_config,
        } => simulate(&ctx, &out_dir, noise_scale, trials, synth_config.as_deref()),
        Command::Geometry { depth, ipd, screen } => geometry(depth, ipd, screen),
        Command::Preprocess {
            recording,
            events,
            out,
            mode,
        } => {
            let config = ctx.pipeline_config(mode.map(Into::into));
            let (rec, markers) = load_inputs(&recording, &events)?;
            let epochs = eval::preprocess_recording(&rec, &markers, &config)?;
            io::save_epoch_archive(&epochs, &out)?;
            println!(
                "{} epochs kept, {} rejected, {} samples × {} channels each",
                epochs.len(),
                epochs.rejected_indices.len(),
                epochs.n_window_samples(),
                epochs.n_channels()
            );
            Ok(())
        }
        Command::Train { epochs, model } => {
            let config = ctx.pipeline_config(None);
            let set = io::load_epoch_archive(&epochs)?;
            let (train_set, _) = split_half(&set)?;
            let trained = eval::train(&train_set, &config)?;
            io::save_model(&trained, &model)?;
            println!("trained on {} epochs", train_set.len());
            println!("shrinkage λ  {:.4}", trained.lda.shrinkage_lambda);
            println!("features     {}", trained.lda.feature_dim());
            let eig: Vec<String> = trained.spatial_filter.eigenvalues.iter().map(|v| format!("{v:.4}")).collect();
            println!("eigenvalues  {}", eig.join(" "));
            Ok(())
        }
        Command::Test { epochs, model, report } => {
            let set = io::load_epoch_archive(&epochs)?;
            let mut trained = io::load_model(&model)?;
            trained.config = seed_votes(trained.config, ctx.seed);
            let (train_set, test_set) = split_half(&set)?;
            let result = trained.evaluate(&test_set, train_set.len(), set.rejected_indices.len())?;
            ctx.write_report(result, &report)
        }
        Command::Vote { report, n, draws, out } => {
            let file: ReportFile = io::load_json(&report).with_context(|| format!("reading {}", report.display()))?;
            let pairs = file.report.truth_prediction_pairs();
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let mut votes = Vec::new();
            println!("single trial  {:.2}%", 100.0 * file.report.accuracy);
            for size in n {
                let cfg = VoteConfig {
                    cluster_size: size,
                    n_draws: draws,
                    rng_seed: rng.random(),
                };
                let est = vote::monte_carlo_cluster_accuracy(&pairs, &cfg)?;
                println!(
                    "n = {size:<2}        {:.2}% ± {:.2}  (closed form at single-trial accuracy {:.2}%)",
                    100.0 * est.accuracy,
                    100.0 * est.std_error,
                    100.0 * vote::binomial_vote_accuracy(file.report.accuracy, size)
                );
                votes.push(est);
            }
            if let Some(path) = out {
                let vf = VoteFile {
                    generated_at_unix_s: ctx.timestamp(),
                    seed: ctx.seed,
                    single_trial_accuracy: file.report.accuracy,
                    votes,
                };
                io::save_json(&vf, &path)?;
            }
            Ok(())
        }
        Command::Pipeline {
            recording,
            events,
            mode,
            report,
        } => {
            let config = ctx.pipeline_config(Some(mode.into()));
            let (rec, markers) = load_inputs(&recording, &events)?;
            let result = eval::run_pipeline(&rec, &markers, &config)?;
            ctx.write_report(result, &report)
        }
        Command::Calibrate {
            target,
            tolerance,
            seeds,
            bracket,
            out,
        } => {
            let cal_cfg = CalibrationConfig {
                target_accuracy: target,
                tolerance,
                seeds,
                bracket_uv: (bracket[0], bracket[1]),
                ..CalibrationConfig::default()
            };
            let schedule = stereo::generate_schedule(&ComfortZoneSpec::default(), ctx.seed)?;
            let config = ctx.pipeline_config(Some(PipelineMode::Offline));
            let cal = synth::calibrate_noise(&cal_cfg, &schedule, &SynthConfig::default(), &config)?;
            for step in &cal.steps {
                println!("noise {:>8.4} µV -> median accuracy {:.3}", step.noise_scale_uv, step.median_accuracy);
            }
            println!("calibrated noise scale {:.4} µV (median accuracy {:.3})", cal.noise_scale_uv, cal.median_accuracy);
            if let Some(path) = out {
                io::save_json(&cal, &path)?;
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

//! `sotkit` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 external
//! tracker failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::driver::TrackerCommand;
use crate::error::Error;
use crate::evaluation::{self, default_thresholds, overlap_series, EvalReport, SuccessCurve};
use crate::fusion::{backward_init_box, fuse, reverse_align, Choice, FusionMode, FusionPolicy, PassLabel};
use crate::geometry::{mask_to_bbox, BinaryMask};
use crate::interpolation::{smooth_tracklet, SmootherParams};
use crate::io::{parse_bbox_file, parse_manifest, result_path, write_bbox_file, DatasetManifest, Modality, ResultOrder, SequenceManifest};
use crate::synth::{self, DatasetSpec, Direction, ImageBounds, Motion, NoiseSpec};
use crate::tracklet::{stability_score, Tracklet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TRACKER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sotkit", version, about = "Tracklet smoothing, forward/backward fusion and success-plot evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smooth one box file with the iterative interpolation smoother.
    Smooth(SmoothArgs),
    /// Merge forward passes with backward passes for every sequence in a manifest.
    Fuse(FuseArgs),
    /// Evaluate result files against ground truth and print per-sequence AUC.
    Eval(EvalArgs),
    /// Export a success curve as CSV.
    Curve(CurveArgs),
    /// Write a synthetic dataset with ground truth and mock tracker outputs.
    Synth(SynthArgs),
    /// Smooth, optionally fuse with a backward pass, then evaluate.
    Pipeline(PipelineArgs),
    /// Convert a directory of mask files (sorted by name) into a box file.
    Mask2box(MaskArgs),
}

#[derive(Debug, Args, Clone, Copy)]
struct SmootherFlags {
    /// Flagging multiplier on the mean ratio change.
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    /// Convergence multiplier on the mean ratio change; must be >= alpha.
    #[arg(long, default_value_t = 3.5)]
    beta: f64,
    /// Upper bound on smoothing passes.
    #[arg(long = "max-iter", default_value_t = 10)]
    max_iter: usize,
}

impl SmootherFlags {
    fn params(&self) -> Result<SmootherParams, CliError> {
        SmootherParams::new(self.alpha, self.beta, self.max_iter).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
struct SmoothArgs {
    #[command(flatten)]
    smoother: SmootherFlags,
    /// Input box file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output box file.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-iteration log.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    SequenceSelect,
    PerFrameAgreement,
}

#[derive(Debug, Args)]
struct FusionFlags {
    /// Directory of forward results `<id>.txt`; omit to run --tracker-cmd forward.
    #[arg(long)]
    forward: Option<PathBuf>,
    /// Directory of backward results `<id>.txt`, ordered as the manifest's result_order says.
    #[arg(long)]
    backward: Option<PathBuf>,
    /// External tracker invoked as `CMD <frames-dir> <init-box-file> <output-file> <forward|backward>`.
    #[arg(long = "tracker-cmd")]
    tracker_cmd: Option<String>,
    /// Merge rule for the two passes.
    #[arg(long, value_enum, default_value_t = PolicyArg::SequenceSelect)]
    policy: PolicyArg,
    /// IoU at which per-frame-agreement keeps the forward box.
    #[arg(long = "agreement-iou", default_value_t = 0.5)]
    agreement_iou: f64,
    /// Only sequences whose forward stability score exceeds this get a backward pass.
    #[arg(long = "trigger-score", default_value_t = 0.0, allow_negative_numbers = true)]
    trigger_score: f64,
}

#[derive(Debug, Args)]
struct JobsFlag {
    /// Worker threads; 0 uses every available CPU.
    #[arg(long, env = "SOTKIT_JOBS", default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct FuseArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    fusion: FusionFlags,
    /// Output directory for fused `<id>.txt` files.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    jobs: JobsFlag,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Kv,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory holding `<id>.txt` result files in video order.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    jobs: JobsFlag,
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// Single prediction file (with --gt).
    #[arg(long, requires = "gt", conflicts_with_all = ["manifest", "results"])]
    pred: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Dataset manifest (with --results); the curve is the mean over sequences.
    #[arg(long, requires = "results")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    results: Option<PathBuf>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MotionArg {
    Linear,
    Sinusoidal,
    PiecewiseLinear,
    Mixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModalityArg {
    Rgb,
    Infrared,
    Depth,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "synth")]
    name: String,
    #[arg(long, default_value_t = 10)]
    sequences: usize,
    #[arg(long, default_value_t = 300)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = MotionArg::Mixed)]
    motion: MotionArg,
    #[arg(long, value_enum, default_value_t = ModalityArg::Rgb)]
    modality: ModalityArg,
    #[arg(long, default_value_t = 1280.0)]
    width: f64,
    #[arg(long, default_value_t = 720.0)]
    height: f64,
    /// Forward pass: Gaussian jitter sigma in pixels.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Forward pass: number of width spikes.
    #[arg(long = "spike-frames", default_value_t = 3)]
    spike_frames: usize,
    /// Width multiplier at spiked frames (both passes).
    #[arg(long = "spike-magnitude", default_value_t = 2.0)]
    spike_magnitude: f64,
    /// Forward pass: per-frame dropout probability.
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long = "backward-jitter", default_value_t = 0.0)]
    backward_jitter: f64,
    #[arg(long = "backward-spike-frames", default_value_t = 0)]
    backward_spike_frames: usize,
    #[arg(long = "backward-dropout", default_value_t = 0.0)]
    backward_dropout: f64,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    smoother: SmootherFlags,
    #[command(flatten)]
    fusion: FusionFlags,
    /// Output directory: tracks/, smoothing.tsv, fusion.tsv, report.txt.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    jobs: JobsFlag,
}

#[derive(Debug, Args)]
struct MaskArgs {
    /// Directory of mask files, one per frame (run-length text or P5 PGM).
    #[arg(long)]
    masks: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
    /// Already reported on stderr; carries the exit code.
    Exit(i32),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Driver { .. } => EXIT_TRACKER,
        _ => EXIT_DATA,
    }
}

/// Parses `argv` (including the program name), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Smooth(a) => cmd_smooth(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Mask2box(a) => cmd_mask2box(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
        Err(CliError::Exit(code)) => code,
    }
}

fn thread_pool(jobs: &JobsFlag) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", jobs.jobs)))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::Data(Error::io(path, e)))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(Error::io(dir, e)))
}

fn cmd_smooth(a: SmoothArgs) -> Result<(), CliError> {
    let params = a.smoother.params()?;
    let track = parse_bbox_file(&a.input)?;
    let outcome = smooth_tracklet(&track, &params)?;
    write_bbox_file(&outcome.track, &a.out)?;
    if let Some(report) = &a.report {
        write_text(report, &outcome.report())?;
    }
    eprintln!(
        "{}: {} iteration(s), converged={}",
        track.sequence_id, outcome.iterations_used, outcome.converged
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let manifest = parse_manifest(&a.manifest)?;
    let pool = thread_pool(&a.jobs)?;
    let report = pool.install(|| evaluation::evaluate_dataset(&manifest, &a.results))?;
    let text = match a.format {
        ReportFormat::Text => report.to_text(),
        ReportFormat::Kv => report.to_key_value(),
    };
    emit(a.out.as_deref(), &text)?;
    finish_report(&report)
}

fn finish_report(report: &EvalReport) -> Result<(), CliError> {
    for f in &report.failures {
        eprintln!("error: {}: {}", f.sequence_id, f.message);
    }
    if report.is_complete() {
        Ok(())
    } else {
        Err(CliError::Exit(EXIT_DATA))
    }
}

fn cmd_curve(a: CurveArgs) -> Result<(), CliError> {
    let grid = default_thresholds();
    let curve = match (&a.pred, &a.gt, &a.manifest, &a.results) {
        (Some(pred), Some(gt), None, None) => {
            let series = overlap_series(&parse_bbox_file(pred)?, &parse_bbox_file(gt)?)?;
            SuccessCurve::from_series(&series, &grid)?
        }
        (None, None, Some(manifest), Some(results)) => {
            let manifest = parse_manifest(manifest)?;
            if manifest.sequences.is_empty() {
                return Err(Error::domain("manifest has no sequences").into());
            }
            let curves = manifest
                .sequences
                .iter()
                .map(|seq| {
                    let (pred, gt) = evaluation::load_sequence_pair(seq, results)?;
                    SuccessCurve::from_series(&overlap_series(&pred, &gt)?, &grid)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            SuccessCurve::mean(&curves)?
        }
        _ => return Err(CliError::Usage("curve needs either --pred and --gt, or --manifest and --results".into())),
    };
    emit(a.out.as_deref(), &curve.to_csv())
}

fn cmd_synth(a: SynthArgs) -> Result<(), CliError> {
    let motion = match a.motion {
        MotionArg::Linear => Some(Motion::Linear),
        MotionArg::Sinusoidal => Some(Motion::Sinusoidal),
        MotionArg::PiecewiseLinear => Some(Motion::PiecewiseLinear),
        MotionArg::Mixed => None,
    };
    let modality = match a.modality {
        ModalityArg::Rgb => Modality::Rgb,
        ModalityArg::Infrared => Modality::Infrared,
        ModalityArg::Depth => Modality::Depth,
    };
    if !(a.width >= 1.0 && a.height >= 1.0) {
        return Err(CliError::Usage("image width and height must be at least 1".into()));
    }
    let forward_noise = NoiseSpec {
        jitter_sigma: a.jitter,
        spike_frames: a.spike_frames,
        spike_magnitude: a.spike_magnitude,
        dropout_prob: a.dropout,
        seed: 0,
        bounds: None,
    };
    let backward_noise = NoiseSpec {
        jitter_sigma: a.backward_jitter,
        spike_frames: a.backward_spike_frames,
        dropout_prob: a.backward_dropout,
        seed: 1,
        ..forward_noise
    };
    for noise in [&forward_noise, &backward_noise] {
        noise.validate(a.frames).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if a.frames < 2 || a.sequences == 0 {
        return Err(CliError::Usage("synth needs at least 1 sequence of at least 2 frames".into()));
    }
    let spec = DatasetSpec {
        name: a.name,
        sequences: a.sequences,
        frames: a.frames,
        motion,
        seed: a.seed,
        forward_noise,
        backward_noise,
        image_bounds: ImageBounds {
            width: a.width,
            height: a.height,
        },
        modality,
    };
    let manifest = synth::write_dataset(&spec, &a.out)?;
    eprintln!(
        "wrote {} sequences to {}",
        manifest.sequences.len(),
        a.out.join("manifest.toml").display()
    );
    Ok(())
}

fn cmd_mask2box(a: MaskArgs) -> Result<(), CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(&a.masks)
        .map_err(|e| Error::io(&a.masks, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(&a.masks, e)))
        .collect::<Result<Vec<_>, Error>>()?;
    files.retain(|p| p.is_file());
    files.sort();
    let mut boxes = Vec::with_capacity(files.len());
    for path in &files {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mask = BinaryMask::decode(&data).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                source_name: path.display().to_string(),
                line,
                message,
            },
            other => other,
        })?;
        boxes.push(mask_to_bbox(&mask));
    }
    let id = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    write_bbox_file(&Tracklet::new(id, boxes), &a.out)?;
    Ok(())
}

/// Where the backward pass comes from.
enum BackwardSource<'a> {
    Dir(&'a Path),
    Tracker(&'a TrackerCommand),
    None,
}

struct PassContext<'a> {
    forward_dir: Option<&'a Path>,
    tracker: Option<TrackerCommand>,
    backward_dir: Option<&'a Path>,
    work_dir: PathBuf,
    policy: FusionPolicy,
    trigger_score: f64,
    smoother: Option<SmootherParams>,
}

impl<'a> PassContext<'a> {
    fn new(flags: &'a FusionFlags, work_dir: PathBuf, smoother: Option<SmootherParams>, require_backward: bool) -> Result<Self, CliError> {
        let tracker = flags.tracker_cmd.as_deref().map(TrackerCommand::parse).transpose().map_err(|e| CliError::Usage(e.to_string()))?;
        if flags.forward.is_none() && tracker.is_none() {
            return Err(CliError::Usage("need --forward or --tracker-cmd".into()));
        }
        if require_backward && flags.backward.is_none() && tracker.is_none() {
            return Err(CliError::Usage("need --backward or --tracker-cmd for the backward pass".into()));
        }
        if !(0.0..=1.0).contains(&flags.agreement_iou) {
            return Err(CliError::Usage(format!("--agreement-iou must be in [0, 1], got {}", flags.agreement_iou)));
        }
        let mode = match flags.policy {
            PolicyArg::SequenceSelect => FusionMode::SequenceSelect,
            PolicyArg::PerFrameAgreement => FusionMode::PerFrameAgreement,
        };
        Ok(PassContext {
            forward_dir: flags.forward.as_deref(),
            tracker,
            backward_dir: flags.backward.as_deref(),
            work_dir,
            policy: FusionPolicy {
                mode,
                agreement_iou: flags.agreement_iou,
            },
            trigger_score: flags.trigger_score,
            smoother,
        })
    }

    fn backward_source(&self) -> BackwardSource<'_> {
        match (self.backward_dir, &self.tracker) {
            (Some(dir), _) => BackwardSource::Dir(dir),
            (None, Some(t)) => BackwardSource::Tracker(t),
            (None, None) => BackwardSource::None,
        }
    }
}

struct SequenceOutput {
    track: Tracklet,
    smoothing_line: Option<String>,
    fusion_line: String,
}

fn check_length(track: &Tracklet, seq: &SequenceManifest, what: &str) -> Result<(), Error> {
    if track.len() != seq.frame_count {
        return Err(Error::domain(format!(
            "sequence {}: {what} has {} frames, manifest says {}",
            seq.sequence_id,
            track.len(),
            seq.frame_count
        )));
    }
    Ok(())
}

fn frames_dir(seq: &SequenceManifest) -> Result<&Path, Error> {
    seq.frames_dir.as_deref().ok_or_else(|| Error::Driver {
        sequence: seq.sequence_id.clone(),
        message: "manifest has no frames_dir for the external tracker".into(),
    })
}

fn smooth_pass(track: Tracklet, params: Option<&SmootherParams>, label: &str, log: &mut Vec<String>) -> Result<Tracklet, Error> {
    match params {
        None => Ok(track),
        Some(p) => {
            let outcome = smooth_tracklet(&track, p)?;
            log.push(format!(
                "{}\t{label}\t{}\t{}\t{}",
                track.sequence_id, outcome.iterations_used, outcome.converged, outcome.final_max_delta
            ));
            Ok(outcome.track)
        }
    }
}

fn process_sequence(seq: &SequenceManifest, ctx: &PassContext<'_>) -> Result<SequenceOutput, Error> {
    let id = &seq.sequence_id;
    let forward = match (ctx.forward_dir, &ctx.tracker) {
        (Some(dir), _) => parse_bbox_file(&result_path(dir, id))?,
        (None, Some(tracker)) => tracker.run(id, frames_dir(seq)?, &seq.init_box, &ctx.work_dir, Direction::Forward)?,
        (None, None) => unreachable!("checked when the context was built"),
    };
    check_length(&forward, seq, "forward result")?;
    let mut smoothing = Vec::new();
    let forward = smooth_pass(forward, ctx.smoother.as_ref(), "forward", &mut smoothing)?;
    let forward_score = stability_score(&forward)?;

    let source = ctx.backward_source();
    if matches!(source, BackwardSource::None) || forward_score <= ctx.trigger_score {
        let fusion_line = format!("{id}\tforward-only\t{forward_score}\t-\t{forward_score}");
        return Ok(SequenceOutput {
            track: forward,
            smoothing_line: join_lines(smoothing),
            fusion_line,
        });
    }
    let backward = match source {
        BackwardSource::Dir(dir) => {
            let raw = parse_bbox_file(&result_path(dir, id))?;
            match seq.result_order {
                ResultOrder::Video => raw,
                ResultOrder::Processing => reverse_align(&raw),
            }
        }
        BackwardSource::Tracker(tracker) => {
            let init = backward_init_box(&forward)?;
            reverse_align(&tracker.run(id, frames_dir(seq)?, &init, &ctx.work_dir, Direction::Backward)?)
        }
        BackwardSource::None => unreachable!(),
    };
    check_length(&backward, seq, "backward result")?;
    let backward = smooth_pass(backward, ctx.smoother.as_ref(), "backward", &mut smoothing)?;
    let outcome = fuse(&forward, &backward, &ctx.policy)?;
    let chosen = match &outcome.chosen {
        Choice::Sequence(label) => label.to_string(),
        Choice::PerFrame(labels) => {
            let backward_frames = labels.iter().filter(|l| **l == PassLabel::Backward).count();
            format!("per-frame:{backward_frames}/{}", labels.len())
        }
    };
    let s = outcome.scores;
    Ok(SequenceOutput {
        track: outcome.track,
        smoothing_line: join_lines(smoothing),
        fusion_line: format!("{id}\t{chosen}\t{}\t{}\t{}", s.forward, s.backward, s.fused),
    })
}

fn join_lines(lines: Vec<String>) -> Option<String> {
    (!lines.is_empty()).then(|| lines.join("\n"))
}

struct BatchResult {
    outputs: Vec<(String, Result<SequenceOutput, Error>)>,
}

impl BatchResult {
    fn run(manifest: &DatasetManifest, ctx: &PassContext<'_>, pool: &rayon::ThreadPool) -> Self {
        let outputs = pool.install(|| {
            manifest
                .sequences
                .par_iter()
                .map(|seq| (seq.sequence_id.clone(), process_sequence(seq, ctx)))
                .collect()
        });
        BatchResult { outputs }
    }

    fn write_tracks(&self, dir: &Path) -> Result<(), CliError> {
        create_dir(dir)?;
        for (id, out) in &self.outputs {
            if let Ok(out) = out {
                write_bbox_file(&out.track, &result_path(dir, id))?;
            }
        }
        Ok(())
    }

    fn fusion_table(&self) -> String {
        let mut text = String::from("sequence\tchosen\tforward_score\tbackward_score\tfused_score\n");
        for (_, out) in &self.outputs {
            if let Ok(out) = out {
                let _ = writeln!(text, "{}", out.fusion_line);
            }
        }
        text
    }

    fn smoothing_table(&self) -> String {
        let mut text = String::from("sequence\tpass\titerations\tconverged\tfinal_max_delta\n");
        for (_, out) in &self.outputs {
            if let Some(line) = out.as_ref().ok().and_then(|o| o.smoothing_line.as_ref()) {
                let _ = writeln!(text, "{line}");
            }
        }
        text
    }

    /// Reports failures on stderr and returns the worst exit code.
    fn failure_code(&self) -> i32 {
        let mut code = EXIT_OK;
        for (id, out) in &self.outputs {
            if let Err(e) = out {
                eprintln!("error: {id}: {e}");
                code = code.max(exit_code_for(e));
            }
        }
        code
    }
}

fn manifest_for_batch(path: &Path) -> Result<DatasetManifest, CliError> {
    let manifest = parse_manifest(path)?;
    if manifest.sequences.is_empty() {
        return Err(Error::domain(format!("manifest {} has no sequences", path.display())).into());
    }
    Ok(manifest)
}

fn cmd_fuse(a: FuseArgs) -> Result<(), CliError> {
    let manifest = manifest_for_batch(&a.manifest)?;
    let ctx = PassContext::new(&a.fusion, a.out.join("tracker"), None, true)?;
    let pool = thread_pool(&a.jobs)?;
    let batch = BatchResult::run(&manifest, &ctx, &pool);
    batch.write_tracks(&a.out)?;
    print!("{}", batch.fusion_table());
    match batch.failure_code() {
        EXIT_OK => Ok(()),
        code => Err(CliError::Exit(code)),
    }
}

fn cmd_pipeline(a: PipelineArgs) -> Result<(), CliError> {
    let params = a.smoother.params()?;
    let manifest = manifest_for_batch(&a.manifest)?;
    let ctx = PassContext::new(&a.fusion, a.out.join("tracker"), Some(params), false)?;
    let pool = thread_pool(&a.jobs)?;
    let batch = BatchResult::run(&manifest, &ctx, &pool);
    let tracks = a.out.join("tracks");
    batch.write_tracks(&tracks)?;
    write_text(&a.out.join("smoothing.tsv"), &batch.smoothing_table())?;
    write_text(&a.out.join("fusion.tsv"), &batch.fusion_table())?;
    let report = pool.install(|| evaluation::evaluate_dataset(&manifest, &tracks))?;
    let text = report.to_text();
    write_text(&a.out.join("report.txt"), &text)?;
    print!("{text}");
    match batch.failure_code() {
        EXIT_OK => finish_report(&report),
        code => {
            let _ = finish_report(&report);
            Err(CliError::Exit(code))
        }
    }
}

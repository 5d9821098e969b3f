//! Command-line front end: composable subcommands for generating synthetic
//! scenarios, tracking, tracklet re-linking, ensemble merging, and
//! evaluation.
//!
//! Every command is a pure function of its inputs and flags — reruns produce
//! byte-identical outputs — and drops a `RunManifest` beside each output
//! recording the fully resolved configuration.
//!
//! Exit codes: `0` success, `1` input/data errors, `2` configuration errors.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tracklink::assoc::{track_video, AssocConfig};
use tracklink::eval::{box_map_iou, evaluate, oracle_tracks, EvalReport};
use tracklink::ingest::{
    load_dataset, load_ground_truth_file, read_result_records, read_results, read_sidecar,
    write_detection_file, write_ground_truth_file, write_result_records, write_results,
    write_sidecar, ResultRecord,
};
use tracklink::model::{BoundingBox, EmbeddingStore, SequenceDataset, Track};
use tracklink::postproc::{attach_embeddings, concat_stores, filter_categories, post_associate, PaConfig};
use tracklink::sortbase::{sort_track_video, SortConfig};
use tracklink::synth::{generate, ScenarioSpec};
use tracklink::Error;

// ---------------------------------------------------------------------------
// Failure type and exit-code mapping
// ---------------------------------------------------------------------------

/// Input errors exit with 1.
const EXIT_INPUT: u8 = 1;
/// Configuration errors exit with 2.
const EXIT_CONFIG: u8 = 2;

/// A diagnosed failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    /// Domain errors map onto the exit-code contract: spec violations and
    /// empty whitelists are configuration mistakes, everything else is a
    /// problem with the input data.
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Spec { .. } | Error::EmptyWhitelist => EXIT_CONFIG,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::input(err.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "tracklink",
    version,
    about = "Appearance-embedding multi-object tracking pipeline",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario: detections, embeddings, ground truth.
    Synth(SynthArgs),
    /// Link detections into tracks.
    Track(TrackArgs),
    /// Re-link temporally disjoint tracklets by mean appearance.
    Pa(PaArgs),
    /// Merge two result files into one.
    Merge(MergeArgs),
    /// Score a result file against ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario spec as JSON; defaults apply for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the scenario spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for dets.json, dets.emb, gt.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TrackerKind {
    /// Appearance-embedding tracker on the keyframe grid.
    Appearance,
    /// Kalman/IoU baseline.
    Sort,
}

#[derive(Args)]
struct TrackArgs {
    /// Which tracker to run.
    #[arg(long, value_enum)]
    tracker: TrackerKind,
    /// Detection file.
    #[arg(long)]
    dets: PathBuf,
    /// Embedding sidecar; overrides the path named in the detection file.
    #[arg(long)]
    emb: Option<PathBuf>,
    /// Second embedding sidecar, concatenated feature-wise with the first.
    #[arg(long)]
    emb2: Option<PathBuf>,
    /// Newline-separated category ids; detections outside the list are
    /// dropped before tracking.
    #[arg(long)]
    whitelist: Option<PathBuf>,
    /// Tracker configuration as JSON (appearance or sort schema).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Appearance: max cosine distance. Sort: min IoU for a match.
    #[arg(long)]
    gate: Option<f64>,
    /// Appearance only: embeddings kept per track gallery.
    #[arg(long)]
    gallery: Option<usize>,
    /// Unmatched frames a track survives before retiring.
    #[arg(long)]
    max_age: Option<usize>,
    /// Worker threads across videos; output order does not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Result file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PaArgs {
    /// Result file to re-link.
    #[arg(long)]
    results: PathBuf,
    /// Detection file the results were produced from (for embeddings).
    #[arg(long)]
    dets: PathBuf,
    /// Embedding sidecar; overrides the path named in the detection file.
    #[arg(long)]
    emb: Option<PathBuf>,
    /// Second embedding sidecar, concatenated feature-wise with the first.
    #[arg(long)]
    emb2: Option<PathBuf>,
    /// Post-association configuration as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Max cosine distance between tracklet means for a merge.
    #[arg(long)]
    tau: Option<f64>,
    /// Max keyframe gap between merged tracklets (adjacent = 1).
    #[arg(long)]
    max_gap: Option<usize>,
    /// Result file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MergeArgs {
    /// First result file; keeps its track ids.
    a: PathBuf,
    /// Second result file; track ids are shifted past the first file's.
    b: PathBuf,
    /// Drop same-category near-duplicates (track IoU at or above this)
    /// keeping the higher-scoring track. Off when absent.
    #[arg(long)]
    dedup_iou: Option<f64>,
    /// Result file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Result file to score (omit with --oracle).
    #[arg(long)]
    results: Option<PathBuf>,
    /// Ground-truth file.
    #[arg(long)]
    gt: PathBuf,
    /// Track IoU threshold for a true positive.
    #[arg(long, default_value_t = 0.5)]
    iou_thresh: f64,
    /// Score the detection oracle instead of a result file.
    #[arg(long)]
    oracle: bool,
    /// Detection file; required with --oracle.
    #[arg(long)]
    dets: Option<PathBuf>,
    /// Embedding sidecar override for --dets (embeddings are not scored).
    #[arg(long)]
    emb: Option<PathBuf>,
    /// Where to write the report JSON; the table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Provenance record written beside every output.
#[derive(Serialize)]
struct RunManifest {
    /// Subcommand that produced the output.
    command: String,
    /// Tool version.
    version: String,
    /// Input paths by role.
    inputs: BTreeMap<String, String>,
    /// Files the command wrote.
    outputs: Vec<String>,
    /// Fully resolved configuration, defaults materialized.
    config: serde_json::Value,
    /// Seed the run used, when randomness was involved.
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Wall-clock duration of the command.
    duration_ms: u64,
}

/// Manifest location for an output path: `DIR/manifest.json` for a
/// directory, `NAME.manifest.json` beside a file.
fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("manifest.json")
    } else {
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".to_string());
        out.with_file_name(format!("{stem}.manifest.json"))
    }
}

/// Serializes a value as pretty JSON with a trailing newline and writes it
/// atomically (temp file + rename) so a crash never leaves a torn file.
fn write_json_atomic<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    text.push('\n');
    let tmp = path.with_file_name(format!(
        "{}.tmp",
        path.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".to_string())
    ));
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Builds and writes the manifest for a finished command.
fn write_manifest(
    command: &str,
    inputs: &[(&str, &Path)],
    outputs: &[&Path],
    config: serde_json::Value,
    seed: Option<u64>,
    started: Instant,
    out: &Path,
) -> CliResult<()> {
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs: inputs
            .iter()
            .map(|(role, path)| (role.to_string(), path.display().to_string()))
            .collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        config,
        seed,
        duration_ms: started.elapsed().as_millis() as u64,
    };
    write_json_atomic(&manifest, &manifest_path(out))
}

// ---------------------------------------------------------------------------
// Shared loading helpers
// ---------------------------------------------------------------------------

/// Parses an optional JSON config file into a config struct, using the
/// type's defaults when no file is given. Unknown fields are rejected.
fn load_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))
}

/// Loads the dataset plus its embedding store, concatenating a second
/// sidecar feature-wise when given.
fn load_with_embeddings(
    dets: &Path,
    emb: Option<&Path>,
    emb2: Option<&Path>,
) -> CliResult<(SequenceDataset, EmbeddingStore)> {
    let (dataset, store) = load_dataset(dets, emb, None)?;
    let store = match emb2 {
        Some(path) => {
            let second = read_sidecar(path)?;
            concat_stores(&store, &second)?
        }
        None => store,
    };
    Ok((dataset, store))
}

/// Reads a newline-separated category-id whitelist.
fn load_whitelist(path: &Path) -> CliResult<BTreeSet<u64>> {
    let text = std::fs::read_to_string(path)?;
    let mut ids = BTreeSet::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id: u64 = line.parse().map_err(|_| {
            Failure::config(format!(
                "{}:{}: '{line}' is not a category id",
                path.display(),
                number + 1
            ))
        })?;
        ids.insert(id);
    }
    Ok(ids)
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut spec: ScenarioSpec = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (dataset, store) = generate(&spec)?;

    std::fs::create_dir_all(&args.out)?;
    let det_path = args.out.join("dets.json");
    let emb_path = args.out.join("dets.emb");
    let gt_path = args.out.join("gt.json");
    if store.is_empty() {
        write_detection_file(&dataset, None, &det_path)?;
    } else {
        write_detection_file(&dataset, Some(("dets.emb", &store)), &det_path)?;
        write_sidecar(&store, &emb_path)?;
    }
    write_ground_truth_file(&dataset, &gt_path)?;

    let mut outputs: Vec<&Path> = vec![&det_path, &gt_path];
    if !store.is_empty() {
        outputs.insert(1, &emb_path);
    }
    let config = serde_json::to_value(&spec).expect("spec serializes");
    let inputs: Vec<(&str, &Path)> = args
        .config
        .as_deref()
        .map(|p| vec![("config", p)])
        .unwrap_or_default();
    write_manifest(
        "synth",
        &inputs,
        &outputs,
        config,
        Some(spec.seed),
        started,
        &args.out,
    )?;
    eprintln!(
        "synth: {} detections, {} ground-truth tracks -> {}",
        dataset.detection_count(),
        dataset.ground_truth().len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// track
// ---------------------------------------------------------------------------

/// Applies a whitelist to a dataset's detections (order-preserving).
fn apply_whitelist(
    dataset: SequenceDataset,
    whitelist: Option<&Path>,
) -> CliResult<SequenceDataset> {
    let Some(path) = whitelist else {
        return Ok(dataset);
    };
    let ids = load_whitelist(path)?;
    let detections: Vec<_> = dataset.all_detections().cloned().collect();
    let kept = filter_categories(detections, &ids)?;
    Ok(dataset.with_detections(kept)?)
}

/// Runs a per-video tracking closure over all videos on a sized thread
/// pool, flattening in video order regardless of thread count.
fn run_per_video<F>(dataset: &SequenceDataset, jobs: usize, per_video: F) -> CliResult<Vec<Track>>
where
    F: Fn(u64) -> tracklink::Result<Vec<Track>> + Sync,
{
    if jobs == 0 {
        return Err(Failure::config("--jobs must be at least 1"));
    }
    let video_ids = dataset.video_ids();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::config(format!("cannot build thread pool: {e}")))?;
    let per_video_results: Vec<tracklink::Result<Vec<Track>>> = pool.install(|| {
        use rayon::prelude::*;
        video_ids.par_iter().map(|vid| per_video(*vid)).collect()
    });
    let mut tracks = Vec::new();
    for result in per_video_results {
        tracks.extend(result?);
    }
    Ok(tracks)
}

fn cmd_track(args: &TrackArgs) -> CliResult<()> {
    let started = Instant::now();
    let (dataset, store) = load_with_embeddings(
        &args.dets,
        args.emb.as_deref(),
        args.emb2.as_deref(),
    )?;
    let dataset = apply_whitelist(dataset, args.whitelist.as_deref())?;

    let (tracks, config) = match args.tracker {
        TrackerKind::Appearance => {
            if store.is_empty() {
                return Err(Failure::config(
                    "the appearance tracker needs embeddings: the detection file declares \
                     neither a sidecar nor inline embeddings and no --emb was given",
                ));
            }
            let mut cfg: AssocConfig = load_config(args.config.as_deref())?;
            if let Some(gate) = args.gate {
                cfg.max_cosine_distance = gate;
            }
            if let Some(gallery) = args.gallery {
                cfg.gallery_budget = gallery;
            }
            if let Some(max_age) = args.max_age {
                cfg.max_age = max_age;
            }
            cfg.validate()?;
            let tracks = run_per_video(&dataset, args.jobs, |vid| {
                track_video(&dataset, vid, &store, &cfg)
            })?;
            (tracks, serde_json::to_value(&cfg).expect("config serializes"))
        }
        TrackerKind::Sort => {
            if args.gallery.is_some() {
                return Err(Failure::config(
                    "--gallery applies only to the appearance tracker",
                ));
            }
            let mut cfg: SortConfig = load_config(args.config.as_deref())?;
            if let Some(gate) = args.gate {
                cfg.iou_gate = gate;
            }
            if let Some(max_age) = args.max_age {
                cfg.max_age = max_age;
            }
            cfg.validate()?;
            let tracks = run_per_video(&dataset, args.jobs, |vid| {
                sort_track_video(&dataset, vid, &cfg)
            })?;
            (tracks, serde_json::to_value(&cfg).expect("config serializes"))
        }
    };

    write_results(&tracks, &dataset, &args.out)?;
    let mut inputs: Vec<(&str, &Path)> = vec![("dets", args.dets.as_path())];
    for (role, path) in [
        ("emb", args.emb.as_deref()),
        ("emb2", args.emb2.as_deref()),
        ("whitelist", args.whitelist.as_deref()),
        ("config", args.config.as_deref()),
    ] {
        if let Some(path) = path {
            inputs.push((role, path));
        }
    }
    write_manifest("track", &inputs, &[&args.out], config, None, started, &args.out)?;
    eprintln!(
        "track: {} tracks over {} videos -> {}",
        tracks.len(),
        dataset.video_ids().len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// pa
// ---------------------------------------------------------------------------

fn cmd_pa(args: &PaArgs) -> CliResult<()> {
    let started = Instant::now();
    let (dataset, store) = load_with_embeddings(
        &args.dets,
        args.emb.as_deref(),
        args.emb2.as_deref(),
    )?;
    let tracks = read_results(&args.results, &dataset)?;
    let tracks = attach_embeddings(tracks, &dataset, &store)?;

    let mut cfg: PaConfig = load_config(args.config.as_deref())?;
    if let Some(tau) = args.tau {
        cfg.similarity_threshold = tau;
    }
    if let Some(max_gap) = args.max_gap {
        cfg.max_gap = Some(max_gap);
    }
    cfg.validate()?;

    let before = tracks.len();
    let relinked = post_associate(tracks, &cfg)?;
    write_results(&relinked, &dataset, &args.out)?;

    let mut inputs: Vec<(&str, &Path)> = vec![
        ("results", args.results.as_path()),
        ("dets", args.dets.as_path()),
    ];
    for (role, path) in [
        ("emb", args.emb.as_deref()),
        ("emb2", args.emb2.as_deref()),
        ("config", args.config.as_deref()),
    ] {
        if let Some(path) = path {
            inputs.push((role, path));
        }
    }
    let config = serde_json::to_value(&cfg).expect("config serializes");
    write_manifest("pa", &inputs, &[&args.out], config, None, started, &args.out)?;
    eprintln!(
        "pa: {} tracks in, {} tracks out -> {}",
        before,
        relinked.len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// merge
// ---------------------------------------------------------------------------

/// Minimal per-track aggregate reconstructed from records: enough for id
/// remapping and duplicate suppression without the original dataset.
struct RecordTrack {
    video_id: u64,
    track_id: u64,
    category_id: u64,
    score: f64,
    boxes: BTreeMap<u64, BoundingBox>,
    records: Vec<ResultRecord>,
}

/// Groups a record list into per-track aggregates, validating category
/// consistency inside each track.
fn group_records(records: Vec<ResultRecord>, path: &Path) -> CliResult<Vec<RecordTrack>> {
    let mut order: Vec<(u64, u64)> = Vec::new();
    let mut grouped: BTreeMap<(u64, u64), Vec<ResultRecord>> = BTreeMap::new();
    for record in records {
        let key = (record.video_id, record.track_id);
        if !grouped.contains_key(&key) {
            order.push(key);
        }
        grouped.entry(key).or_default().push(record);
    }
    let mut tracks = Vec::with_capacity(order.len());
    for key in order {
        let records = grouped.remove(&key).expect("key collected above");
        let category_id = records[0].category_id;
        if records.iter().any(|r| r.category_id != category_id) {
            return Err(Failure::input(format!(
                "{}: track {} of video {} mixes categories",
                path.display(),
                key.1,
                key.0
            )));
        }
        let mut boxes = BTreeMap::new();
        for record in &records {
            let bbox = BoundingBox::from_array(record.bbox)?;
            boxes.insert(record.image_id, bbox);
        }
        let score =
            records.iter().map(|r| r.score).sum::<f64>() / records.len() as f64;
        tracks.push(RecordTrack {
            video_id: key.0,
            track_id: key.1,
            category_id,
            score,
            boxes,
            records,
        });
    }
    Ok(tracks)
}

fn cmd_merge(args: &MergeArgs) -> CliResult<()> {
    let started = Instant::now();
    if let Some(threshold) = args.dedup_iou {
        if !threshold.is_finite() || !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Failure::config(format!(
                "--dedup-iou {threshold} outside (0, 1]"
            )));
        }
    }
    let first = group_records(read_result_records(&args.a)?, &args.a)?;
    let mut second = group_records(read_result_records(&args.b)?, &args.b)?;

    // Same id discipline as the library merge: ids of the second file are
    // shifted past the first file's global maximum; an empty first file
    // passes the second through untouched.
    let offset = first
        .iter()
        .map(|t| t.track_id)
        .max()
        .map_or(0, |max_id| max_id + 1);
    for track in &mut second {
        track.track_id += offset;
        for record in &mut track.records {
            record.track_id += offset;
        }
    }

    let mut union: Vec<RecordTrack> = first;
    union.extend(second);

    if let Some(threshold) = args.dedup_iou {
        // Greedy suppression by descending score, ties by (video, id).
        union.sort_by(|x, y| {
            y.score
                .partial_cmp(&x.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.video_id.cmp(&y.video_id))
                .then(x.track_id.cmp(&y.track_id))
        });
        let mut kept: Vec<RecordTrack> = Vec::new();
        'candidates: for track in union {
            for other in &kept {
                if other.video_id == track.video_id
                    && other.category_id == track.category_id
                    && box_map_iou(&track.boxes, &other.boxes) >= threshold
                {
                    continue 'candidates;
                }
            }
            kept.push(track);
        }
        union = kept;
    }

    union.sort_by_key(|t| (t.video_id, t.track_id));
    let records: Vec<ResultRecord> = union
        .into_iter()
        .flat_map(|t| t.records)
        .collect();
    write_result_records(&records, &args.out)?;

    let config = serde_json::json!({ "dedup_iou": args.dedup_iou });
    write_manifest(
        "merge",
        &[("a", args.a.as_path()), ("b", args.b.as_path())],
        &[&args.out],
        config,
        None,
        started,
        &args.out,
    )?;
    eprintln!("merge: {} records -> {}", records.len(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let started = Instant::now();
    if !(args.iou_thresh.is_finite() && args.iou_thresh > 0.0 && args.iou_thresh <= 1.0) {
        return Err(Failure::config(format!(
            "--iou-thresh {} outside (0, 1]",
            args.iou_thresh
        )));
    }

    let report: EvalReport;
    let mut inputs: Vec<(&str, &Path)> = vec![("gt", args.gt.as_path())];
    if args.oracle {
        let Some(dets) = args.dets.as_deref() else {
            return Err(Failure::config("--oracle needs --dets"));
        };
        if args.results.is_some() {
            return Err(Failure::config(
                "--oracle scores the detections themselves; drop --results",
            ));
        }
        let (dataset, _store) = load_dataset(dets, args.emb.as_deref(), Some(args.gt.as_path()))?;
        let tracks = oracle_tracks(&dataset)?;
        let mut oracle_report = evaluate(&tracks, dataset.ground_truth(), args.iou_thresh);
        oracle_report.oracle = true;
        report = oracle_report;
        inputs.push(("dets", dets));
        if let Some(emb) = args.emb.as_deref() {
            inputs.push(("emb", emb));
        }
    } else {
        let Some(results) = args.results.as_deref() else {
            return Err(Failure::config("--results is required without --oracle"));
        };
        let gt_dataset = load_ground_truth_file(&args.gt)?;
        let tracks = read_results(results, &gt_dataset)?;
        report = evaluate(&tracks, gt_dataset.ground_truth(), args.iou_thresh);
        inputs.push(("results", results));
    }

    print!("{}", report.table());
    if let Some(out) = args.out.as_deref() {
        write_json_atomic(&report, out)?;
        let config = serde_json::json!({
            "iou_thresh": args.iou_thresh,
            "oracle": args.oracle,
        });
        write_manifest("eval", &inputs, &[out], config, None, started, out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Track(args) => cmd_track(args),
        Command::Pa(args) => cmd_pa(args),
        Command::Merge(args) => cmd_merge(args),
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

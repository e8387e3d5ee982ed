//! Command line front end for the dataset and evaluation toolchain.
//!
//! Subcommands mirror the pipeline stages: ingest raw annotations, generate
//! the QA dataset, assign in-context exemplars, evaluate predictions, and
//! render the score report. Relative paths inside the config file resolve
//! against the config file's directory; paths given on the command line
//! resolve as typed.
//!
//! Exit codes: 0 on success; 1 on operational failures (missing files,
//! malformed config or stores); 2 on contract violations (reject rate above
//! the configured limit, duplicate or unknown prediction ids, an empty
//! exemplar pool or score set). Set STQA_LOG to any non-empty value for
//! per-record diagnostics on stderr.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use stqa_core::config::{resolve_path, Config};
use stqa_core::events::{broadcast_sparse_labels, ingest_annotations, segment_clips};
use stqa_core::metrics::{aggregate_scores, evaluate_predictions, EvalError, EvalResult};
use stqa_core::qa::exemplar::ExemplarError;
use stqa_core::qa::{build_exemplar_map, generate_dataset, ClipBundle, TemplateRegistry};
use stqa_core::report::{build_report, to_json, to_tsv};
use stqa_core::store::{self, TupleRow};
use stqa_core::vocab::Vocabulary;

#[derive(Parser)]
#[command(
    name = "stqa",
    version,
    about = "Deterministic spatial-temporal QA dataset generation and rule-based evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Densify raw annotations and segment them into clip-relative stores.
    Ingest {
        #[command(flatten)]
        common: Common,
    },
    /// Generate the QA dataset from the ingested stores.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Assign one in-context exemplar to every non-train sample.
    Exemplars {
        #[command(flatten)]
        common: Common,
        /// JSONL split assignment, rows of {sample_id, split}.
        #[arg(long)]
        split: PathBuf,
        /// Dataset to draw from; defaults to the generated one.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score free-text predictions against the dataset gold.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// JSONL predictions, rows of {sample_id, output}.
        #[arg(long)]
        predictions: PathBuf,
        /// Dataset to score against; defaults to the generated one.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Render the per-task score table from stored per-sample scores.
    Report {
        #[command(flatten)]
        common: Common,
        /// Score store to aggregate; defaults to the evaluated one.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
}

fn log_enabled() -> bool {
    std::env::var_os("STQA_LOG").map(|v| !v.is_empty()).unwrap_or(false)
}

/// Loaded config plus the directories everything resolves against.
struct Ctx {
    config: Config,
    config_dir: PathBuf,
    out: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self> {
        let mut config = Config::load(&common.config)
            .with_context(|| format!("loading config {}", common.config.display()))?;
        if let Some(seed) = common.seed {
            config.generation.master_seed = seed;
        }
        let config_dir = common
            .config
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        let out = match &common.out {
            Some(p) => p.clone(),
            None => resolve_path(&config_dir, &config.paths.output),
        };
        fs::create_dir_all(&out)
            .with_context(|| format!("creating output directory {}", out.display()))?;
        Ok(Self { config, config_dir, out })
    }

    fn in_config_dir(&self, p: &Path) -> PathBuf {
        resolve_path(&self.config_dir, p)
    }

    fn vocab(&self) -> Result<Vocabulary> {
        let path = self.in_config_dir(&self.config.paths.vocab);
        Vocabulary::load(&path).with_context(|| format!("loading vocabulary {}", path.display()))
    }

    fn registry(&self) -> Result<TemplateRegistry> {
        match &self.config.paths.templates {
            None => Ok(TemplateRegistry::default_registry()),
            Some(p) => {
                let path = self.in_config_dir(p);
                TemplateRegistry::load(&path)
                    .with_context(|| format!("loading templates {}", path.display()))
            }
        }
    }
}

fn cmd_ingest(common: &Common) -> Result<ExitCode> {
    let ctx = Ctx::new(common)?;
    let vocab = ctx.vocab()?;
    let cfg = &ctx.config.ingest;
    let path = ctx.in_config_dir(&ctx.config.paths.annotations);
    let reader = BufReader::new(
        File::open(&path).with_context(|| format!("opening annotations {}", path.display()))?,
    );
    let result = ingest_annotations(reader, &vocab)?;
    store::write_jsonl(&ctx.out.join("rejects.jsonl"), &result.rejected)?;
    if log_enabled() {
        for r in &result.rejected {
            eprintln!("reject line {}: {}", r.line, r.reason);
        }
    }
    println!(
        "ingest: accepted {} records, rejected {} (rate {:.4})",
        result.accepted,
        result.rejected.len(),
        result.reject_rate()
    );
    if result.reject_rate() > cfg.max_reject_rate + 1e-12 {
        eprintln!(
            "ingest: reject rate {:.4} exceeds the configured limit {:.4}; see rejects.jsonl",
            result.reject_rate(),
            cfg.max_reject_rate
        );
        return Ok(ExitCode::from(2));
    }

    let period = 1.0 / cfg.target_fps;
    let mut rows: Vec<TupleRow> = Vec::new();
    let mut clips = Vec::new();
    for (video_id, tuples) in &result.videos {
        // The stream carries no explicit duration; the video is taken to end
        // one sampling period after its last annotated frame.
        let duration = tuples.last().map(|t| t.time_s).unwrap_or(0.0) + period;
        let dense = broadcast_sparse_labels(tuples, cfg.target_fps, cfg.half_window_s);
        let video_clips =
            segment_clips(video_id, duration, cfg.target_fps, cfg.min_clip_s, cfg.max_clip_s);
        for clip in &video_clips {
            for t in dense.iter().filter(|t| clip.contains(t.time_s)) {
                let mut tuple = t.clone();
                tuple.time_s -= clip.start_s;
                rows.push(TupleRow { clip_id: clip.clip_id.clone(), tuple });
            }
        }
        clips.extend(video_clips);
    }
    store::save_tuples(&ctx.out.join("tuples.jsonl"), &rows)?;
    store::save_clips(&ctx.out.join("clips.jsonl"), &clips)?;
    println!(
        "ingest: stored {} clip-relative tuples across {} clips from {} videos",
        rows.len(),
        clips.len(),
        result.videos.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(common: &Common) -> Result<ExitCode> {
    let ctx = Ctx::new(common)?;
    let vocab = ctx.vocab()?;
    let registry = ctx.registry()?;
    let tuples = store::load_tuples(&ctx.out.join("tuples.jsonl"))?;
    let mut clips = store::load_clips(&ctx.out.join("clips.jsonl"))?;
    clips.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    let gate = ctx.config.tracking.assoc_gate;
    let bundles: Vec<ClipBundle> = clips
        .into_iter()
        .map(|clip| {
            let clip_tuples = tuples.get(&clip.clip_id).cloned().unwrap_or_default();
            ClipBundle::build(clip, clip_tuples, gate)
        })
        .collect();
    let params = ctx.config.generation_params();
    let ds = generate_dataset(&bundles, &registry, &vocab, &params);
    store::save_dataset(&ctx.out.join("dataset.jsonl"), &ds.samples)?;
    store::write_jsonl(&ctx.out.join("shortfalls.jsonl"), &ds.shortfalls)?;
    if log_enabled() {
        for s in &ds.shortfalls {
            eprintln!(
                "shortfall {} {}: produced {} of {}",
                s.clip_id,
                s.subtask.id(),
                s.produced,
                s.requested
            );
        }
    }
    println!(
        "generate: {} samples across {} clips; {} shortfalls",
        ds.samples.len(),
        bundles.len(),
        ds.shortfalls.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_exemplars(common: &Common, split: &Path, dataset: Option<&Path>) -> Result<ExitCode> {
    let ctx = Ctx::new(common)?;
    let dataset_path =
        dataset.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join("dataset.jsonl"));
    let samples = store::load_dataset(&dataset_path)?;
    let split_of: BTreeMap<String, String> =
        store::load_split(split)?.into_iter().map(|r| (r.sample_id, r.split)).collect();
    let is_train = |id: &str| split_of.get(id).map(String::as_str) == Some("train");
    let pool: Vec<_> = samples.iter().filter(|s| is_train(&s.sample_id)).cloned().collect();
    let tests: Vec<_> = samples.iter().filter(|s| !is_train(&s.sample_id)).cloned().collect();
    match build_exemplar_map(&tests, &pool, ctx.config.generation.master_seed) {
        Err(e @ (ExemplarError::EmptyPool | ExemplarError::NoCoreTaskMatch { .. })) => {
            eprintln!("exemplars: {e}");
            Ok(ExitCode::from(2))
        }
        Ok(map) => {
            store::save_exemplars(&ctx.out.join("exemplars.jsonl"), &map)?;
            println!(
                "exemplars: {} assignments drawn from a pool of {}",
                map.len(),
                pool.len()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_evaluate(common: &Common, predictions: &Path, dataset: Option<&Path>) -> Result<ExitCode> {
    let ctx = Ctx::new(common)?;
    let vocab = ctx.vocab()?;
    let dataset_path =
        dataset.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join("dataset.jsonl"));
    let samples = store::load_dataset(&dataset_path)?;
    let preds = store::load_predictions(predictions)?;
    match evaluate_predictions(&samples, &preds, &vocab, &ctx.config.metrics) {
        Err(
            e @ (EvalError::DuplicatePrediction(_)
            | EvalError::UnknownSampleId(_)
            | EvalError::EmptyDataset),
        ) => {
            eprintln!("evaluate: {e}");
            Ok(ExitCode::from(2))
        }
        Ok(result) => {
            store::save_scores(&ctx.out.join("scores.jsonl"), &result.samples)?;
            print_eval_summary(&result);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_eval_summary(result: &EvalResult) {
    let missing = result.samples.iter().filter(|s| s.missing).count();
    let parse_failed = result.samples.iter().filter(|s| s.parse_failed).count();
    println!(
        "evaluate: {} samples, overall {:.2}, {} missing predictions, {} parse failures",
        result.samples.len(),
        result.overall,
        missing,
        parse_failed
    );
}

fn cmd_report(common: &Common, scores: Option<&Path>) -> Result<ExitCode> {
    let ctx = Ctx::new(common)?;
    let scores_path =
        scores.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join("scores.jsonl"));
    let scored = store::load_scores(&scores_path)?;
    match aggregate_scores(scored) {
        Err(e) => {
            eprintln!("report: {e}");
            Ok(ExitCode::from(2))
        }
        Ok(result) => {
            let report = build_report(&result);
            let tsv = to_tsv(&report);
            fs::write(ctx.out.join("report.tsv"), &tsv)?;
            fs::write(ctx.out.join("report.json"), to_json(&report))?;
            print!("{tsv}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Ingest { common } => cmd_ingest(common),
        Command::Generate { common } => cmd_generate(common),
        Command::Exemplars { common, split, dataset } => {
            cmd_exemplars(common, split, dataset.as_deref())
        }
        Command::Evaluate { common, predictions, dataset } => {
            cmd_evaluate(common, predictions, dataset.as_deref())
        }
        Command::Report { common, scores } => cmd_report(common, scores.as_deref()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

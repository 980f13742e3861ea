//! Command-line front end: `split`, `train`, `evaluate`, `analyze`, `export`.
//!
//! Every command writes a `manifest.txt` alongside its outputs recording the
//! fully resolved configuration, the named seeds and a dataset fingerprint;
//! a manifest is itself a valid `--config` file, so a run can be reproduced
//! from it byte-for-byte (single-threaded mode).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, ExportKind};
use crate::config;
use crate::dataset::{load_interactions, SplitDataset};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, Which};
use crate::trainer::{self, load_checkpoint, save_checkpoint, ProjectionCadence, TrainConfig};
use crate::embed::HyperParams;

const ENV_HELP: &str = "Every flag can also be supplied through an environment variable with the \
TRANSCF_ prefix (e.g. TRANSCF_DIM=64, TRANSCF_VARIANT=cml). Precedence: command-line flag, then \
environment, then --config file, then built-in default.";

#[derive(Debug, Parser)]
#[command(
    name = "transcf",
    version,
    about = "Translational collaborative metric learning for implicit-feedback recommendation",
    after_help = ENV_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest an interaction file and write a leave-one-out split.
    Split(SplitArgs),
    /// Train a model on a split directory and save the best checkpoint.
    Train(TrainArgs),
    /// Rank held-out test items and report HR@N / NDCG@N.
    Evaluate(EvaluateArgs),
    /// Translation-vector diagnostics and labeled exports.
    Analyze(AnalyzeArgs),
    /// Export embedding tables (and optionally per-pair translations).
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Interaction file: `user<sep>item[<sep>rating][<sep>order_key]`,
    /// tab- or comma-delimited.
    #[arg(long, env = "TRANSCF_INPUT")]
    pub input: PathBuf,
    /// Output directory for train.tsv / validation.tsv / test.tsv.
    #[arg(long, env = "TRANSCF_OUT")]
    pub out: PathBuf,
    /// Drop users and items with fewer interactions (repeated to fixpoint).
    #[arg(long, default_value_t = 5, env = "TRANSCF_MIN_COUNT")]
    pub min_count: usize,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Split directory produced by `transcf split`.
    #[arg(long, env = "TRANSCF_SPLIT")]
    pub split: PathBuf,
    /// Output directory for checkpoint, logs and manifest.
    #[arg(long, env = "TRANSCF_OUT")]
    pub out: PathBuf,
    /// key=value configuration file (flags win over it).
    #[arg(long, env = "TRANSCF_CONFIG")]
    pub config: Option<PathBuf>,
    /// transcf | transcf-dot | transcf-alt | cml
    #[arg(long, env = "TRANSCF_VARIANT")]
    pub variant: Option<String>,
    #[arg(long, env = "TRANSCF_DIM")]
    pub dim: Option<usize>,
    #[arg(long, env = "TRANSCF_LR")]
    pub lr: Option<f64>,
    #[arg(long, env = "TRANSCF_MARGIN")]
    pub margin: Option<f64>,
    #[arg(long, env = "TRANSCF_LAMBDA_NBR")]
    pub lambda_nbr: Option<f64>,
    #[arg(long, env = "TRANSCF_LAMBDA_DIST")]
    pub lambda_dist: Option<f64>,
    #[arg(long, env = "TRANSCF_EPOCHS")]
    pub epochs: Option<usize>,
    #[arg(long, env = "TRANSCF_BATCH_SIZE")]
    pub batch_size: Option<usize>,
    /// Ranking samples generated per user per epoch.
    #[arg(long, env = "TRANSCF_NEGATIVES_PER_USER")]
    pub negatives_per_user: Option<usize>,
    /// Training seed (initialization, sampling, validation candidates).
    #[arg(long, env = "TRANSCF_SEED")]
    pub seed: Option<u64>,
    /// Repeat training with this many consecutive seeds and summarize.
    #[arg(long, default_value_t = 1, env = "TRANSCF_SEEDS")]
    pub seeds: usize,
    /// 1 = deterministic; >1 = asynchronous lock-free updates.
    #[arg(long, default_value_t = 1, env = "TRANSCF_THREADS")]
    pub threads: usize,
    /// Epochs without validation improvement before stopping.
    #[arg(long, env = "TRANSCF_PATIENCE")]
    pub patience: Option<usize>,
    /// per-epoch (default) or per-batch.
    #[arg(long, env = "TRANSCF_PROJECTION")]
    pub projection: Option<String>,
    /// Project rows with the literal max(1, ||v||^2) divisor.
    #[arg(long, env = "TRANSCF_STRICT_PAPER_PROJECTION")]
    pub strict_paper_projection: bool,
    /// Treat neighborhood embeddings as constants in the gradients.
    #[arg(long, env = "TRANSCF_STOP_GRADIENT_NEIGHBORHOODS")]
    pub stop_gradient_neighborhoods: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, env = "TRANSCF_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "TRANSCF_SPLIT")]
    pub split: PathBuf,
    /// Comma-separated cutoffs, ascending.
    #[arg(long, default_value = "10,20", env = "TRANSCF_CUTOFFS")]
    pub cutoffs: String,
    /// Negative candidates sampled per user.
    #[arg(long, default_value_t = 99, env = "TRANSCF_CANDIDATES")]
    pub candidates: usize,
    /// Evaluation seed (candidate sampling).
    #[arg(long, default_value_t = 17, env = "TRANSCF_EVAL_SEED")]
    pub seed: u64,
    /// Rank against the full catalog instead of sampled candidates.
    #[arg(long, env = "TRANSCF_FULL_CATALOG")]
    pub full_catalog: bool,
    /// Evaluate the validation map instead of test.
    #[arg(long)]
    pub validation: bool,
    /// Output directory (report.json + manifest). Prints to stdout too.
    #[arg(long, env = "TRANSCF_OUT")]
    pub out: Option<PathBuf>,
    /// Also write per_user.csv with per-user ranks and contributions.
    #[arg(long)]
    pub per_user: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, env = "TRANSCF_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "TRANSCF_SPLIT")]
    pub split: PathBuf,
    /// Analysis seed (unobserved-pair sampling).
    #[arg(long, default_value_t = 23, env = "TRANSCF_ANALYSIS_SEED")]
    pub seed: u64,
    /// Add per-rating-group percentages (requires a rated dataset).
    #[arg(long)]
    pub rating_groups: bool,
    /// Write labeled translation vectors to this file (requires --labels).
    #[arg(long)]
    pub export_translations: Option<PathBuf>,
    /// Label file: `user<sep>item<sep>label` per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// learned (default) or embedding-difference.
    #[arg(long, default_value = "learned")]
    pub kind: String,
    /// Output directory (analysis.json + manifest). Prints to stdout too.
    #[arg(long, env = "TRANSCF_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, env = "TRANSCF_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "TRANSCF_OUT")]
    pub out: PathBuf,
    /// Also export translation vectors of observed train pairs
    /// (requires --split).
    #[arg(long)]
    pub translations: bool,
    #[arg(long)]
    pub split: Option<PathBuf>,
}

pub fn run() -> Result<()> {
    execute(Cli::parse())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Split(args) => cmd_split(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Export(args) => cmd_export(&args),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn cmd_split(args: &SplitArgs) -> Result<()> {
    let ds = load_interactions(&args.input, args.min_count)?;
    let split = ds.leave_one_out_split();
    ensure_dir(&args.out)?;
    split.write_dir(&args.out)?;

    let input_bytes = fs::read(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let fp = config::fingerprint_split(&split);
    let mut info = vec![
        ("input.path".to_string(), args.input.display().to_string()),
        ("input.sha256".to_string(), config::fingerprint_bytes(&input_bytes)),
        ("input.min_count".to_string(), args.min_count.to_string()),
        ("output.dir".to_string(), args.out.display().to_string()),
    ];
    for line in fp.manifest_lines().lines() {
        let (k, v) = line.split_once('=').expect("manifest line");
        info.push((k.to_string(), v.to_string()));
    }
    info.push(("dataset.validation_users".into(), split.validation.len().to_string()));
    info.push(("dataset.test_users".into(), split.test.len().to_string()));
    config::write_manifest(args.out.join("manifest.txt"), "split", &info, None)?;

    println!(
        "split: {} users, {} items, {} train interactions, {} validation/test users -> {}",
        split.train.n_users(),
        split.train.n_items(),
        split.train.n_interactions(),
        split.test.len(),
        args.out.display()
    );
    Ok(())
}

/// Resolves the training configuration: defaults, then config file, then
/// flags (flags win).
pub fn resolve_train_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::new(HyperParams::default(), crate::embed::Variant::TransCf);
    if let Some(path) = &args.config {
        let map = config::read_key_values(path)?;
        config::apply_config(&mut cfg, &map)?;
    }
    if let Some(v) = &args.variant {
        cfg.variant = v.parse()?;
    }
    if let Some(v) = args.dim {
        cfg.hyper.dim = v;
    }
    if let Some(v) = args.lr {
        cfg.hyper.learning_rate = v;
    }
    if let Some(v) = args.margin {
        cfg.hyper.margin = v;
    }
    if let Some(v) = args.lambda_nbr {
        cfg.hyper.lambda_nbr = v;
    }
    if let Some(v) = args.lambda_dist {
        cfg.hyper.lambda_dist = v;
    }
    if let Some(v) = args.epochs {
        cfg.hyper.epochs = v;
        cfg.max_epochs = v;
    }
    if let Some(v) = args.batch_size {
        cfg.hyper.batch_size = v;
    }
    if let Some(v) = args.negatives_per_user {
        cfg.hyper.negatives_per_user = v;
    }
    if let Some(v) = args.seed {
        cfg.hyper.seed = v;
    }
    if let Some(v) = args.patience {
        cfg.early_stop_patience = v;
    }
    if let Some(p) = &args.projection {
        cfg.projection_cadence = match p.as_str() {
            "per-epoch" => ProjectionCadence::PerEpoch,
            "per-batch" => ProjectionCadence::PerBatch,
            other => {
                return Err(Error::Config(format!(
                    "--projection must be per-epoch or per-batch, got {other:?}"
                )))
            }
        };
    }
    if args.strict_paper_projection {
        cfg.strict_projection = true;
    }
    if args.stop_gradient_neighborhoods {
        cfg.stop_gradient_neighborhoods = true;
    }
    cfg.threads = args.threads;
    cfg.validate()?;
    Ok(cfg)
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(Error::Config("--seeds must be >= 1".into()));
    }
    let cfg = resolve_train_config(args)?;
    let split = SplitDataset::read_dir(&args.split)?;
    ensure_dir(&args.out)?;

    let multi = args.seeds > 1;
    let mut summary_rows: Vec<(u64, usize, f64)> = Vec::new();
    for offset in 0..args.seeds {
        let mut run_cfg = cfg.clone();
        run_cfg.hyper.seed = cfg.hyper.seed + offset as u64;
        let (model, log) = trainer::train(&split, &run_cfg)?;

        let suffix = if multi {
            format!("_seed{}", run_cfg.hyper.seed)
        } else {
            String::new()
        };
        save_checkpoint(args.out.join(format!("checkpoint{suffix}.ckpt")), &model, &split.train)?;
        write_file(&args.out.join(format!("train_log{suffix}.csv")), &log.to_csv())?;
        write_file(&args.out.join(format!("train_timing{suffix}.csv")), &log.timings_csv())?;
        println!(
            "train: seed {} best epoch {:?} validation HR@10 {:.4}",
            run_cfg.hyper.seed, log.best_epoch, log.best_validation_hr10
        );
        summary_rows.push((
            run_cfg.hyper.seed,
            log.best_epoch.unwrap_or(0),
            log.best_validation_hr10,
        ));
    }

    if multi {
        let mut out = String::from("seed,best_epoch,validation_hr10\n");
        for (seed, epoch, hr) in &summary_rows {
            let _ = writeln!(out, "{seed},{epoch},{hr}");
        }
        let values: Vec<f64> = summary_rows.iter().map(|r| r.2).collect();
        let (mean, std) = mean_and_std(&values);
        let _ = writeln!(out, "mean,,{mean}");
        let _ = writeln!(out, "std,,{std}");
        write_file(&args.out.join("seed_summary.csv"), &out)?;
    }

    let fp = config::fingerprint_split(&split);
    let mut info = vec![
        ("input.split_dir".to_string(), args.split.display().to_string()),
        ("output.dir".to_string(), args.out.display().to_string()),
        ("seeds.train".to_string(), cfg.hyper.seed.to_string()),
        ("seeds.count".to_string(), args.seeds.to_string()),
    ];
    for line in fp.manifest_lines().lines() {
        let (k, v) = line.split_once('=').expect("manifest line");
        info.push((k.to_string(), v.to_string()));
    }
    config::write_manifest(args.out.join("manifest.txt"), "train", &info, Some(&cfg))?;
    Ok(())
}

fn load_bound(checkpoint: &Path, split_dir: &Path) -> Result<(trainer::Checkpoint, SplitDataset)> {
    let ckpt = load_checkpoint(checkpoint)?;
    let split = SplitDataset::read_dir(split_dir)?;
    ckpt.bind(&split.train)?;
    Ok((ckpt, split))
}

fn parse_cutoffs(text: &str) -> Result<Vec<usize>> {
    let cutoffs: Vec<usize> = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad cutoff {p:?}")))
        })
        .collect::<Result<_>>()?;
    if cutoffs.is_empty() {
        return Err(Error::Config("no cutoffs given".into()));
    }
    Ok(cutoffs)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (ckpt, split) = load_bound(&args.checkpoint, &args.split)?;
    let cfg = EvalConfig {
        candidate_negatives: args.candidates,
        cutoffs: parse_cutoffs(&args.cutoffs)?,
        seed: args.seed,
        full_catalog: args.full_catalog,
    };
    let which = if args.validation {
        Which::Validation
    } else {
        Which::Test
    };
    let report = evaluate(&ckpt.model, &split, which, &cfg)?;
    let json = report.to_json();
    print!("{json}");

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_file(&out.join("report.json"), &json)?;
        if args.per_user {
            write_file(&out.join("per_user.csv"), &report.per_user_csv(&split.train))?;
        }
        let info = vec![
            ("input.checkpoint".to_string(), args.checkpoint.display().to_string()),
            ("input.split_dir".to_string(), args.split.display().to_string()),
            ("seeds.eval".to_string(), args.seed.to_string()),
            ("eval.cutoffs".to_string(), args.cutoffs.clone()),
            ("eval.candidates".to_string(), args.candidates.to_string()),
            ("eval.full_catalog".to_string(), args.full_catalog.to_string()),
            ("eval.which".to_string(), format!("{which:?}").to_lowercase()),
        ];
        config::write_manifest(out.join("manifest.txt"), "evaluate", &info, None)?;
    }
    Ok(())
}

fn read_labels(
    path: &Path,
    ds: &crate::dataset::InteractionDataset,
) -> Result<(HashMap<(usize, usize), String>, usize)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = HashMap::new();
    let mut unknown = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else {
            line.split(',').collect()
        };
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("expected user<sep>item<sep>label, found {} fields", fields.len()),
            });
        }
        match (ds.user_id(fields[0].trim()), ds.item_id(fields[1].trim())) {
            (Some(u), Some(i)) => {
                labels.insert((u, i), fields[2].trim().to_string());
            }
            _ => unknown += 1,
        }
    }
    Ok((labels, unknown))
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let (ckpt, split) = load_bound(&args.checkpoint, &args.split)?;
    let train = &split.train;

    let diagnostic = analysis::translation_check(&ckpt.model, train, args.seed)?;
    let rating_groups = if args.rating_groups {
        Some(analysis::rating_group_check(&ckpt.model, train)?)
    } else {
        None
    };

    let mut export_skipped = None;
    if let Some(export_path) = &args.export_translations {
        let labels_path = args.labels.as_ref().ok_or_else(|| {
            Error::Config("--export-translations requires --labels".into())
        })?;
        let kind = match args.kind.as_str() {
            "learned" => ExportKind::Learned,
            "embedding-difference" => ExportKind::EmbeddingDifference,
            other => {
                return Err(Error::Config(format!(
                    "--kind must be learned or embedding-difference, got {other:?}"
                )))
            }
        };
        let (labels, unknown) = read_labels(labels_path, train)?;
        let (content, skipped) =
            analysis::export_labeled_translations(&ckpt.model, train, &labels, kind)?;
        write_file(export_path, &content)?;
        export_skipped = Some(unknown + skipped);
    }

    #[derive(serde::Serialize)]
    struct AnalysisReport<'a> {
        translation_check: &'a analysis::TranslationDiagnostic,
        #[serde(skip_serializing_if = "Option::is_none")]
        rating_groups: Option<&'a Vec<analysis::RatingGroup>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        export_skipped_labels: Option<usize>,
    }
    let report = AnalysisReport {
        translation_check: &diagnostic,
        rating_groups: rating_groups.as_ref(),
        export_skipped_labels: export_skipped,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("analysis serialization");
    json.push('\n');
    print!("{json}");

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_file(&out.join("analysis.json"), &json)?;
        let info = vec![
            ("input.checkpoint".to_string(), args.checkpoint.display().to_string()),
            ("input.split_dir".to_string(), args.split.display().to_string()),
            ("seeds.analysis".to_string(), args.seed.to_string()),
        ];
        config::write_manifest(out.join("manifest.txt"), "analyze", &info, None)?;
    }
    Ok(())
}

pub fn cmd_export(args: &ExportArgs) -> Result<()> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    ensure_dir(&args.out)?;
    write_file(
        &args.out.join("user_embeddings.tsv"),
        &ckpt.model.users.to_tsv(&ckpt.user_tokens),
    )?;
    write_file(
        &args.out.join("item_embeddings.tsv"),
        &ckpt.model.items.to_tsv(&ckpt.item_tokens),
    )?;

    if args.translations {
        let split_dir = args.split.as_ref().ok_or_else(|| {
            Error::Config("--translations requires --split to know the observed pairs".into())
        })?;
        let split = SplitDataset::read_dir(split_dir)?;
        ckpt.bind(&split.train)?;
        let train = &split.train;
        let cache = crate::embed::NeighborhoodCache::build(&ckpt.model, train);
        let mut out = String::from("user\titem");
        for d in 1..=ckpt.model.dim() {
            let _ = write!(out, "\tv{d}");
        }
        out.push('\n');
        for u in 0..train.n_users() {
            for &i in train.items_of(u) {
                let r = crate::model::translation_cached(&ckpt.model, &cache, u, i);
                let _ = write!(out, "{}\t{}", train.user_token(u), train.item_token(i));
                for v in &r {
                    let _ = write!(out, "\t{v:.16e}");
                }
                out.push('\n');
            }
        }
        write_file(&args.out.join("translations.tsv"), &out)?;
    }

    let info = vec![
        ("input.checkpoint".to_string(), args.checkpoint.display().to_string()),
        ("export.translations".to_string(), args.translations.to_string()),
    ];
    config::write_manifest(args.out.join("manifest.txt"), "export", &info, None)?;
    println!("export: wrote embedding tables to {}", args.out.display());
    Ok(())
}

//! Mini-batch SGD training with per-epoch negative resampling, unit-ball
//! projection, validation tracking and best-checkpoint selection.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{InteractionDataset, SplitDataset, TrainTriple};
use crate::embed::{EmbeddingTable, HyperParams, ModelState, Variant};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, Which};
use crate::model::{objective_and_gradients, reg_dist_value, reg_nbr_value, BatchOptions};

/// When the unit-ball projection is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionCadence {
    PerEpoch,
    PerBatch,
}

/// Full training configuration.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub hyper: HyperParams,
    pub variant: Variant,
    pub projection_cadence: ProjectionCadence,
    /// Apply the literal `v / max(1, ||v||^2)` projection divisor.
    pub strict_projection: bool,
    pub stop_gradient_neighborhoods: bool,
    pub include_empty_neighborhoods_in_reg: bool,
    pub max_epochs: usize,
    /// Epochs without validation HR@10 improvement before stopping. Set to
    /// `max_epochs` to disable early stopping.
    pub early_stop_patience: usize,
    /// 1 = deterministic single-threaded updates; >1 enables asynchronous
    /// lock-free batch updates (convergence, not determinism, guaranteed).
    pub threads: usize,
}

impl TrainConfig {
    pub fn new(hyper: HyperParams, variant: Variant) -> TrainConfig {
        TrainConfig {
            max_epochs: hyper.epochs,
            hyper,
            variant,
            projection_cadence: ProjectionCadence::PerEpoch,
            strict_projection: false,
            stop_gradient_neighborhoods: false,
            include_empty_neighborhoods_in_reg: true,
            early_stop_patience: 10,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyper;
        if h.dim == 0 {
            return Err(Error::Config("dim must be >= 1".into()));
        }
        if h.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if h.negatives_per_user == 0 {
            return Err(Error::Config("negatives_per_user must be >= 1".into()));
        }
        if !(h.learning_rate > 0.0) && h.learning_rate != 0.0 {
            return Err(Error::Config("learning_rate must be non-negative".into()));
        }
        if h.margin < 0.0 || h.lambda_nbr < 0.0 || h.lambda_dist < 0.0 {
            return Err(Error::Config(
                "margin and regularization coefficients must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn batch_options(&self) -> BatchOptions {
        BatchOptions {
            stop_gradient_neighborhoods: self.stop_gradient_neighborhoods,
            include_empty_neighborhoods_in_reg: self.include_empty_neighborhoods_in_reg,
        }
    }
}

/// One completed epoch.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub batches: usize,
    pub mean_batch_objective: f64,
    /// Full-dataset regularizer values (reporting only).
    pub reg_nbr: f64,
    pub reg_dist: f64,
    pub validation_hr10: f64,
    pub seconds: f64,
}

/// Per-epoch records plus which epoch won on validation HR@10.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_validation_hr10: f64,
    /// Users that produced no triples (no negatives available).
    pub skipped_users: usize,
}

impl TrainLog {
    /// Deterministic per-epoch fields. Wall-clock timings live in
    /// [`TrainLog::timings_csv`] so this file is byte-identical across
    /// reruns of the same manifest.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,batches,mean_batch_objective,reg_nbr,reg_dist,validation_hr10\n");
        for r in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch, r.batches, r.mean_batch_objective, r.reg_nbr, r.reg_dist, r.validation_hr10
            );
        }
        out
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("epoch,seconds\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{:.3}", r.epoch, r.seconds);
        }
        out
    }
}

/// Trains on the split's train set and returns the parameters that achieved
/// the best validation HR@10, together with the full log.
pub fn train(split: &SplitDataset, cfg: &TrainConfig) -> Result<(ModelState, TrainLog)> {
    train_with_observer(split, cfg, |_, _| {})
}

/// [`train`] with a per-epoch callback observing the live model state.
pub fn train_with_observer(
    split: &SplitDataset,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&ModelState, &EpochRecord),
) -> Result<(ModelState, TrainLog)> {
    cfg.validate()?;
    let ds = &split.train;
    if ds.n_interactions() == 0 {
        return Err(Error::EmptyDataset);
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.hyper.seed);
    let mut model = ModelState::init(
        ds.n_users(),
        ds.n_items(),
        cfg.variant,
        cfg.hyper.clone(),
        &mut init_rng,
    )?;

    let val_cfg = EvalConfig {
        candidate_negatives: 99,
        cutoffs: vec![10],
        seed: cfg.hyper.seed,
        full_catalog: false,
    };
    let opts = cfg.batch_options();

    let mut log = TrainLog::default();
    let mut best: Option<ModelState> = None;
    let mut best_hr = f64::NEG_INFINITY;
    let mut epochs_since_improvement = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();

        let mut epoch_rng = ChaCha8Rng::seed_from_u64(cfg.hyper.seed);
        epoch_rng.set_stream(epoch as u64);
        let sample = ds.sample_triples(cfg.hyper.negatives_per_user, &mut epoch_rng);
        if epoch == 1 {
            log.skipped_users = sample.skipped_users;
        }
        let mut triples = sample.triples;
        triples.shuffle(&mut epoch_rng);

        let batches: Vec<&[TrainTriple]> = triples.chunks(cfg.hyper.batch_size).collect();
        let n_batches = batches.len();
        let objective_sum = if cfg.threads <= 1 {
            run_epoch_serial(&mut model, ds, &batches, cfg, &opts, epoch)?
        } else {
            run_epoch_hogwild(&mut model, ds, &batches, cfg, &opts, epoch)?
        };

        if cfg.projection_cadence == ProjectionCadence::PerEpoch {
            project(&mut model, cfg, epoch)?;
        }

        let validation_hr10 = if split.validation.is_empty() {
            0.0
        } else {
            evaluate(&model, split, Which::Validation, &val_cfg)?.hr[&10]
        };

        let record = EpochRecord {
            epoch,
            batches: n_batches,
            mean_batch_objective: objective_sum / n_batches.max(1) as f64,
            reg_nbr: reg_nbr_value(&model, ds),
            reg_dist: reg_dist_value(&model, ds),
            validation_hr10,
            seconds: started.elapsed().as_secs_f64(),
        };
        observer(&model, &record);
        log.epochs.push(record);

        if validation_hr10 > best_hr {
            best_hr = validation_hr10;
            best = Some(model.clone());
            log.best_epoch = Some(epoch);
            log.best_validation_hr10 = validation_hr10;
            epochs_since_improvement = 0;
        } else {
            epochs_since_improvement += 1;
            if epochs_since_improvement >= cfg.early_stop_patience {
                break;
            }
        }
    }

    Ok((best.unwrap_or(model), log))
}

fn project(model: &mut ModelState, cfg: &TrainConfig, epoch: usize) -> Result<()> {
    let strict = cfg.strict_projection;
    model.users.project_unit_ball(strict).map_err(|e| diverged(e, epoch, 0))?;
    model.items.project_unit_ball(strict).map_err(|e| diverged(e, epoch, 0))?;
    Ok(())
}

fn diverged(err: Error, epoch: usize, batch: usize) -> Error {
    match err {
        Error::NumericState(message) => Error::Divergence {
            epoch,
            batch,
            message,
        },
        other => other,
    }
}

fn run_epoch_serial(
    model: &mut ModelState,
    ds: &InteractionDataset,
    batches: &[&[TrainTriple]],
    cfg: &TrainConfig,
    opts: &BatchOptions,
    epoch: usize,
) -> Result<f64> {
    let mut objective_sum = 0.0;
    for (b, batch) in batches.iter().enumerate() {
        let (loss, grads) =
            objective_and_gradients(model, ds, batch, opts).map_err(|e| diverged(e, epoch, b))?;
        if !loss.total.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: b,
                message: format!("batch objective is {}", loss.total),
            });
        }
        objective_sum += loss.total;
        grads.apply_sgd(model, cfg.hyper.learning_rate);
        if cfg.projection_cadence == ProjectionCadence::PerBatch {
            project(model, cfg, epoch)?;
        }
    }
    Ok(objective_sum)
}

/// Lock-free shared parameters for asynchronous batch updates: f64 values
/// stored as atomic bit patterns, updated with compare-and-swap adds.
struct AtomicTable {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl AtomicTable {
    fn from_table(table: &EmbeddingTable) -> AtomicTable {
        AtomicTable {
            dim: table.dim(),
            cells: table.as_slice().iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    fn snapshot(&self, rows: usize) -> EmbeddingTable {
        let mut t = EmbeddingTable::zeros(rows, self.dim);
        for r in 0..rows {
            for d in 0..self.dim {
                t.row_mut(r)[d] = f64::from_bits(self.cells[r * self.dim + d].load(Ordering::Relaxed));
            }
        }
        t
    }

    fn add(&self, row: usize, grad: &[f64], scale: f64) {
        for (d, g) in grad.iter().enumerate() {
            let cell = &self.cells[row * self.dim + d];
            let mut current = cell.load(Ordering::Relaxed);
            loop {
                let next = (f64::from_bits(current) + scale * g).to_bits();
                match cell.compare_exchange_weak(current, next, Ordering::Relaxed, Ordering::Relaxed)
                {
                    Ok(_) => break,
                    Err(actual) => current = actual,
                }
            }
        }
    }
}

fn run_epoch_hogwild(
    model: &mut ModelState,
    ds: &InteractionDataset,
    batches: &[&[TrainTriple]],
    cfg: &TrainConfig,
    opts: &BatchOptions,
    epoch: usize,
) -> Result<f64> {
    let users = AtomicTable::from_table(&model.users);
    let items = AtomicTable::from_table(&model.items);
    let lr = cfg.hyper.learning_rate;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let totals: Vec<f64> = pool.install(|| {
        batches
            .par_iter()
            .enumerate()
            .map(|(b, batch)| {
                // Stale-read snapshot; updates interleave freely.
                let view = ModelState {
                    users: users.snapshot(ds.n_users()),
                    items: items.snapshot(ds.n_items()),
                    variant: model.variant,
                    hyper: model.hyper.clone(),
                };
                let (loss, grads) = objective_and_gradients(&view, ds, batch, opts)
                    .map_err(|e| diverged(e, epoch, b))?;
                for (&u, g) in &grads.users {
                    users.add(u, g, -lr);
                }
                for (&i, g) in &grads.items {
                    items.add(i, g, -lr);
                }
                Ok(loss.total)
            })
            .collect::<Result<Vec<f64>>>()
    })?;

    model.users = users.snapshot(ds.n_users());
    model.items = items.snapshot(ds.n_items());
    if cfg.projection_cadence == ProjectionCadence::PerBatch {
        // Batch boundaries are concurrent here; project once at the end.
        project(model, cfg, epoch)?;
    }
    Ok(totals.iter().sum())
}

/// Hyperparameter value lists for grid search. Defaults to the full tuning
/// grid used for the reference benchmark runs; subset it for quick searches.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub margins: Vec<f64>,
    pub lambda_nbrs: Vec<f64>,
    pub lambda_dists: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            dims: vec![8, 16, 32, 64, 128],
            learning_rates: vec![0.0005, 0.001, 0.005, 0.01, 0.05, 0.1],
            margins: vec![0.0, 0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            lambda_nbrs: vec![0.0, 0.001, 0.01, 0.1],
            lambda_dists: vec![0.0, 0.001, 0.01, 0.1],
        }
    }
}

impl GridSpec {
    pub fn single(hyper: &HyperParams) -> GridSpec {
        GridSpec {
            dims: vec![hyper.dim],
            learning_rates: vec![hyper.learning_rate],
            margins: vec![hyper.margin],
            lambda_nbrs: vec![hyper.lambda_nbr],
            lambda_dists: vec![hyper.lambda_dist],
        }
    }

    fn cells(&self, base: &HyperParams) -> Vec<HyperParams> {
        let mut out = Vec::new();
        for &dim in &self.dims {
            for &learning_rate in &self.learning_rates {
                for &margin in &self.margins {
                    for &lambda_nbr in &self.lambda_nbrs {
                        for &lambda_dist in &self.lambda_dists {
                            out.push(HyperParams {
                                dim,
                                learning_rate,
                                margin,
                                lambda_nbr,
                                lambda_dist,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub hyper: HyperParams,
    /// Best validation HR@10 of the cell's training run; `-inf` on failure.
    pub validation_hr10: f64,
    pub error: Option<String>,
}

/// Trains one model per grid cell and returns the configuration with the
/// best validation HR@10 (first cell in iteration order wins ties). Failed
/// cells score `-inf` and do not abort the search.
pub fn grid_search(
    split: &SplitDataset,
    base: &TrainConfig,
    spec: &GridSpec,
) -> Result<(TrainConfig, Vec<GridCell>)> {
    let hypers = spec.cells(&base.hyper);
    if hypers.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }

    let run_cell = |hyper: &HyperParams| -> GridCell {
        let mut cfg = base.clone();
        cfg.hyper = hyper.clone();
        cfg.threads = 1;
        match train(split, &cfg) {
            Ok((_, log)) => GridCell {
                hyper: hyper.clone(),
                validation_hr10: log.best_validation_hr10,
                error: None,
            },
            Err(e) => GridCell {
                hyper: hyper.clone(),
                validation_hr10: f64::NEG_INFINITY,
                error: Some(e.to_string()),
            },
        }
    };

    let cells: Vec<GridCell> = if base.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(base.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| hypers.par_iter().map(run_cell).collect())
    } else {
        hypers.iter().map(run_cell).collect()
    };

    let mut best_idx = 0;
    for (idx, cell) in cells.iter().enumerate() {
        if cell.validation_hr10 > cells[best_idx].validation_hr10 {
            best_idx = idx;
        }
    }
    if cells[best_idx].validation_hr10 == f64::NEG_INFINITY {
        return Err(Error::Config("all grid cells failed".into()));
    }
    let mut best_cfg = base.clone();
    best_cfg.hyper = cells[best_idx].hyper.clone();
    Ok((best_cfg, cells))
}

/// A trained model bound to the entity tokens it was trained over.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: ModelState,
    pub user_tokens: Vec<String>,
    pub item_tokens: Vec<String>,
}

impl Checkpoint {
    /// Verifies the checkpoint matches the dataset's entity tables.
    pub fn bind(&self, ds: &InteractionDataset) -> Result<()> {
        if self.model.dim() == 0 {
            return Err(Error::DimensionMismatch("checkpoint has dim 0".into()));
        }
        if self.user_tokens != ds.user_tokens() || self.item_tokens != ds.item_tokens() {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint entities ({} users, {} items) do not match dataset ({} users, {} items) or token order differs",
                self.user_tokens.len(),
                self.item_tokens.len(),
                ds.n_users(),
                ds.n_items()
            )));
        }
        Ok(())
    }
}

/// Writes the checkpoint format: `key=value` header, then both embedding
/// tables in the TSV export format under `[users]` / `[items]` markers.
pub fn save_checkpoint(
    path: impl AsRef<Path>,
    model: &ModelState,
    ds: &InteractionDataset,
) -> Result<()> {
    let path = path.as_ref();
    let h = &model.hyper;
    let mut out = String::new();
    let _ = writeln!(out, "dim={}", h.dim);
    let _ = writeln!(out, "variant={}", model.variant);
    let _ = writeln!(out, "users={}", ds.n_users());
    let _ = writeln!(out, "items={}", ds.n_items());
    let _ = writeln!(out, "learning_rate={}", h.learning_rate);
    let _ = writeln!(out, "margin={}", h.margin);
    let _ = writeln!(out, "lambda_nbr={}", h.lambda_nbr);
    let _ = writeln!(out, "lambda_dist={}", h.lambda_dist);
    let _ = writeln!(out, "epochs={}", h.epochs);
    let _ = writeln!(out, "negatives_per_user={}", h.negatives_per_user);
    let _ = writeln!(out, "batch_size={}", h.batch_size);
    let _ = writeln!(out, "seed={}", h.seed);
    out.push_str("[users]\n");
    out.push_str(&model.users.to_tsv(ds.user_tokens()));
    out.push_str("[items]\n");
    out.push_str(&model.items.to_tsv(ds.item_tokens()));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut lines = text.lines();
    for line in lines.by_ref() {
        if line == "[users]" {
            break;
        }
        if let Some((k, v)) = line.split_once('=') {
            header.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let get = |k: &str| -> Result<&String> {
        header
            .get(k)
            .ok_or_else(|| Error::Config(format!("checkpoint missing header key {k:?}")))
    };
    let dim: usize = get("dim")?.parse().map_err(|_| Error::Config("bad dim".into()))?;
    let n_users: usize = get("users")?.parse().map_err(|_| Error::Config("bad users".into()))?;
    let n_items: usize = get("items")?.parse().map_err(|_| Error::Config("bad items".into()))?;
    let variant: Variant = get("variant")?.parse()?;
    let parse_f = |k: &str| -> Result<f64> {
        get(k)?.parse().map_err(|_| Error::Config(format!("bad {k}")))
    };
    let parse_u = |k: &str| -> Result<usize> {
        get(k)?.parse().map_err(|_| Error::Config(format!("bad {k}")))
    };
    let hyper = HyperParams {
        dim,
        learning_rate: parse_f("learning_rate")?,
        margin: parse_f("margin")?,
        lambda_nbr: parse_f("lambda_nbr")?,
        lambda_dist: parse_f("lambda_dist")?,
        epochs: parse_u("epochs")?,
        negatives_per_user: parse_u("negatives_per_user")?,
        batch_size: parse_u("batch_size")?,
        seed: get("seed")?.parse().map_err(|_| Error::Config("bad seed".into()))?,
    };

    let user_lines: Vec<&str> = lines.by_ref().take_while(|&l| l != "[items]").collect();
    let item_lines: Vec<&str> = lines.collect();
    let (users, user_tokens) = EmbeddingTable::from_tsv_lines(user_lines.into_iter(), dim)?;
    let (items, item_tokens) = EmbeddingTable::from_tsv_lines(item_lines.into_iter(), dim)?;
    if users.rows() != n_users || items.rows() != n_items {
        return Err(Error::DimensionMismatch(format!(
            "checkpoint header says {n_users}x{n_items} entities, body has {}x{}",
            users.rows(),
            items.rows()
        )));
    }

    Ok(Checkpoint {
        model: ModelState {
            users,
            items,
            variant,
            hyper,
        },
        user_tokens,
        item_tokens,
    })
}

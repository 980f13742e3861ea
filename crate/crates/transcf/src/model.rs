//! Scoring, loss terms and analytic gradients for all model variants.
//!
//! The score of a user-item pair is `s(u,i) = -||alpha_u + r_ui - beta_i||^2`
//! where the translation vector `r_ui` is the element-wise product of the two
//! neighborhood embeddings (`transcf`), the element-wise product of the raw
//! embeddings (`transcf-alt`), or zero (`cml`). The `transcf-dot` variant
//! keeps the translation construction but scores with the inner product
//! `(alpha_u + r_ui)^T beta_i`.
//!
//! Training minimizes a margin ranking loss over (user, positive, negative)
//! triples plus two regularizers: one pulling entities toward their
//! neighborhood embeddings and one pulling translated users onto their
//! positive items. Mini-batches apply the regularizers restricted to the
//! entities and positive pairs appearing in the batch.

use std::collections::BTreeMap;

use crate::dataset::{InteractionDataset, TrainTriple};
use crate::embed::{ModelState, NeighborhoodCache, Variant};
use crate::error::{Error, Result};

/// Score of a pair together with the intermediates that produced it.
#[derive(Debug, Clone)]
pub struct ScoreBreakdown {
    pub score: f64,
    pub translation: Vec<f64>,
    /// `alpha_u + r_ui - beta_i`.
    pub residual: Vec<f64>,
}

/// Decomposed value of a batch objective. `total` applies the regularization
/// coefficients: `total = hinge + lambda_nbr * reg_nbr + lambda_dist * reg_dist`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub hinge: f64,
    pub reg_nbr: f64,
    pub reg_dist: f64,
    pub total: f64,
}

/// Switches affecting batch objective / gradient evaluation.
#[derive(Debug, Clone, Copy)]
pub struct BatchOptions {
    /// Treat neighborhood embeddings as constants (no gradient flow into
    /// neighbor rows). Ablation switch; default off.
    pub stop_gradient_neighborhoods: bool,
    /// Let entities with empty neighborhoods contribute distance to the zero
    /// vector in the neighborhood regularizer (default) instead of skipping
    /// them.
    pub include_empty_neighborhoods_in_reg: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            stop_gradient_neighborhoods: false,
            include_empty_neighborhoods_in_reg: true,
        }
    }
}

/// Sparse per-row gradient accumulator for one batch.
#[derive(Debug, Clone)]
pub struct Gradients {
    dim: usize,
    pub users: BTreeMap<usize, Vec<f64>>,
    pub items: BTreeMap<usize, Vec<f64>>,
}

impl Gradients {
    fn new(dim: usize) -> Gradients {
        Gradients {
            dim,
            users: BTreeMap::new(),
            items: BTreeMap::new(),
        }
    }

    fn user_row(&mut self, u: usize) -> &mut [f64] {
        self.users.entry(u).or_insert_with(|| vec![0.0; self.dim])
    }

    fn item_row(&mut self, i: usize) -> &mut [f64] {
        self.items.entry(i).or_insert_with(|| vec![0.0; self.dim])
    }

    pub fn is_finite(&self) -> bool {
        self.users
            .values()
            .chain(self.items.values())
            .all(|row| row.iter().all(|v| v.is_finite()))
    }

    /// Plain SGD step: `theta <- theta - lr * g` on every touched row.
    pub fn apply_sgd(&self, model: &mut ModelState, lr: f64) {
        for (&u, g) in &self.users {
            for (p, gv) in model.users.row_mut(u).iter_mut().zip(g) {
                *p -= lr * gv;
            }
        }
        for (&i, g) in &self.items {
            for (p, gv) in model.items.row_mut(i).iter_mut().zip(g) {
                *p -= lr * gv;
            }
        }
    }
}

fn mean_of(table: &crate::embed::EmbeddingTable, ids: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; table.dim()];
    if ids.is_empty() {
        return out;
    }
    for &id in ids {
        for (o, v) in out.iter_mut().zip(table.row(id)) {
            *o += v;
        }
    }
    let inv = 1.0 / ids.len() as f64;
    for o in &mut out {
        *o *= inv;
    }
    out
}

fn elementwise(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// User-item translation vector for the model's variant.
pub fn translation(model: &ModelState, ds: &InteractionDataset, u: usize, i: usize) -> Vec<f64> {
    match model.variant {
        Variant::TransCf | Variant::TransCfDot => {
            let user_nbr = mean_of(&model.items, ds.items_of(u));
            let item_nbr = mean_of(&model.users, ds.users_of(i));
            elementwise(&user_nbr, &item_nbr)
        }
        Variant::TransCfAlt => elementwise(model.users.row(u), model.items.row(i)),
        Variant::Cml => vec![0.0; model.dim()],
    }
}

/// Translation recomputed from a prebuilt neighborhood cache (read paths).
pub fn translation_cached(
    model: &ModelState,
    cache: &NeighborhoodCache,
    u: usize,
    i: usize,
) -> Vec<f64> {
    match model.variant {
        Variant::TransCf | Variant::TransCfDot => {
            elementwise(cache.user_nbr.row(u), cache.item_nbr.row(i))
        }
        Variant::TransCfAlt => elementwise(model.users.row(u), model.items.row(i)),
        Variant::Cml => vec![0.0; model.dim()],
    }
}

fn sq_residual(alpha: &[f64], r: &[f64], beta: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(r)
        .zip(beta)
        .map(|((a, t), b)| {
            let d = a + t - b;
            d * d
        })
        .sum()
}

fn score_with_translation(model: &ModelState, u: usize, i: usize, r: &[f64]) -> f64 {
    let alpha = model.users.row(u);
    let beta = model.items.row(i);
    match model.variant {
        Variant::TransCfDot => alpha.iter().zip(r).zip(beta).map(|((a, t), b)| (a + t) * b).sum(),
        _ => -sq_residual(alpha, r, beta),
    }
}

/// Similarity score of a pair. Non-positive for the metric variants; any
/// sign for `transcf-dot`.
pub fn score(model: &ModelState, ds: &InteractionDataset, u: usize, i: usize) -> f64 {
    let r = translation(model, ds, u, i);
    score_with_translation(model, u, i, &r)
}

/// Score computed against a frozen neighborhood cache. Bit-identical to
/// [`score`] because the summation order is the same.
pub fn score_cached(model: &ModelState, cache: &NeighborhoodCache, u: usize, i: usize) -> f64 {
    let r = translation_cached(model, cache, u, i);
    score_with_translation(model, u, i, &r)
}

pub fn score_breakdown(
    model: &ModelState,
    ds: &InteractionDataset,
    u: usize,
    i: usize,
) -> ScoreBreakdown {
    let r = translation(model, ds, u, i);
    let alpha = model.users.row(u);
    let beta = model.items.row(i);
    let residual: Vec<f64> = alpha
        .iter()
        .zip(&r)
        .zip(beta)
        .map(|((a, t), b)| a + t - b)
        .collect();
    ScoreBreakdown {
        score: score_with_translation(model, u, i, &r),
        translation: r,
        residual,
    }
}

/// Margin ranking term `max(0, margin - s(u,i) + s(u,j))` for one triple.
pub fn hinge_term(model: &ModelState, ds: &InteractionDataset, triple: &TrainTriple) -> f64 {
    let pos = score(model, ds, triple.user, triple.pos);
    let neg = score(model, ds, triple.user, triple.neg);
    (model.hyper.margin - pos + neg).max(0.0)
}

fn reg_nbr_entity_term(own: &[f64], nbr: &[f64]) -> f64 {
    own.iter()
        .zip(nbr)
        .map(|(o, n)| {
            let d = o - n;
            d * d
        })
        .sum()
}

/// Full-dataset neighborhood regularizer
/// `sum_u ||alpha_u - alpha_u^nbr||^2 + sum_i ||beta_i - beta_i^nbr||^2`.
/// Entities with empty neighborhoods contribute distance to the zero vector.
pub fn reg_nbr_value(model: &ModelState, ds: &InteractionDataset) -> f64 {
    let mut total = 0.0;
    for u in 0..ds.n_users() {
        let nbr = mean_of(&model.items, ds.items_of(u));
        total += reg_nbr_entity_term(model.users.row(u), &nbr);
    }
    for i in 0..ds.n_items() {
        let nbr = mean_of(&model.users, ds.users_of(i));
        total += reg_nbr_entity_term(model.items.row(i), &nbr);
    }
    total
}

/// Full-dataset distance regularizer: the squared translated distance summed
/// over all training positives. Equals `-sum s(u,i)` exactly for the metric
/// variants.
pub fn reg_dist_value(model: &ModelState, ds: &InteractionDataset) -> f64 {
    let mut total = 0.0;
    for u in 0..ds.n_users() {
        for &i in ds.items_of(u) {
            let r = translation(model, ds, u, i);
            total += sq_residual(model.users.row(u), &r, model.items.row(i));
        }
    }
    total
}

fn distinct_batch_sets(batch: &[TrainTriple]) -> (Vec<usize>, Vec<usize>, Vec<(usize, usize)>) {
    let mut users: Vec<usize> = batch.iter().map(|t| t.user).collect();
    users.sort_unstable();
    users.dedup();
    let mut items: Vec<usize> = batch.iter().flat_map(|t| [t.pos, t.neg]).collect();
    items.sort_unstable();
    items.dedup();
    let mut pairs: Vec<(usize, usize)> = batch.iter().map(|t| (t.user, t.pos)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    (users, items, pairs)
}

/// Batch objective: hinge terms for every triple plus the regularizers
/// restricted to the distinct entities / positive pairs of the batch.
pub fn objective(
    model: &ModelState,
    ds: &InteractionDataset,
    batch: &[TrainTriple],
    opts: &BatchOptions,
) -> LossTerms {
    let mut hinge = 0.0;
    for t in batch {
        hinge += hinge_term(model, ds, t);
    }

    let (users, items, pairs) = distinct_batch_sets(batch);
    let mut reg_nbr = 0.0;
    if model.hyper.lambda_nbr != 0.0 {
        for &u in &users {
            if ds.items_of(u).is_empty() && !opts.include_empty_neighborhoods_in_reg {
                continue;
            }
            let nbr = mean_of(&model.items, ds.items_of(u));
            reg_nbr += reg_nbr_entity_term(model.users.row(u), &nbr);
        }
        for &i in &items {
            if ds.users_of(i).is_empty() && !opts.include_empty_neighborhoods_in_reg {
                continue;
            }
            let nbr = mean_of(&model.users, ds.users_of(i));
            reg_nbr += reg_nbr_entity_term(model.items.row(i), &nbr);
        }
    }

    let mut reg_dist = 0.0;
    if model.hyper.lambda_dist != 0.0 {
        for &(u, i) in &pairs {
            let r = translation(model, ds, u, i);
            reg_dist += sq_residual(model.users.row(u), &r, model.items.row(i));
        }
    }

    let total = hinge + model.hyper.lambda_nbr * reg_nbr + model.hyper.lambda_dist * reg_dist;
    LossTerms {
        hinge,
        reg_nbr,
        reg_dist,
        total,
    }
}

/// One pair's translation plus the neighbor id lists that built it.
struct PairParts<'a> {
    r: Vec<f64>,
    user_nbr: Vec<f64>,
    item_nbr: Vec<f64>,
    user_nbr_ids: &'a [usize],
    item_nbr_ids: &'a [usize],
}

fn pair_parts<'a>(
    model: &ModelState,
    ds: &'a InteractionDataset,
    u: usize,
    i: usize,
) -> PairParts<'a> {
    match model.variant {
        Variant::TransCf | Variant::TransCfDot => {
            let user_nbr_ids = ds.items_of(u);
            let item_nbr_ids = ds.users_of(i);
            let user_nbr = mean_of(&model.items, user_nbr_ids);
            let item_nbr = mean_of(&model.users, item_nbr_ids);
            PairParts {
                r: elementwise(&user_nbr, &item_nbr),
                user_nbr,
                item_nbr,
                user_nbr_ids,
                item_nbr_ids,
            }
        }
        Variant::TransCfAlt => PairParts {
            r: elementwise(model.users.row(u), model.items.row(i)),
            user_nbr: Vec::new(),
            item_nbr: Vec::new(),
            user_nbr_ids: &[],
            item_nbr_ids: &[],
        },
        Variant::Cml => PairParts {
            r: vec![0.0; model.dim()],
            user_nbr: Vec::new(),
            item_nbr: Vec::new(),
            user_nbr_ids: &[],
            item_nbr_ids: &[],
        },
    }
}

/// Adds `coeff * d/dTheta ||alpha_u + r_ui - beta_i||^2` into the accumulator,
/// including the chain-rule flow through both neighborhood means.
fn add_sq_residual_grad(
    model: &ModelState,
    ds: &InteractionDataset,
    u: usize,
    i: usize,
    coeff: f64,
    opts: &BatchOptions,
    grads: &mut Gradients,
) {
    let parts = pair_parts(model, ds, u, i);
    let alpha = model.users.row(u);
    let beta = model.items.row(i);
    let dim = model.dim();
    // g = 2c * (alpha + r - beta)
    let g: Vec<f64> = (0..dim)
        .map(|d| 2.0 * coeff * (alpha[d] + parts.r[d] - beta[d]))
        .collect();

    for (gu, gv) in grads.user_row(u).iter_mut().zip(&g) {
        *gu += gv;
    }
    for (gi, gv) in grads.item_row(i).iter_mut().zip(&g) {
        *gi -= gv;
    }

    match model.variant {
        Variant::TransCf | Variant::TransCfDot => {
            if !opts.stop_gradient_neighborhoods {
                if !parts.user_nbr_ids.is_empty() {
                    let inv = 1.0 / parts.user_nbr_ids.len() as f64;
                    for &k in parts.user_nbr_ids {
                        for ((gk, gv), nb) in grads.item_row(k).iter_mut().zip(&g).zip(&parts.item_nbr) {
                            *gk += gv * nb * inv;
                        }
                    }
                }
                if !parts.item_nbr_ids.is_empty() {
                    let inv = 1.0 / parts.item_nbr_ids.len() as f64;
                    for &k in parts.item_nbr_ids {
                        for ((gk, gv), na) in grads.user_row(k).iter_mut().zip(&g).zip(&parts.user_nbr) {
                            *gk += gv * na * inv;
                        }
                    }
                }
            }
        }
        Variant::TransCfAlt => {
            // r = alpha (.) beta feeds back into both own rows.
            for ((gu, gv), b) in grads.user_row(u).iter_mut().zip(&g).zip(beta) {
                *gu += gv * b;
            }
            for ((gi, gv), a) in grads.item_row(i).iter_mut().zip(&g).zip(alpha) {
                *gi += gv * a;
            }
        }
        Variant::Cml => {}
    }
}

/// Adds `coeff * d/dTheta (alpha_u + r_ui)^T beta_i` (dot-variant score).
fn add_dot_score_grad(
    model: &ModelState,
    ds: &InteractionDataset,
    u: usize,
    i: usize,
    coeff: f64,
    opts: &BatchOptions,
    grads: &mut Gradients,
) {
    let parts = pair_parts(model, ds, u, i);
    let alpha = model.users.row(u);
    let beta = model.items.row(i);

    for ((gu, b), _) in grads.user_row(u).iter_mut().zip(beta).zip(alpha) {
        *gu += coeff * b;
    }
    for ((gi, a), r) in grads.item_row(i).iter_mut().zip(alpha).zip(&parts.r) {
        *gi += coeff * (a + r);
    }
    if !opts.stop_gradient_neighborhoods {
        if !parts.user_nbr_ids.is_empty() {
            let inv = coeff / parts.user_nbr_ids.len() as f64;
            for &k in parts.user_nbr_ids {
                for ((gk, nb), b) in grads.item_row(k).iter_mut().zip(&parts.item_nbr).zip(beta) {
                    *gk += inv * nb * b;
                }
            }
        }
        if !parts.item_nbr_ids.is_empty() {
            let inv = coeff / parts.item_nbr_ids.len() as f64;
            for &k in parts.item_nbr_ids {
                for ((gk, na), b) in grads.user_row(k).iter_mut().zip(&parts.user_nbr).zip(beta) {
                    *gk += inv * na * b;
                }
            }
        }
    }
}

/// Adds `coeff * d/dTheta s(u,i)` for the model's scoring variant.
fn add_score_grad(
    model: &ModelState,
    ds: &InteractionDataset,
    u: usize,
    i: usize,
    coeff: f64,
    opts: &BatchOptions,
    grads: &mut Gradients,
) {
    match model.variant {
        Variant::TransCfDot => add_dot_score_grad(model, ds, u, i, coeff, opts, grads),
        _ => add_sq_residual_grad(model, ds, u, i, -coeff, opts, grads),
    }
}

/// Exact analytic gradient of [`objective`] over the batch.
///
/// A single triple spreads gradient onto the neighbors of its user and both
/// items because the neighborhood embeddings are functions of the
/// parameters. The hinge uses subgradient zero exactly at the kink.
pub fn gradients(
    model: &ModelState,
    ds: &InteractionDataset,
    batch: &[TrainTriple],
    opts: &BatchOptions,
) -> Result<Gradients> {
    let mut grads = Gradients::new(model.dim());

    for t in batch {
        let pos = score(model, ds, t.user, t.pos);
        let neg = score(model, ds, t.user, t.neg);
        if !pos.is_finite() || !neg.is_finite() {
            return Err(Error::NumericState(format!(
                "non-finite score for triple (user {}, pos {}, neg {})",
                t.user, t.pos, t.neg
            )));
        }
        if model.hyper.margin - pos + neg > 0.0 {
            add_score_grad(model, ds, t.user, t.pos, -1.0, opts, &mut grads);
            add_score_grad(model, ds, t.user, t.neg, 1.0, opts, &mut grads);
        }
    }

    let (users, items, pairs) = distinct_batch_sets(batch);
    let lambda_nbr = model.hyper.lambda_nbr;
    if lambda_nbr != 0.0 {
        for &u in &users {
            let nbr_ids = ds.items_of(u);
            if nbr_ids.is_empty() && !opts.include_empty_neighborhoods_in_reg {
                continue;
            }
            let nbr = mean_of(&model.items, nbr_ids);
            let err: Vec<f64> = model.users.row(u).iter().zip(&nbr).map(|(o, n)| o - n).collect();
            for (gu, e) in grads.user_row(u).iter_mut().zip(&err) {
                *gu += 2.0 * lambda_nbr * e;
            }
            if !nbr_ids.is_empty() && !opts.stop_gradient_neighborhoods {
                let inv = 2.0 * lambda_nbr / nbr_ids.len() as f64;
                for &k in nbr_ids {
                    for (gk, e) in grads.item_row(k).iter_mut().zip(&err) {
                        *gk -= inv * e;
                    }
                }
            }
        }
        for &i in &items {
            let nbr_ids = ds.users_of(i);
            if nbr_ids.is_empty() && !opts.include_empty_neighborhoods_in_reg {
                continue;
            }
            let nbr = mean_of(&model.users, nbr_ids);
            let err: Vec<f64> = model.items.row(i).iter().zip(&nbr).map(|(o, n)| o - n).collect();
            for (gi, e) in grads.item_row(i).iter_mut().zip(&err) {
                *gi += 2.0 * lambda_nbr * e;
            }
            if !nbr_ids.is_empty() && !opts.stop_gradient_neighborhoods {
                let inv = 2.0 * lambda_nbr / nbr_ids.len() as f64;
                for &k in nbr_ids {
                    for (gk, e) in grads.user_row(k).iter_mut().zip(&err) {
                        *gk -= inv * e;
                    }
                }
            }
        }
    }

    let lambda_dist = model.hyper.lambda_dist;
    if lambda_dist != 0.0 {
        for &(u, i) in &pairs {
            add_sq_residual_grad(model, ds, u, i, lambda_dist, opts, &mut grads);
        }
    }

    if !grads.is_finite() {
        return Err(Error::NumericState(
            "gradient accumulator contains non-finite values".into(),
        ));
    }
    Ok(grads)
}

/// Squared distance between the translated user and the item,
/// `||alpha_u + r_ui - beta_i||^2`, from a prebuilt neighborhood cache.
/// Equals `-score` exactly for the metric variants.
pub fn sq_translated_distance_cached(
    model: &ModelState,
    cache: &NeighborhoodCache,
    u: usize,
    i: usize,
) -> f64 {
    let r = translation_cached(model, cache, u, i);
    sq_residual(model.users.row(u), &r, model.items.row(i))
}

/// Squared distance with no translation applied, `||alpha_u - beta_i||^2`.
pub fn sq_untranslated_distance(model: &ModelState, u: usize, i: usize) -> f64 {
    let zeros = vec![0.0; model.dim()];
    sq_residual(model.users.row(u), &zeros, model.items.row(i))
}

/// [`objective`] and [`gradients`] fused into one pass (the training hot
/// path). Produces the same values as calling the two separately.
pub fn objective_and_gradients(
    model: &ModelState,
    ds: &InteractionDataset,
    batch: &[TrainTriple],
    opts: &BatchOptions,
) -> Result<(LossTerms, Gradients)> {
    let mut grads = Gradients::new(model.dim());

    let mut hinge = 0.0;
    for t in batch {
        let pos = score(model, ds, t.user, t.pos);
        let neg = score(model, ds, t.user, t.neg);
        if !pos.is_finite() || !neg.is_finite() {
            return Err(Error::NumericState(format!(
                "non-finite score for triple (user {}, pos {}, neg {})",
                t.user, t.pos, t.neg
            )));
        }
        let violation = model.hyper.margin - pos + neg;
        hinge += violation.max(0.0);
        if violation > 0.0 {
            add_score_grad(model, ds, t.user, t.pos, -1.0, opts, &mut grads);
            add_score_grad(model, ds, t.user, t.neg, 1.0, opts, &mut grads);
        }
    }

    let (users, items, pairs) = distinct_batch_sets(batch);
    let lambda_nbr = model.hyper.lambda_nbr;
    let mut reg_nbr = 0.0;
    if lambda_nbr != 0.0 {
        for &u in &users {
            let nbr_ids = ds.items_of(u);
            if nbr_ids.is_empty() && !opts.include_empty_neighborhoods_in_reg {
                continue;
            }
            let nbr = mean_of(&model.items, nbr_ids);
            reg_nbr += reg_nbr_entity_term(model.users.row(u), &nbr);
            let err: Vec<f64> = model.users.row(u).iter().zip(&nbr).map(|(o, n)| o - n).collect();
            for (gu, e) in grads.user_row(u).iter_mut().zip(&err) {
                *gu += 2.0 * lambda_nbr * e;
            }
            if !nbr_ids.is_empty() && !opts.stop_gradient_neighborhoods {
                let inv = 2.0 * lambda_nbr / nbr_ids.len() as f64;
                for &k in nbr_ids {
                    for (gk, e) in grads.item_row(k).iter_mut().zip(&err) {
                        *gk -= inv * e;
                    }
                }
            }
        }
        for &i in &items {
            let nbr_ids = ds.users_of(i);
            if nbr_ids.is_empty() && !opts.include_empty_neighborhoods_in_reg {
                continue;
            }
            let nbr = mean_of(&model.users, nbr_ids);
            reg_nbr += reg_nbr_entity_term(model.items.row(i), &nbr);
            let err: Vec<f64> = model.items.row(i).iter().zip(&nbr).map(|(o, n)| o - n).collect();
            for (gi, e) in grads.item_row(i).iter_mut().zip(&err) {
                *gi += 2.0 * lambda_nbr * e;
            }
            if !nbr_ids.is_empty() && !opts.stop_gradient_neighborhoods {
                let inv = 2.0 * lambda_nbr / nbr_ids.len() as f64;
                for &k in nbr_ids {
                    for (gk, e) in grads.user_row(k).iter_mut().zip(&err) {
                        *gk -= inv * e;
                    }
                }
            }
        }
    }

    let lambda_dist = model.hyper.lambda_dist;
    let mut reg_dist = 0.0;
    if lambda_dist != 0.0 {
        for &(u, i) in &pairs {
            let r = translation(model, ds, u, i);
            reg_dist += sq_residual(model.users.row(u), &r, model.items.row(i));
            add_sq_residual_grad(model, ds, u, i, lambda_dist, opts, &mut grads);
        }
    }

    if !grads.is_finite() {
        return Err(Error::NumericState(
            "gradient accumulator contains non-finite values".into(),
        ));
    }
    let total = hinge + lambda_nbr * reg_nbr + lambda_dist * reg_dist;
    Ok((
        LossTerms {
            hinge,
            reg_nbr,
            reg_dist,
            total,
        },
        grads,
    ))
}

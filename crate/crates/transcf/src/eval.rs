//! Leave-one-out ranking evaluation with sampled negative candidates.
//!
//! For each user with a held-out item we sample `candidate_negatives` items
//! the user never interacted with, score them together with the held-out
//! item, and rank the held-out item by strictly-greater comparison (ties do
//! not count against it). HR@N is the fraction of users whose item lands in
//! the top N; NDCG@N credits `1/log2(rank+1)` inside the cutoff.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{InteractionDataset, SplitDataset};
use crate::embed::{ModelState, NeighborhoodCache};
use crate::error::{Error, Result};
use crate::model::score_cached;

/// Which held-out map to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Validation,
    Test,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub candidate_negatives: usize,
    /// Cutoffs, ascending.
    pub cutoffs: Vec<usize>,
    pub seed: u64,
    /// Rank against every eligible item instead of a sample. Only sensible
    /// for small catalogs.
    pub full_catalog: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            candidate_negatives: 99,
            cutoffs: vec![10, 20],
            seed: 17,
            full_catalog: false,
        }
    }
}

/// Per-user evaluation outcome.
#[derive(Debug, Clone, Serialize)]
pub struct UserEval {
    pub user: usize,
    pub target: usize,
    pub rank: usize,
    pub candidates: usize,
    /// True when fewer negatives were available than requested.
    pub truncated: bool,
}

/// Aggregated metrics plus the per-user ranks they were computed from.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub hr: BTreeMap<usize, f64>,
    pub ndcg: BTreeMap<usize, f64>,
    pub users_evaluated: usize,
    #[serde(skip)]
    pub per_user: Vec<UserEval>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// `user,rank,hr@N...,ndcg@N...` rows for every evaluated user.
    pub fn per_user_csv(&self, train: &InteractionDataset) -> String {
        let mut out = String::from("user,target,rank,candidates");
        for n in self.hr.keys() {
            out.push_str(&format!(",hr@{n},ndcg@{n}"));
        }
        out.push('\n');
        for rec in &self.per_user {
            out.push_str(&format!(
                "{},{},{},{}",
                train.user_token(rec.user),
                train.item_token(rec.target),
                rec.rank,
                rec.candidates
            ));
            for &n in self.hr.keys() {
                let (hr, ndcg) = contributions(rec.rank, n);
                out.push_str(&format!(",{hr},{ndcg}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Rank of the target among candidate scores: `1 + |{c : score_c > target}|`.
/// Strict comparison, so ties never push the target down.
pub fn rank_from_scores(target_score: f64, candidate_scores: &[f64]) -> usize {
    1 + candidate_scores
        .iter()
        .filter(|&&s| s > target_score)
        .count()
}

/// Reference ranking path that recomputes every score from scratch.
pub fn rank_of(
    model: &ModelState,
    ds: &InteractionDataset,
    u: usize,
    target: usize,
    candidates: &[usize],
) -> usize {
    debug_assert!(!candidates.contains(&target));
    let target_score = crate::model::score(model, ds, u, target);
    let scores: Vec<f64> = candidates
        .iter()
        .map(|&c| crate::model::score(model, ds, u, c))
        .collect();
    rank_from_scores(target_score, &scores)
}

fn contributions(rank: usize, cutoff: usize) -> (f64, f64) {
    if rank <= cutoff {
        (1.0, 1.0 / ((rank as f64) + 1.0).log2())
    } else {
        (0.0, 0.0)
    }
}

/// Numerically stable sum by pairwise recursion.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

fn eligible_items(split: &SplitDataset, u: usize) -> Vec<usize> {
    let train = &split.train;
    let val = split.validation.get(&u).copied();
    let test = split.test.get(&u).copied();
    (0..train.n_items())
        .filter(|&i| !train.has_interaction(u, i) && Some(i) != val && Some(i) != test)
        .collect()
}

/// Evaluates the held-out map of `which` under `cfg`.
///
/// Candidate sets are a deterministic function of `(cfg.seed, user)`:
/// sampling uniform without replacement from the items the user never
/// interacted with (train, validation and test all excluded).
pub fn evaluate(
    model: &ModelState,
    split: &SplitDataset,
    which: Which,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let train = &split.train;
    if model.users.rows() != train.n_users() || model.items.rows() != train.n_items() {
        return Err(Error::DimensionMismatch(format!(
            "model has {}x{} entities, dataset has {}x{}",
            model.users.rows(),
            model.items.rows(),
            train.n_users(),
            train.n_items()
        )));
    }
    if !cfg.cutoffs.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config("cutoffs must be strictly ascending".into()));
    }

    let held_out = match which {
        Which::Validation => &split.validation,
        Which::Test => &split.test,
    };
    let cache = NeighborhoodCache::build(model, train);

    let targets: Vec<(usize, usize)> = held_out.iter().map(|(&u, &i)| (u, i)).collect();
    let per_user: Vec<UserEval> = targets
        .par_iter()
        .map(|&(u, target)| {
            let eligible = eligible_items(split, u);
            let (candidates, truncated): (Vec<usize>, bool) = if cfg.full_catalog {
                (eligible, false)
            } else if eligible.len() <= cfg.candidate_negatives {
                (eligible, true)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(u as u64);
                let picked =
                    rand::seq::index::sample(&mut rng, eligible.len(), cfg.candidate_negatives);
                (picked.iter().map(|idx| eligible[idx]).collect(), false)
            };
            let target_score = score_cached(model, &cache, u, target);
            let scores: Vec<f64> = candidates
                .iter()
                .map(|&c| score_cached(model, &cache, u, c))
                .collect();
            UserEval {
                user: u,
                target,
                rank: rank_from_scores(target_score, &scores),
                candidates: candidates.len(),
                truncated,
            }
        })
        .collect();

    let mut hr = BTreeMap::new();
    let mut ndcg = BTreeMap::new();
    for &n in &cfg.cutoffs {
        let hr_vals: Vec<f64> = per_user.iter().map(|r| contributions(r.rank, n).0).collect();
        let ndcg_vals: Vec<f64> = per_user.iter().map(|r| contributions(r.rank, n).1).collect();
        let count = per_user.len().max(1) as f64;
        hr.insert(n, pairwise_sum(&hr_vals) / count);
        ndcg.insert(n, pairwise_sum(&ndcg_vals) / count);
    }

    Ok(EvalReport {
        hr,
        ndcg,
        users_evaluated: per_user.len(),
        per_user,
    })
}

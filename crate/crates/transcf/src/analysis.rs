//! Translation-vector diagnostics and labeled vector export.
//!
//! The central check: does the learned translation move a user strictly
//! closer to an item than the raw embedding distance,
//! `||alpha_u - beta_i||^2 > ||alpha_u + r_ui - beta_i||^2`? A useful model
//! satisfies this for most observed (trained-on) pairs and for far fewer
//! unobserved pairs.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::InteractionDataset;
use crate::embed::{ModelState, NeighborhoodCache, Variant};
use crate::error::{Error, Result};
use crate::model::{sq_translated_distance_cached, sq_untranslated_distance, translation_cached};

/// Percentage of pairs the translation pulls strictly closer, split into
/// observed (training) pairs and per-user sampled unobserved pairs.
#[derive(Debug, Clone, Serialize)]
pub struct TranslationDiagnostic {
    pub observed_pct: f64,
    pub unobserved_pct: f64,
    pub observed_pairs: usize,
    pub unobserved_pairs: usize,
}

/// Eq-style satisfaction within one rating value.
#[derive(Debug, Clone, Serialize)]
pub struct RatingGroup {
    pub rating: f64,
    pub satisfied_pct: f64,
    /// This group's share of all rated observed interactions, in percent.
    pub share_pct: f64,
    pub count: usize,
}

fn pulled_closer(model: &ModelState, cache: &NeighborhoodCache, u: usize, i: usize) -> bool {
    sq_untranslated_distance(model, u, i) > sq_translated_distance_cached(model, cache, u, i)
}

/// Evaluates the pulled-closer check over every observed train pair and an
/// equal per-user number of sampled unobserved items (uniform without
/// replacement while the pool allows). Strict inequality: a zero translation
/// never counts as satisfied.
pub fn translation_check(
    model: &ModelState,
    ds: &InteractionDataset,
    seed: u64,
) -> Result<TranslationDiagnostic> {
    if model.variant == Variant::Cml {
        return Err(Error::UnsupportedVariant(
            "cml has no translation vectors (both sides of the check coincide)".into(),
        ));
    }
    let cache = NeighborhoodCache::build(model, ds);

    let mut observed_pairs = 0usize;
    let mut observed_satisfied = 0usize;
    let mut unobserved_pairs = 0usize;
    let mut unobserved_satisfied = 0usize;

    for u in 0..ds.n_users() {
        let items = ds.items_of(u);
        if items.is_empty() {
            continue;
        }
        for &i in items {
            observed_pairs += 1;
            if pulled_closer(model, &cache, u, i) {
                observed_satisfied += 1;
            }
        }

        let pool: Vec<usize> = (0..ds.n_items())
            .filter(|&i| !ds.has_interaction(u, i))
            .collect();
        let wanted = items.len();
        let sampled: Vec<usize> = if pool.len() <= wanted {
            pool
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u as u64);
            rand::seq::index::sample(&mut rng, pool.len(), wanted)
                .iter()
                .map(|idx| pool[idx])
                .collect()
        };
        for i in sampled {
            unobserved_pairs += 1;
            if pulled_closer(model, &cache, u, i) {
                unobserved_satisfied += 1;
            }
        }
    }

    let pct = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            100.0 * num as f64 / den as f64
        }
    };
    Ok(TranslationDiagnostic {
        observed_pct: pct(observed_satisfied, observed_pairs),
        unobserved_pct: pct(unobserved_satisfied, unobserved_pairs),
        observed_pairs,
        unobserved_pairs,
    })
}

/// Pulled-closer percentages grouped by the ground-truth rating of the
/// observed interactions, plus each group's share. Requires a rated dataset.
pub fn rating_group_check(model: &ModelState, ds: &InteractionDataset) -> Result<Vec<RatingGroup>> {
    if model.variant == Variant::Cml {
        return Err(Error::UnsupportedVariant(
            "cml has no translation vectors (both sides of the check coincide)".into(),
        ));
    }
    let rated: Vec<(f64, usize, usize)> = ds
        .records()
        .iter()
        .filter_map(|r| r.rating.map(|v| (v, r.user, r.item)))
        .collect();
    if rated.is_empty() {
        return Err(Error::UnsupportedDataset(
            "no ratings present; rating-group analysis needs a rated dataset".into(),
        ));
    }

    let cache = NeighborhoodCache::build(model, ds);
    let mut values: Vec<f64> = rated.iter().map(|&(v, _, _)| v).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();

    let total = rated.len();
    let mut groups = Vec::with_capacity(values.len());
    for &value in &values {
        let members: Vec<&(f64, usize, usize)> =
            rated.iter().filter(|&&(v, _, _)| v == value).collect();
        let satisfied = members
            .iter()
            .filter(|&&&(_, u, i)| pulled_closer(model, &cache, u, i))
            .count();
        groups.push(RatingGroup {
            rating: value,
            satisfied_pct: 100.0 * satisfied as f64 / members.len() as f64,
            share_pct: 100.0 * members.len() as f64 / total as f64,
            count: members.len(),
        });
    }
    Ok(groups)
}

/// Which vector to export per labeled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    /// The model's translation vector `r_ui`.
    Learned,
    /// The synthetic construction `alpha_u - beta_i` (baseline comparisons;
    /// with a `cml` checkpoint this is its stand-in translation).
    EmbeddingDifference,
}

/// Writes `label<TAB>v1..vK` rows for every labeled observed pair, in
/// (user, item) id order. Returns the file contents and the number of labels
/// that referenced pairs not observed in the dataset.
pub fn export_labeled_translations(
    model: &ModelState,
    ds: &InteractionDataset,
    labels: &HashMap<(usize, usize), String>,
    kind: ExportKind,
) -> Result<(String, usize)> {
    let dim = model.dim();
    let mut out = String::from("label");
    for d in 1..=dim {
        let _ = write!(out, "\tv{d}");
    }
    out.push('\n');

    let cache = NeighborhoodCache::build(model, ds);
    let mut written = 0usize;
    for u in 0..ds.n_users() {
        for &i in ds.items_of(u) {
            let Some(label) = labels.get(&(u, i)) else {
                continue;
            };
            let vector = match kind {
                ExportKind::Learned => translation_cached(model, &cache, u, i),
                ExportKind::EmbeddingDifference => model
                    .users
                    .row(u)
                    .iter()
                    .zip(model.items.row(i))
                    .map(|(a, b)| a - b)
                    .collect(),
            };
            out.push_str(label);
            for v in &vector {
                let _ = write!(out, "\t{v:.16e}");
            }
            out.push('\n');
            written += 1;
        }
    }
    Ok((out, labels.len() - written))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{EmbeddingTable, HyperParams};
    use crate::model::translation;

    fn table_from(rows: &[&[f64]]) -> EmbeddingTable {
        let dim = rows[0].len();
        let mut t = EmbeddingTable::zeros(rows.len(), dim);
        for (r, row) in rows.iter().enumerate() {
            t.row_mut(r).copy_from_slice(row);
        }
        t
    }

    fn model(users: EmbeddingTable, items: EmbeddingTable, variant: Variant) -> ModelState {
        let hyper = HyperParams {
            dim: users.dim(),
            ..HyperParams::default()
        };
        ModelState {
            users,
            items,
            variant,
            hyper,
        }
    }

    #[test]
    fn hand_computed_pair_satisfies_check() {
        // alpha_u = (0,0), beta_i = (1,0), r forced to (0.5,0) via singleton
        // neighborhoods: untranslated distance 1, translated 0.25.
        let users = table_from(&[&[0.0, 0.0], &[0.5, 1.0]]);
        let items = table_from(&[&[1.0, 0.0], &[1.0, 0.0]]);
        // u0 interacted with item0 (beta=(1,0)); item1's only user is u1.
        let ds = InteractionDataset::from_memberships(
            vec!["u".into(), "v".into()],
            vec!["a".into(), "i".into()],
            &[(0, 0), (1, 1)],
        );
        let m = model(users, items, Variant::TransCf);
        let cache = NeighborhoodCache::build(&m, &ds);
        assert!((sq_untranslated_distance(&m, 0, 1) - 1.0).abs() < 1e-15);
        assert!((sq_translated_distance_cached(&m, &cache, 0, 1) - 0.25).abs() < 1e-15);
        assert!(pulled_closer(&m, &cache, 0, 1));
    }

    #[test]
    fn distance_pathway_matches_score() {
        use crate::model::score;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let users = EmbeddingTable::init_uniform(6, 5, &mut rng);
        let items = EmbeddingTable::init_uniform(7, 5, &mut rng);
        let pairs: Vec<(usize, usize)> = (0..6).flat_map(|u| [(u, u), (u, u + 1)]).collect();
        let ds = InteractionDataset::from_memberships(
            (0..6).map(|u| format!("u{u}")).collect(),
            (0..7).map(|i| format!("i{i}")).collect(),
            &pairs,
        );
        let m = model(users, items, Variant::TransCf);
        let cache = NeighborhoodCache::build(&m, &ds);
        for u in 0..6 {
            for i in 0..7 {
                let lhs = sq_translated_distance_cached(&m, &cache, u, i);
                let rhs = -score(&m, &ds, u, i);
                assert!((lhs - rhs).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_translations_satisfy_nothing() {
        // transcf-alt with an all-zero user table: r = alpha (.) beta = 0,
        // so the strict inequality never holds.
        let users = EmbeddingTable::zeros(3, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let items = EmbeddingTable::init_uniform(5, 4, &mut rng);
        let pairs = [(0, 0), (0, 1), (1, 2), (1, 3), (2, 4), (2, 0)];
        let ds = InteractionDataset::from_memberships(
            (0..3).map(|u| format!("u{u}")).collect(),
            (0..5).map(|i| format!("i{i}")).collect(),
            &pairs,
        );
        let m = model(users, items, Variant::TransCfAlt);
        let diag = translation_check(&m, &ds, 11).unwrap();
        assert_eq!(diag.observed_pct, 0.0);
        assert_eq!(diag.unobserved_pct, 0.0);
        assert_eq!(diag.observed_pairs, 6);
        assert_eq!(diag.unobserved_pairs, 6);
    }

    #[test]
    fn cml_variant_is_rejected() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let users = EmbeddingTable::init_uniform(2, 3, &mut rng);
        let items = EmbeddingTable::init_uniform(2, 3, &mut rng);
        let ds = InteractionDataset::from_memberships(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            &[(0, 0), (1, 1)],
        );
        let m = model(users, items, Variant::Cml);
        assert!(matches!(
            translation_check(&m, &ds, 1),
            Err(Error::UnsupportedVariant(_))
        ));
        assert!(matches!(
            rating_group_check(&m, &ds),
            Err(Error::UnsupportedVariant(_))
        ));
    }

    #[test]
    fn diagnostic_is_deterministic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(15);
        let users = EmbeddingTable::init_uniform(8, 6, &mut rng);
        let items = EmbeddingTable::init_uniform(20, 6, &mut rng);
        let pairs: Vec<(usize, usize)> =
            (0..8).flat_map(|u| (0..4).map(move |k| (u, (u * 3 + k) % 20))).collect();
        let ds = InteractionDataset::from_memberships(
            (0..8).map(|u| format!("u{u}")).collect(),
            (0..20).map(|i| format!("i{i}")).collect(),
            &pairs,
        );
        let m = model(users, items, Variant::TransCf);
        let a = translation_check(&m, &ds, 7).unwrap();
        let b = translation_check(&m, &ds, 7).unwrap();
        assert_eq!(a.observed_pct, b.observed_pct);
        assert_eq!(a.unobserved_pct, b.unobserved_pct);
    }

    fn rated_fixture() -> (ModelState, InteractionDataset) {
        use crate::dataset::Interaction;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let users = EmbeddingTable::init_uniform(6, 4, &mut rng);
        let items = EmbeddingTable::init_uniform(10, 4, &mut rng);
        let mut interactions = Vec::new();
        for u in 0..6 {
            for k in 0..3 {
                let i = (u * 2 + k * 3) % 10;
                interactions.push(Interaction {
                    user: format!("u{u}"),
                    item: format!("i{i}"),
                    rating: Some(1.0 + ((u + k) % 5) as f64),
                    order_key: (u * 3 + k) as i64,
                });
            }
        }
        let ds = InteractionDataset::from_interactions(interactions, 1).unwrap();
        let m = model(users, items, Variant::TransCf);
        (m, ds)
    }

    #[test]
    fn rating_groups_partition_rated_interactions() {
        let (m, ds) = rated_fixture();
        let groups = rating_group_check(&m, &ds).unwrap();
        let share_sum: f64 = groups.iter().map(|g| g.share_pct).sum();
        assert!((share_sum - 100.0).abs() <= 1e-9);
        let count_sum: usize = groups.iter().map(|g| g.count).sum();
        let rated = ds.records().iter().filter(|r| r.rating.is_some()).count();
        assert_eq!(count_sum, rated);
    }

    #[test]
    fn rating_groups_match_filter_oracle() {
        let (m, ds) = rated_fixture();
        let cache = NeighborhoodCache::build(&m, &ds);
        let groups = rating_group_check(&m, &ds).unwrap();
        for g in &groups {
            // Oracle: filter records by rating, count satisfied directly.
            let members: Vec<_> = ds
                .records()
                .iter()
                .filter(|r| r.rating == Some(g.rating))
                .collect();
            let satisfied = members
                .iter()
                .filter(|r| pulled_closer(&m, &cache, r.user, r.item))
                .count();
            assert_eq!(g.count, members.len());
            assert_eq!(g.satisfied_pct, 100.0 * satisfied as f64 / members.len() as f64);
        }
    }

    #[test]
    fn single_rating_is_one_full_group() {
        use crate::dataset::Interaction;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let users = EmbeddingTable::init_uniform(2, 3, &mut rng);
        let items = EmbeddingTable::init_uniform(3, 3, &mut rng);
        let interactions = vec![
            Interaction { user: "a".into(), item: "x".into(), rating: Some(4.0), order_key: 0 },
            Interaction { user: "a".into(), item: "y".into(), rating: Some(4.0), order_key: 1 },
            Interaction { user: "b".into(), item: "z".into(), rating: Some(4.0), order_key: 2 },
        ];
        let ds = InteractionDataset::from_interactions(interactions, 1).unwrap();
        let m = model(users, items, Variant::TransCf);
        let groups = rating_group_check(&m, &ds).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].share_pct, 100.0);
        assert_eq!(groups[0].count, 3);
    }

    #[test]
    fn unrated_dataset_is_rejected_for_rating_groups() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let users = EmbeddingTable::init_uniform(2, 3, &mut rng);
        let items = EmbeddingTable::init_uniform(2, 3, &mut rng);
        let ds = InteractionDataset::from_memberships(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            &[(0, 0), (1, 1)],
        );
        let m = model(users, items, Variant::TransCf);
        assert!(matches!(
            rating_group_check(&m, &ds),
            Err(Error::UnsupportedDataset(_))
        ));
    }

    #[test]
    fn export_with_no_labels_is_header_only() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let users = EmbeddingTable::init_uniform(2, 3, &mut rng);
        let items = EmbeddingTable::init_uniform(2, 3, &mut rng);
        let ds = InteractionDataset::from_memberships(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            &[(0, 0), (1, 1)],
        );
        let m = model(users, items, Variant::TransCf);
        let (content, skipped) =
            export_labeled_translations(&m, &ds, &HashMap::new(), ExportKind::Learned).unwrap();
        assert_eq!(content, "label\tv1\tv2\tv3\n");
        assert_eq!(skipped, 0);
    }

    #[test]
    fn export_rows_match_translation_recomputation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let users = EmbeddingTable::init_uniform(4, 4, &mut rng);
        let items = EmbeddingTable::init_uniform(6, 4, &mut rng);
        let pairs = [(0, 0), (0, 1), (1, 2), (2, 3), (3, 4), (3, 5)];
        let ds = InteractionDataset::from_memberships(
            (0..4).map(|u| format!("u{u}")).collect(),
            (0..6).map(|i| format!("i{i}")).collect(),
            &pairs,
        );
        let m = model(users, items, Variant::TransCf);
        let mut labels = HashMap::new();
        labels.insert((0, 0), "red".to_string());
        labels.insert((1, 2), "green".to_string());
        labels.insert((3, 5), "blue".to_string());
        labels.insert((2, 5), "ghost".to_string()); // not an observed pair
        let (content, skipped) =
            export_labeled_translations(&m, &ds, &labels, ExportKind::Learned).unwrap();
        assert_eq!(skipped, 1);
        let lines: Vec<&str> = content.lines().collect();
        assert_eq!(lines.len(), 4); // header + 3 rows
        for line in &lines[1..] {
            let fields: Vec<&str> = line.split('\t').collect();
            assert_eq!(fields.len(), 5); // label + K=4 values
            let (u, i) = match fields[0] {
                "red" => (0, 0),
                "green" => (1, 2),
                "blue" => (3, 5),
                other => panic!("unexpected label {other}"),
            };
            let expected = translation(&m, &ds, u, i);
            for (f, e) in fields[1..].iter().zip(&expected) {
                let v: f64 = f.parse().unwrap();
                assert!((v - e).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn embedding_difference_export() {
        let users = table_from(&[&[0.5, 0.25]]);
        let items = table_from(&[&[0.125, 0.0625]]);
        let ds = InteractionDataset::from_memberships(
            vec!["u".into()],
            vec!["i".into()],
            &[(0, 0)],
        );
        let m = model(users, items, Variant::Cml);
        let mut labels = HashMap::new();
        labels.insert((0, 0), "only".to_string());
        let (content, skipped) =
            export_labeled_translations(&m, &ds, &labels, ExportKind::EmbeddingDifference).unwrap();
        assert_eq!(skipped, 0);
        let row = content.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split('\t').collect();
        assert_eq!(fields[0], "only");
        assert_eq!(fields[1].parse::<f64>().unwrap(), 0.375);
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.1875);
    }
}

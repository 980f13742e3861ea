//! Implicit-feedback interaction data: ingestion, neighbor indexes,
//! leave-one-out splitting and training-triple sampling.
//!
//! Input files are UTF-8 text with one interaction per line, tab- or
//! comma-delimited: `user<sep>item[<sep>rating][<sep>order_key]`. A header
//! line is detected (and skipped) when the third field of line 1 does not
//! parse as a number. Users and items are opaque tokens mapped to dense ids
//! in first-appearance order.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// One raw interaction as parsed from an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub rating: Option<f64>,
    /// Ordering key for "last interacted" semantics. Defaults to the record's
    /// 0-based position in the input when the file carries no timestamp.
    pub order_key: i64,
}

/// A deduplicated interaction between dense ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub user: usize,
    pub item: usize,
    pub rating: Option<f64>,
    pub order_key: i64,
}

/// One (user, positive item, negative item) ranking constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainTriple {
    pub user: usize,
    pub pos: usize,
    pub neg: usize,
}

/// Result of [`InteractionDataset::sample_triples`].
#[derive(Debug, Clone)]
pub struct TripleSample {
    pub triples: Vec<TrainTriple>,
    /// Users skipped because no negative item exists (or they have no
    /// training items at all).
    pub skipped_users: usize,
}

/// The bipartite user-item record set with both neighbor indexes.
///
/// `user_items[u]` is the set of items user `u` interacted with and
/// `item_users[i]` the set of users who interacted with item `i`; the two
/// are mutually consistent transposes. Duplicate (user, item) pairs collapse
/// to a single membership entry (the last rating and order key win).
#[derive(Debug, Clone)]
pub struct InteractionDataset {
    users: Vec<String>,
    items: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    user_items: Vec<Vec<usize>>,
    item_users: Vec<Vec<usize>>,
    records: Vec<Record>,
}

/// Leave-one-out split: per-user last interaction held out for test,
/// second-to-last for validation, remainder for training.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: InteractionDataset,
    pub validation: BTreeMap<usize, usize>,
    pub test: BTreeMap<usize, usize>,
}

/// Loads interactions from `path` and applies iterative min-count filtering.
///
/// Users and items with fewer than `min_count` distinct interactions are
/// removed; removal repeats until every survivor clears the threshold, since
/// dropping one side can push the other below it.
pub fn load_interactions(path: impl AsRef<Path>, min_count: usize) -> Result<InteractionDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = parse_interactions(&text, path)?;
    InteractionDataset::from_interactions(parsed, min_count)
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split(',').collect()
    }
}

fn parse_interactions(text: &str, path: &Path) -> Result<Vec<Interaction>> {
    let mut out = Vec::new();
    let mut first_data_line = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_fields(line);
        if first_data_line {
            first_data_line = false;
            // Header heuristic: a non-numeric third field on line 1.
            if fields.len() >= 3 && !fields[2].is_empty() && fields[2].parse::<f64>().is_err() {
                continue;
            }
        }
        if fields.len() < 2 || fields.len() > 4 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("expected 2-4 fields, found {}", fields.len()),
            });
        }
        let user = fields[0].trim().to_string();
        let item = fields[1].trim().to_string();
        if user.is_empty() || item.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: "empty user or item token".into(),
            });
        }
        let rating = match fields.get(2) {
            None => None,
            Some(f) if f.trim().is_empty() => None,
            Some(f) => Some(f.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("rating {f:?} is not a number"),
            })?),
        };
        let order_key = match fields.get(3) {
            None => out.len() as i64,
            Some(f) if f.trim().is_empty() => out.len() as i64,
            Some(f) => f.trim().parse::<i64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("order key {f:?} is not an integer"),
            })?,
        };
        out.push(Interaction {
            user,
            item,
            rating,
            order_key,
        });
    }
    Ok(out)
}

impl InteractionDataset {
    /// Builds a dataset from parsed interactions: deduplicates pairs, applies
    /// iterative min-count filtering and assigns dense ids in
    /// first-appearance order.
    pub fn from_interactions(
        interactions: Vec<Interaction>,
        min_count: usize,
    ) -> Result<InteractionDataset> {
        // Collapse duplicate pairs, keeping the first position and the last
        // rating / order key.
        let mut pair_index: HashMap<(String, String), usize> = HashMap::new();
        let mut deduped: Vec<Interaction> = Vec::new();
        for it in interactions {
            let key = (it.user.clone(), it.item.clone());
            match pair_index.get(&key) {
                Some(&pos) => {
                    deduped[pos].rating = it.rating;
                    deduped[pos].order_key = it.order_key;
                }
                None => {
                    pair_index.insert(key, deduped.len());
                    deduped.push(it);
                }
            }
        }

        // Filter to fixpoint: removing users can push items below threshold
        // and vice versa.
        let mut alive = vec![true; deduped.len()];
        loop {
            let mut user_counts: HashMap<&str, usize> = HashMap::new();
            let mut item_counts: HashMap<&str, usize> = HashMap::new();
            for (it, &a) in deduped.iter().zip(&alive) {
                if a {
                    *user_counts.entry(it.user.as_str()).or_default() += 1;
                    *item_counts.entry(it.item.as_str()).or_default() += 1;
                }
            }
            let mut changed = false;
            for (it, a) in deduped.iter().zip(alive.iter_mut()) {
                if *a
                    && (user_counts[it.user.as_str()] < min_count
                        || item_counts[it.item.as_str()] < min_count)
                {
                    *a = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let survivors: Vec<Interaction> = deduped
            .into_iter()
            .zip(alive)
            .filter_map(|(it, a)| a.then_some(it))
            .collect();
        if survivors.is_empty() {
            return Err(Error::EmptyDataset);
        }

        let mut ds = InteractionDataset::empty();
        for it in survivors {
            let u = ds.intern_user(&it.user);
            let i = ds.intern_item(&it.item);
            ds.records.push(Record {
                user: u,
                item: i,
                rating: it.rating,
                order_key: it.order_key,
            });
        }
        ds.rebuild_indexes();
        Ok(ds)
    }

    /// Builds a dataset from explicit token tables and dense-id pairs.
    /// Entities without any pair are allowed (empty neighborhoods).
    pub fn from_memberships(
        users: Vec<String>,
        items: Vec<String>,
        pairs: &[(usize, usize)],
    ) -> InteractionDataset {
        let mut ds = InteractionDataset::empty();
        for token in users {
            ds.intern_user(&token);
        }
        for token in items {
            ds.intern_item(&token);
        }
        for (pos, &(u, i)) in pairs.iter().enumerate() {
            assert!(u < ds.users.len() && i < ds.items.len(), "pair out of range");
            ds.records.push(Record {
                user: u,
                item: i,
                rating: None,
                order_key: pos as i64,
            });
        }
        ds.rebuild_indexes();
        ds
    }

    fn empty() -> InteractionDataset {
        InteractionDataset {
            users: Vec::new(),
            items: Vec::new(),
            user_index: HashMap::new(),
            item_index: HashMap::new(),
            user_items: Vec::new(),
            item_users: Vec::new(),
            records: Vec::new(),
        }
    }

    fn intern_user(&mut self, token: &str) -> usize {
        if let Some(&id) = self.user_index.get(token) {
            return id;
        }
        let id = self.users.len();
        self.users.push(token.to_string());
        self.user_index.insert(token.to_string(), id);
        id
    }

    fn intern_item(&mut self, token: &str) -> usize {
        if let Some(&id) = self.item_index.get(token) {
            return id;
        }
        let id = self.items.len();
        self.items.push(token.to_string());
        self.item_index.insert(token.to_string(), id);
        id
    }

    fn rebuild_indexes(&mut self) {
        self.user_items = vec![Vec::new(); self.users.len()];
        self.item_users = vec![Vec::new(); self.items.len()];
        for r in &self.records {
            self.user_items[r.user].push(r.item);
            self.item_users[r.item].push(r.user);
        }
        for list in self.user_items.iter_mut().chain(self.item_users.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Number of distinct interactions.
    pub fn n_interactions(&self) -> usize {
        self.records.len()
    }

    /// Items interacted with by `u` (sorted dense ids).
    pub fn items_of(&self, u: usize) -> &[usize] {
        &self.user_items[u]
    }

    /// Users who interacted with `i` (sorted dense ids).
    pub fn users_of(&self, i: usize) -> &[usize] {
        &self.item_users[i]
    }

    pub fn has_interaction(&self, u: usize, i: usize) -> bool {
        self.user_items[u].binary_search(&i).is_ok()
    }

    pub fn user_token(&self, u: usize) -> &str {
        &self.users[u]
    }

    pub fn item_token(&self, i: usize) -> &str {
        &self.items[i]
    }

    pub fn user_id(&self, token: &str) -> Option<usize> {
        self.user_index.get(token).copied()
    }

    pub fn item_id(&self, token: &str) -> Option<usize> {
        self.item_index.get(token).copied()
    }

    pub fn user_tokens(&self) -> &[String] {
        &self.users
    }

    pub fn item_tokens(&self) -> &[String] {
        &self.items
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Rating attached to the (deduplicated) pair, if any.
    pub fn rating_of(&self, u: usize, i: usize) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.user == u && r.item == i)
            .and_then(|r| r.rating)
    }

    /// Splits off the per-user last interaction for test and the
    /// second-to-last for validation (ordered by `order_key`, ties broken by
    /// input position). Users with fewer than 3 interactions contribute all
    /// of them to the train set and appear in neither held-out map.
    pub fn leave_one_out_split(&self) -> SplitDataset {
        let mut per_user: Vec<Vec<(i64, usize)>> = vec![Vec::new(); self.users.len()];
        for (pos, r) in self.records.iter().enumerate() {
            per_user[r.user].push((r.order_key, pos));
        }

        let mut validation = BTreeMap::new();
        let mut test = BTreeMap::new();
        let mut train_positions = Vec::with_capacity(self.records.len());
        for (u, entries) in per_user.iter_mut().enumerate() {
            entries.sort_unstable();
            if entries.len() >= 3 {
                let (_, test_pos) = entries[entries.len() - 1];
                let (_, val_pos) = entries[entries.len() - 2];
                test.insert(u, self.records[test_pos].item);
                validation.insert(u, self.records[val_pos].item);
                train_positions.extend(entries[..entries.len() - 2].iter().map(|&(_, p)| p));
            } else {
                train_positions.extend(entries.iter().map(|&(_, p)| p));
            }
        }
        train_positions.sort_unstable();

        let mut train = InteractionDataset {
            users: self.users.clone(),
            items: self.items.clone(),
            user_index: self.user_index.clone(),
            item_index: self.item_index.clone(),
            user_items: Vec::new(),
            item_users: Vec::new(),
            records: train_positions
                .into_iter()
                .map(|p| self.records[p])
                .collect(),
        };
        train.rebuild_indexes();

        SplitDataset {
            train,
            validation,
            test,
        }
    }

    /// Samples `per_user` training triples for every user: the positive item
    /// uniform over the user's items, the negative uniform over the
    /// complement, both with replacement. Users for whom no negative exists
    /// are skipped and counted.
    pub fn sample_triples(&self, per_user: usize, rng: &mut impl Rng) -> TripleSample {
        let n_items = self.items.len();
        let mut triples = Vec::with_capacity(per_user * self.users.len());
        let mut skipped_users = 0;
        for u in 0..self.users.len() {
            let pos_items = &self.user_items[u];
            if pos_items.is_empty() || pos_items.len() == n_items {
                skipped_users += 1;
                continue;
            }
            for _ in 0..per_user {
                let pos = pos_items[rng.random_range(0..pos_items.len())];
                let neg = loop {
                    let cand = rng.random_range(0..n_items);
                    if !self.has_interaction(u, cand) {
                        break cand;
                    }
                };
                triples.push(TrainTriple { user: u, pos, neg });
            }
        }
        TripleSample {
            triples,
            skipped_users,
        }
    }

    /// Serializes records in the input file format
    /// (`user<TAB>item<TAB>rating<TAB>order_key`, rating blank when absent).
    pub fn format_records(&self, records: &[Record]) -> String {
        let mut out = String::new();
        for r in records {
            let rating = r.rating.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                self.users[r.user], self.items[r.item], rating, r.order_key
            );
        }
        out
    }
}

impl SplitDataset {
    /// Writes `train.tsv`, `validation.tsv` and `test.tsv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let train_path = dir.join("train.tsv");
        fs::write(&train_path, self.train.format_records(self.train.records()))
            .map_err(|e| Error::io(&train_path, e))?;

        for (name, map) in [("validation.tsv", &self.validation), ("test.tsv", &self.test)] {
            let mut out = String::new();
            for (&u, &i) in map {
                let _ = writeln!(
                    out,
                    "{}\t{}\t\t{}",
                    self.train.user_token(u),
                    self.train.item_token(i),
                    0
                );
            }
            let path = dir.join(name);
            fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Reads a split directory written by [`SplitDataset::write_dir`].
    ///
    /// The entity universe is reconstructed from the union of the three
    /// files, so held-out items that no longer occur in any train record
    /// remain addressable.
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<SplitDataset> {
        let dir = dir.as_ref();
        let read = |name: &str| -> Result<Vec<Interaction>> {
            let path = dir.join(name);
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            parse_interactions(&text, &path)
        };
        let train_records = read("train.tsv")?;
        let val_records = read("validation.tsv")?;
        let test_records = read("test.tsv")?;

        let mut train = InteractionDataset::empty();
        for it in &train_records {
            let u = train.intern_user(&it.user);
            let i = train.intern_item(&it.item);
            train.records.push(Record {
                user: u,
                item: i,
                rating: it.rating,
                order_key: it.order_key,
            });
        }
        // Held-out entities join the universe even when absent from train.
        let mut validation = BTreeMap::new();
        let mut test = BTreeMap::new();
        for (records, map) in [(&val_records, &mut validation), (&test_records, &mut test)] {
            for it in records.iter() {
                let u = train.intern_user(&it.user);
                let i = train.intern_item(&it.item);
                map.insert(u, i);
            }
        }
        train.rebuild_indexes();
        if train.records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(SplitDataset {
            train,
            validation,
            test,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::path::PathBuf;

    fn parse(text: &str) -> Vec<Interaction> {
        parse_interactions(text, &PathBuf::from("test-input")).unwrap()
    }

    fn ds_from(text: &str, min_count: usize) -> Result<InteractionDataset> {
        InteractionDataset::from_interactions(parse(text), min_count)
    }

    #[test]
    fn min_count_drops_singleton_items_then_user() {
        // User a clears the threshold but each item has one interaction, so
        // filtering items empties the dataset.
        let text = "a\ti1\na\ti2\na\ti3\na\ti4\na\ti5\n";
        let err = ds_from(text, 5).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn min_count_keeps_complete_bipartite_block() {
        let mut text = String::new();
        for u in 0..5 {
            for i in 0..5 {
                text.push_str(&format!("u{u}\ti{i}\n"));
            }
        }
        let ds = ds_from(&text, 5).unwrap();
        assert_eq!(ds.n_users(), 5);
        assert_eq!(ds.n_items(), 5);
        assert_eq!(ds.n_interactions(), 25);
    }

    #[test]
    fn min_count_filtering_cascades_to_fixpoint() {
        // Chain that unravels entirely under min_count=2, plus a 2x2 block
        // that survives. One-pass filtering would leave chain remnants.
        let text = "\
u1\tp\nu1\tq\nu2\tq\nu2\tr\nu3\tr\nu3\ts\nu4\ts\nu4\tt\n\
a\tm1\na\tm2\nb\tm1\nb\tm2\n";
        let ds = ds_from(text, 2).unwrap();
        assert_eq!(ds.n_users(), 2);
        assert_eq!(ds.n_items(), 2);
        assert_eq!(ds.n_interactions(), 4);
        assert!(ds.user_id("u1").is_none());
        assert!(ds.user_id("a").is_some());
    }

    #[test]
    fn duplicate_pair_collapses_keeping_last_rating() {
        let text = "u1\ti1\t3\nu1\ti1\t5\nu1\ti2\t1\nu2\ti1\t2\nu2\ti2\t4\n";
        let ds = ds_from(text, 2).unwrap();
        assert_eq!(ds.n_interactions(), 4);
        let u1 = ds.user_id("u1").unwrap();
        let i1 = ds.item_id("i1").unwrap();
        assert_eq!(ds.items_of(u1).len(), 2);
        assert_eq!(ds.rating_of(u1, i1), Some(5.0));
    }

    #[test]
    fn header_line_detected_by_non_numeric_third_field() {
        let with_header = "user,item,rating\nu1,i1,3\nu1,i2,4\n";
        let parsed = parse(with_header);
        assert_eq!(parsed.len(), 2);
        let no_header = "u1,i1,3\nu1,i2,4\n";
        assert_eq!(parse(no_header).len(), 2);
    }

    #[test]
    fn parse_error_names_line_number() {
        let text = "u1,i1,3\nu2,i2,bad\n";
        let err = parse_interactions(text, &PathBuf::from("f")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_rating_field_is_none() {
        let parsed = parse("u1\ti1\t\t7\n");
        assert_eq!(parsed[0].rating, None);
        assert_eq!(parsed[0].order_key, 7);
    }

    #[test]
    fn order_key_defaults_to_record_position() {
        let parsed = parse("u1,i1\nu1,i2\nu1,i3\n");
        let keys: Vec<i64> = parsed.iter().map(|p| p.order_key).collect();
        assert_eq!(keys, vec![0, 1, 2]);
    }

    #[test]
    fn split_holds_out_last_and_second_to_last() {
        let text = "u\ti1\nu\ti2\nu\ti3\nu\ti4\nv\ti1\nv\ti2\nv\ti3\nv\ti4\n";
        let ds = ds_from(text, 2).unwrap();
        let split = ds.leave_one_out_split();
        let u = ds.user_id("u").unwrap();
        let (i3, i4) = (ds.item_id("i3").unwrap(), ds.item_id("i4").unwrap());
        assert_eq!(split.test[&u], i4);
        assert_eq!(split.validation[&u], i3);
        let train_items: Vec<&str> = split
            .train
            .items_of(u)
            .iter()
            .map(|&i| split.train.item_token(i))
            .collect();
        assert_eq!(train_items, vec!["i1", "i2"]);
    }

    #[test]
    fn split_respects_explicit_order_keys() {
        // Timestamps reverse the file order: i1 is the most recent.
        let text = "u\ti1\t\t40\nu\ti2\t\t30\nu\ti3\t\t20\nu\ti4\t\t10\n\
                    v\ti1\t\t1\nv\ti2\t\t2\nv\ti3\t\t3\nv\ti4\t\t4\n";
        let ds = ds_from(text, 2).unwrap();
        let split = ds.leave_one_out_split();
        let u = ds.user_id("u").unwrap();
        let v = ds.user_id("v").unwrap();
        assert_eq!(split.test[&u], ds.item_id("i1").unwrap());
        assert_eq!(split.validation[&u], ds.item_id("i2").unwrap());
        assert_eq!(split.test[&v], ds.item_id("i4").unwrap());
    }

    #[test]
    fn users_with_two_interactions_stay_in_train() {
        let text = "a\ti1\na\ti2\na\ti3\nb\ti1\nb\ti2\nc\ti1\nc\ti2\nc\ti3\n";
        let ds = ds_from(text, 1).unwrap();
        let split = ds.leave_one_out_split();
        let b = ds.user_id("b").unwrap();
        assert!(!split.test.contains_key(&b));
        assert!(!split.validation.contains_key(&b));
        assert_eq!(split.train.items_of(b).len(), 2);
    }

    fn random_dataset(rng: &mut ChaCha8Rng, n_users: usize, n_items: usize) -> InteractionDataset {
        let users: Vec<String> = (0..n_users).map(|u| format!("u{u}")).collect();
        let items: Vec<String> = (0..n_items).map(|i| format!("i{i}")).collect();
        let mut pairs = Vec::new();
        for u in 0..n_users {
            let degree = rng.random_range(1..=8.min(n_items));
            let mut chosen: Vec<usize> = (0..n_items).collect();
            for k in 0..degree {
                let j = rng.random_range(k..n_items);
                chosen.swap(k, j);
            }
            for &i in &chosen[..degree] {
                pairs.push((u, i));
            }
        }
        InteractionDataset::from_memberships(users, items, &pairs)
    }

    #[test]
    fn split_test_count_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let ds = random_dataset(&mut rng, 30 + trial, 40);
            let split = ds.leave_one_out_split();
            // Oracle: enumerate records per user and count those with >= 3.
            let mut counts = vec![0usize; ds.n_users()];
            for r in ds.records() {
                counts[r.user] += 1;
            }
            let expected = counts.iter().filter(|&&c| c >= 3).count();
            assert_eq!(split.test.len(), expected);
            assert_eq!(split.validation.len(), expected);
        }
    }

    #[test]
    fn split_soundness_and_transpose_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ds = random_dataset(&mut rng, 50, 60);
        let split = ds.leave_one_out_split();
        for (&u, &test_item) in &split.test {
            assert!(!split.train.has_interaction(u, test_item));
            assert_ne!(split.validation[&u], test_item);
        }
        // Rebuild item_users from user_items and compare exactly.
        let mut rebuilt = vec![Vec::new(); split.train.n_items()];
        for u in 0..split.train.n_users() {
            for &i in split.train.items_of(u) {
                rebuilt[i].push(u);
            }
        }
        for list in &mut rebuilt {
            list.sort_unstable();
        }
        for i in 0..split.train.n_items() {
            assert_eq!(rebuilt[i].as_slice(), split.train.users_of(i));
        }
    }

    #[test]
    fn interaction_count_equals_membership_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ds = random_dataset(&mut rng, 40, 30);
        let user_sum: usize = (0..ds.n_users()).map(|u| ds.items_of(u).len()).sum();
        let item_sum: usize = (0..ds.n_items()).map(|i| ds.users_of(i).len()).sum();
        assert_eq!(user_sum, ds.n_interactions());
        assert_eq!(item_sum, ds.n_interactions());
    }

    #[test]
    fn triple_count_is_per_user_times_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ds = random_dataset(&mut rng, 10, 25);
        let sample = ds.sample_triples(100, &mut rng);
        assert_eq!(sample.triples.len(), 1000);
        assert_eq!(sample.skipped_users, 0);
    }

    #[test]
    fn saturated_user_is_skipped() {
        let users = vec!["a".into(), "b".into()];
        let items = vec!["x".into(), "y".into()];
        // User a interacted with every item; user b only with x.
        let ds = InteractionDataset::from_memberships(users, items, &[(0, 0), (0, 1), (1, 0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sample = ds.sample_triples(10, &mut rng);
        assert_eq!(sample.skipped_users, 1);
        assert_eq!(sample.triples.len(), 10);
        assert!(sample.triples.iter().all(|t| t.user == 1));
    }

    #[test]
    fn sampled_triples_are_valid_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ds = random_dataset(&mut rng, 30, 40);
        let a = ds.sample_triples(50, &mut ChaCha8Rng::seed_from_u64(5));
        let b = ds.sample_triples(50, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.triples, b.triples);
        for t in &a.triples {
            assert!(ds.has_interaction(t.user, t.pos));
            assert!(!ds.has_interaction(t.user, t.neg));
        }
    }

    #[test]
    fn negative_sampling_is_uniform_over_complement() {
        // Chi-square style check: every non-interacted item's draw count
        // stays within 3 sigma of the multinomial expectation.
        let users = vec!["u".into()];
        let items: Vec<String> = (0..20).map(|i| format!("i{i}")).collect();
        let ds = InteractionDataset::from_memberships(users, items, &[(0, 0), (0, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let sample = ds.sample_triples(n, &mut rng);
        let mut tally = vec![0usize; 20];
        for t in &sample.triples {
            tally[t.neg] += 1;
        }
        assert_eq!(tally[0], 0);
        assert_eq!(tally[1], 0);
        let p = 1.0 / 18.0;
        let expected = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for (i, &count) in tally.iter().enumerate().skip(2) {
            let dev = (count as f64 - expected).abs();
            assert!(
                dev <= 3.0 * sigma,
                "item {i} drawn {count} times, expected {expected:.1} +- {:.1}",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn split_dir_round_trip() {
        let text = "a\ti1\na\ti2\na\ti3\na\ti4\nb\ti1\nb\ti2\nb\ti3\nc\ti4\nc\ti2\nc\ti1\n";
        let ds = ds_from(text, 1).unwrap();
        let split = ds.leave_one_out_split();
        let dir = tempfile::tempdir().unwrap();
        split.write_dir(dir.path()).unwrap();
        let reread = SplitDataset::read_dir(dir.path()).unwrap();
        assert_eq!(reread.train.n_interactions(), split.train.n_interactions());
        assert_eq!(reread.test.len(), split.test.len());
        for (&u, &i) in &split.test {
            let token_u = split.train.user_token(u);
            let token_i = split.train.item_token(i);
            let ru = reread.train.user_id(token_u).unwrap();
            assert_eq!(reread.train.item_token(reread.test[&ru]), token_i);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn transpose_consistency(seed in 0u64..500) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ds = random_dataset(&mut rng, 12, 15);
                let split = ds.leave_one_out_split();
                for u in 0..split.train.n_users() {
                    for &i in split.train.items_of(u) {
                        prop_assert!(split.train.users_of(i).contains(&u));
                    }
                }
                let total: usize = (0..split.train.n_items())
                    .map(|i| split.train.users_of(i).len())
                    .sum();
                prop_assert_eq!(total, split.train.n_interactions());
            }

            #[test]
            fn sampling_validity(seed in 0u64..200) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ds = random_dataset(&mut rng, 8, 10);
                let sample = ds.sample_triples(20, &mut rng);
                for t in &sample.triples {
                    prop_assert!(ds.has_interaction(t.user, t.pos));
                    prop_assert!(!ds.has_interaction(t.user, t.neg));
                }
            }
        }
    }
}

//! Deterministic synthetic interaction data.
//!
//! Two generators: a planted two-cluster dataset for recovery tests, and a
//! larger bookmarking-style benchmark with latent item categories,
//! mixed-membership user tastes and skewed popularity. The benchmark
//! defaults reproduce the entity and interaction counts of the public
//! Delicious bookmarking benchmark (1,050 users, 1,196 items, 7,698
//! interactions) with every user and item holding at least 5 distinct
//! interactions, so a min-count-5 ingestion filter is a no-op.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Interaction, InteractionDataset};

/// Two user clusters interacting only with their own half of the catalog.
/// Per-user item order is shuffled so the held-out test item is arbitrary.
pub fn two_cluster_dataset(
    users_per_cluster: usize,
    items_per_cluster: usize,
    seed: u64,
) -> InteractionDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_users = 2 * users_per_cluster;
    let n_items = 2 * items_per_cluster;
    let mut pairs = Vec::with_capacity(n_users * items_per_cluster);
    for u in 0..n_users {
        let cluster = u / users_per_cluster;
        let mut items: Vec<usize> = (0..items_per_cluster)
            .map(|k| cluster * items_per_cluster + k)
            .collect();
        for k in (1..items.len()).rev() {
            let j = rng.random_range(0..=k);
            items.swap(k, j);
        }
        pairs.extend(items.into_iter().map(|i| (u, i)));
    }
    InteractionDataset::from_memberships(
        (0..n_users).map(|u| format!("u{u}")).collect(),
        (0..n_items).map(|i| format!("i{i}")).collect(),
        &pairs,
    )
}

/// Shape of the clustered implicit-feedback benchmark.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub categories: usize,
    /// Inclusive range of distinct taste categories per user.
    pub tastes_per_user: (usize, usize),
    /// Probability that an interaction ignores the user's tastes entirely.
    pub noise: f64,
    /// Within-category popularity skew; larger concentrates interactions on
    /// the head items.
    pub popularity_exponent: f64,
    /// Residual weight that keeps out-of-taste users reachable when items
    /// draw their base audience.
    pub affinity_floor: f64,
    /// Fraction of items that attract a second category's audience.
    pub multi_audience: f64,
    /// Attach 1-5 ratings correlated with taste affinity.
    pub with_ratings: bool,
    /// Minimum distinct interactions per user and per item.
    pub min_degree: usize,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            users: 1050,
            items: 1196,
            interactions: 7698,
            categories: 12,
            tastes_per_user: (2, 3),
            noise: 0.05,
            popularity_exponent: 1.1,
            affinity_floor: 0.002,
            multi_audience: 0.5,
            with_ratings: false,
            min_degree: 5,
            seed: 20180901,
        }
    }
}

/// Generated benchmark: interaction records plus the latent category of
/// every item (useful as classification labels downstream).
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub interactions: Vec<Interaction>,
    pub item_category: Vec<usize>,
}

impl Benchmark {
    pub fn dataset(&self) -> InteractionDataset {
        InteractionDataset::from_interactions(self.interactions.clone(), 1)
            .expect("generated benchmark is non-empty")
    }

    /// Serializes in the ingestion format (`user<TAB>item<TAB>rating<TAB>order`).
    pub fn to_file_contents(&self) -> String {
        let mut out = String::new();
        for it in &self.interactions {
            let rating = it.rating.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                it.user, it.item, rating, it.order_key
            ));
        }
        out
    }
}

struct CumulativeSampler {
    cumulative: Vec<f64>,
}

impl CumulativeSampler {
    fn new(weights: &[f64]) -> CumulativeSampler {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut total = 0.0;
        for w in weights {
            total += w;
            cumulative.push(total);
        }
        CumulativeSampler { cumulative }
    }

    fn draw(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty weights");
        let x = rng.random_range(0.0..total);
        self.cumulative.partition_point(|&c| c <= x)
    }
}

/// Generates the benchmark deterministically from `spec.seed`.
///
/// Construction guarantees exact entity/interaction counts and the minimum
/// degree on both sides: first every item receives `min_degree` distinct
/// taste-affine users, then under-covered users are topped up, and finally
/// the total is adjusted to `spec.interactions` by adding affine pairs or
/// removing pairs whose endpoints both sit above the minimum.
pub fn benchmark(spec: &BenchmarkSpec) -> Benchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_users = spec.users;
    let n_items = spec.items;
    let n_cats = spec.categories;

    let item_category: Vec<usize> = (0..n_items).map(|i| i % n_cats).collect();
    // Popularity skew within each category.
    let item_weight: Vec<f64> = (0..n_items)
        .map(|i| 1.0 / (1.0 + (i / n_cats) as f64).powf(spec.popularity_exponent))
        .collect();
    // Some items draw a second audience, the way a bookmark can interest
    // two communities at once.
    let item_secondary: Vec<Option<usize>> = (0..n_items)
        .map(|i| {
            (rng.random_range(0.0..1.0) < spec.multi_audience).then(|| {
                let c = rng.random_range(0..n_cats - 1);
                if c >= item_category[i] {
                    c + 1
                } else {
                    c
                }
            })
        })
        .collect();

    // Mixed-membership tastes.
    let (lo, hi) = spec.tastes_per_user;
    let mut taste: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        let k = rng.random_range(lo..=hi);
        let mut cats: Vec<usize> = Vec::new();
        while cats.len() < k {
            let c = rng.random_range(0..n_cats);
            if !cats.contains(&c) {
                cats.push(c);
            }
        }
        let mut weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.3..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        taste.push(cats.into_iter().zip(weights).collect());
    }
    let affinity = |u: usize, c: usize| -> f64 {
        taste[u]
            .iter()
            .find(|&&(tc, _)| tc == c)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    };

    // Per-category user samplers: affinity plus a small floor keeps every
    // user reachable.
    let user_samplers: Vec<CumulativeSampler> = (0..n_cats)
        .map(|c| {
            let weights: Vec<f64> = (0..n_users)
                .map(|u| spec.affinity_floor + affinity(u, c))
                .collect();
            CumulativeSampler::new(&weights)
        })
        .collect();
    // Per-category item samplers weighted by popularity; multi-audience
    // items are reachable from both of their categories.
    let cat_items: Vec<Vec<usize>> = (0..n_cats)
        .map(|c| {
            (0..n_items)
                .filter(|&i| item_category[i] == c || item_secondary[i] == Some(c))
                .collect()
        })
        .collect();
    let cat_item_samplers: Vec<CumulativeSampler> = (0..n_cats)
        .map(|c| CumulativeSampler::new(&cat_items[c].iter().map(|&i| item_weight[i]).collect::<Vec<_>>()))
        .collect();
    let all_item_sampler = CumulativeSampler::new(&item_weight);

    let mut present = std::collections::HashSet::<(usize, usize)>::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut user_degree = vec![0usize; n_users];
    let mut item_degree = vec![0usize; n_items];
    let push = |u: usize,
                    i: usize,
                    present: &mut std::collections::HashSet<(usize, usize)>,
                    pairs: &mut Vec<(usize, usize)>,
                    user_degree: &mut Vec<usize>,
                    item_degree: &mut Vec<usize>|
     -> bool {
        if present.insert((u, i)) {
            pairs.push((u, i));
            user_degree[u] += 1;
            item_degree[i] += 1;
            true
        } else {
            false
        }
    };

    // Phase 1: every item gets min_degree distinct users affine to its
    // category (alternating with the second audience when it has one).
    for i in 0..n_items {
        while item_degree[i] < spec.min_degree {
            let c = match item_secondary[i] {
                Some(c2) if item_degree[i] % 2 == 1 => c2,
                _ => item_category[i],
            };
            let u = user_samplers[c].draw(&mut rng);
            push(u, i, &mut present, &mut pairs, &mut user_degree, &mut item_degree);
        }
    }

    // Phase 2: top up under-covered users from their own tastes.
    for u in 0..n_users {
        let mut guard = 0;
        while user_degree[u] < spec.min_degree {
            guard += 1;
            let i = if rng.random_range(0.0..1.0) < spec.noise || taste[u].is_empty() || guard > 200
            {
                all_item_sampler.draw(&mut rng)
            } else {
                let &(c, _) = &taste[u][rng.random_range(0..taste[u].len())];
                cat_items[c][cat_item_samplers[c].draw(&mut rng)]
            };
            push(u, i, &mut present, &mut pairs, &mut user_degree, &mut item_degree);
        }
    }

    // Phase 3: adjust the total. Additions follow taste with activity skew;
    // removals only touch pairs whose endpoints both exceed the minimum.
    let user_activity = CumulativeSampler::new(
        &(0..n_users)
            .map(|u| 1.0 / (1.0 + u as f64).powf(0.55))
            .collect::<Vec<_>>(),
    );
    while pairs.len() < spec.interactions {
        let u = user_activity.draw(&mut rng);
        let i = if rng.random_range(0.0..1.0) < spec.noise {
            all_item_sampler.draw(&mut rng)
        } else {
            let &(c, _) = &taste[u][rng.random_range(0..taste[u].len())];
            cat_items[c][cat_item_samplers[c].draw(&mut rng)]
        };
        push(u, i, &mut present, &mut pairs, &mut user_degree, &mut item_degree);
    }
    while pairs.len() > spec.interactions {
        let idx = rng.random_range(0..pairs.len());
        let (u, i) = pairs[idx];
        if user_degree[u] > spec.min_degree && item_degree[i] > spec.min_degree {
            pairs.swap_remove(idx);
            present.remove(&(u, i));
            user_degree[u] -= 1;
            item_degree[i] -= 1;
        }
    }

    // Random temporal order.
    for k in (1..pairs.len()).rev() {
        let j = rng.random_range(0..=k);
        pairs.swap(k, j);
    }

    let interactions: Vec<Interaction> = pairs
        .iter()
        .enumerate()
        .map(|(pos, &(u, i))| {
            let rating = spec.with_ratings.then(|| {
                let mut a = affinity(u, item_category[i]);
                if let Some(c2) = item_secondary[i] {
                    a = a.max(affinity(u, c2));
                }
                let noise: f64 = rng.random_range(-0.8..0.8);
                (1.0 + (4.0 * (a * 1.6 + 0.12) + noise).clamp(0.0, 4.0)).round()
            });
            Interaction {
                user: format!("u{u}"),
                item: format!("i{i}"),
                rating,
                order_key: pos as i64,
            }
        })
        .collect();

    Benchmark {
        interactions,
        item_category,
    }
}

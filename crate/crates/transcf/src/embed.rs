//! Embedding tables for users and items, neighborhood averaging and
//! unit-ball projection.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};

/// Scoring variant. The translational variants differ only in how the
/// per-pair translation vector is built; `Cml` uses no translation and
/// `TransCfDot` swaps the squared distance for an inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    TransCf,
    TransCfDot,
    TransCfAlt,
    Cml,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::TransCf,
        Variant::TransCfDot,
        Variant::TransCfAlt,
        Variant::Cml,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::TransCf => "transcf",
            Variant::TransCfDot => "transcf-dot",
            Variant::TransCfAlt => "transcf-alt",
            Variant::Cml => "cml",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        match s {
            "transcf" => Ok(Variant::TransCf),
            "transcf-dot" => Ok(Variant::TransCfDot),
            "transcf-alt" => Ok(Variant::TransCfAlt),
            "cml" => Ok(Variant::Cml),
            other => Err(Error::Config(format!(
                "unknown variant {other:?} (expected transcf, transcf-dot, transcf-alt or cml)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub dim: usize,
    pub learning_rate: f64,
    pub margin: f64,
    pub lambda_nbr: f64,
    pub lambda_dist: f64,
    pub epochs: usize,
    /// Ranking samples generated per user in every epoch.
    pub negatives_per_user: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            dim: 64,
            learning_rate: 0.05,
            margin: 0.5,
            lambda_nbr: 0.1,
            lambda_dist: 0.1,
            epochs: 200,
            negatives_per_user: 100,
            batch_size: 1000,
            seed: 42,
        }
    }
}

/// Tolerance band on the unit-ball constraint: row squared norms stay within
/// `1 + PROJECTION_EPS` after projection.
pub const PROJECTION_EPS: f64 = 1e-9;

/// Dense row-major `entity_count x dim` matrix of f64 embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, dim: usize) -> EmbeddingTable {
        EmbeddingTable {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Rows drawn i.i.d. uniform in [-1/sqrt(dim), 1/sqrt(dim)], well inside
    /// the unit ball so early margins are not trivially saturated.
    pub fn init_uniform(rows: usize, dim: usize, rng: &mut impl Rng) -> EmbeddingTable {
        let scale = 1.0 / (dim as f64).sqrt();
        let data = (0..rows * dim)
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        EmbeddingTable { dim, data }
    }

    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Renormalizes every row whose Euclidean norm exceeds 1 back onto the
    /// unit sphere. With `strict` the literal `v / max(1, ||v||^2)` divisor is
    /// applied instead, which shrinks out-of-ball rows below unit norm.
    ///
    /// Rows within `PROJECTION_EPS` of the boundary are left alone so the
    /// operation is exactly idempotent despite rounding.
    pub fn project_unit_ball(&mut self, strict: bool) -> Result<()> {
        let dim = self.dim;
        for r in 0..self.rows() {
            let row = &mut self.data[r * dim..(r + 1) * dim];
            let sq: f64 = row.iter().map(|v| v * v).sum();
            if !sq.is_finite() {
                return Err(Error::NumericState(format!(
                    "row {r} has non-finite entries before projection"
                )));
            }
            if sq > 1.0 + PROJECTION_EPS {
                let divisor = if strict { sq } else { sq.sqrt() };
                for v in row.iter_mut() {
                    *v /= divisor;
                }
            }
        }
        Ok(())
    }

    pub fn max_row_sq_norm(&self) -> f64 {
        (0..self.rows())
            .map(|r| self.row(r).iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// One `token<TAB>v1..vK` line per row, 17 significant digits (exact
    /// f64 round trip).
    pub fn to_tsv(&self, tokens: &[String]) -> String {
        assert_eq!(tokens.len(), self.rows());
        let mut out = String::new();
        for (r, token) in tokens.iter().enumerate() {
            out.push_str(token);
            for v in self.row(r) {
                let _ = write!(out, "\t{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses lines in the [`EmbeddingTable::to_tsv`] format.
    pub fn from_tsv_lines<'a>(
        lines: impl Iterator<Item = &'a str>,
        dim: usize,
    ) -> Result<(EmbeddingTable, Vec<String>)> {
        let mut tokens = Vec::new();
        let mut data = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let token = fields.next().unwrap_or_default();
            if token.is_empty() {
                return Err(Error::Config("embedding row without token".into()));
            }
            tokens.push(token.to_string());
            let start = data.len();
            for f in fields {
                let v: f64 = f.parse().map_err(|_| {
                    Error::Config(format!("bad embedding value {f:?} for token {token:?}"))
                })?;
                data.push(v);
            }
            if data.len() - start != dim {
                return Err(Error::DimensionMismatch(format!(
                    "token {token:?} has {} values, expected {dim}",
                    data.len() - start
                )));
            }
        }
        Ok((EmbeddingTable { dim, data }, tokens))
    }
}

/// The learned parameter set: one table per entity kind plus the scoring
/// variant and the hyperparameters the model was configured with.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub users: EmbeddingTable,
    pub items: EmbeddingTable,
    pub variant: Variant,
    pub hyper: HyperParams,
}

impl ModelState {
    /// Fresh model with uniformly initialized, projected tables.
    pub fn init(
        n_users: usize,
        n_items: usize,
        variant: Variant,
        hyper: HyperParams,
        rng: &mut impl Rng,
    ) -> Result<ModelState> {
        let mut users = EmbeddingTable::init_uniform(n_users, hyper.dim, rng);
        let mut items = EmbeddingTable::init_uniform(n_items, hyper.dim, rng);
        users.project_unit_ball(false)?;
        items.project_unit_ball(false)?;
        Ok(ModelState {
            users,
            items,
            variant,
            hyper,
        })
    }

    pub fn dim(&self) -> usize {
        self.users.dim()
    }
}

fn mean_rows(table: &EmbeddingTable, ids: &[usize]) -> Vec<f64> {
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

/// Mean item embedding over the user's interacted items; the zero vector
/// when the neighborhood is empty.
pub fn neighborhood_user(model: &ModelState, ds: &InteractionDataset, u: usize) -> Vec<f64> {
    mean_rows(&model.items, ds.items_of(u))
}

/// Mean user embedding over the item's interacting users; the zero vector
/// when the neighborhood is empty.
pub fn neighborhood_item(model: &ModelState, ds: &InteractionDataset, i: usize) -> Vec<f64> {
    mean_rows(&model.users, ds.users_of(i))
}

/// All neighborhood embeddings precomputed against frozen parameters.
///
/// Only valid for read paths (evaluation, diagnostics): training recomputes
/// neighborhoods from current parameters at every use.
pub struct NeighborhoodCache {
    pub user_nbr: EmbeddingTable,
    pub item_nbr: EmbeddingTable,
}

impl NeighborhoodCache {
    pub fn build(model: &ModelState, ds: &InteractionDataset) -> NeighborhoodCache {
        let dim = model.dim();
        let mut user_nbr = EmbeddingTable::zeros(ds.n_users(), dim);
        let mut item_nbr = EmbeddingTable::zeros(ds.n_items(), dim);
        for u in 0..ds.n_users() {
            user_nbr.row_mut(u).copy_from_slice(&neighborhood_user(model, ds, u));
        }
        for i in 0..ds.n_items() {
            item_nbr.row_mut(i).copy_from_slice(&neighborhood_item(model, ds, i));
        }
        NeighborhoodCache { user_nbr, item_nbr }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table_from(rows: &[&[f64]]) -> EmbeddingTable {
        let dim = rows[0].len();
        let mut t = EmbeddingTable::zeros(rows.len(), dim);
        for (r, row) in rows.iter().enumerate() {
            t.row_mut(r).copy_from_slice(row);
        }
        t
    }

    fn model_with(users: EmbeddingTable, items: EmbeddingTable) -> ModelState {
        let hyper = HyperParams {
            dim: users.dim(),
            ..HyperParams::default()
        };
        ModelState {
            users,
            items,
            variant: Variant::TransCf,
            hyper,
        }
    }

    #[test]
    fn two_point_neighborhood_mean() {
        let users = table_from(&[&[0.0, 0.0]]);
        let items = table_from(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let ds = crate::dataset::InteractionDataset::from_memberships(
            vec!["u".into()],
            vec!["a".into(), "b".into()],
            &[(0, 0), (0, 1)],
        );
        let model = model_with(users, items);
        assert_eq!(neighborhood_user(&model, &ds, 0), vec![0.5, 0.5]);
    }

    #[test]
    fn singleton_item_neighborhood() {
        let users = table_from(&[&[0.3, -0.4]]);
        let items = table_from(&[&[0.0, 0.0]]);
        let ds = crate::dataset::InteractionDataset::from_memberships(
            vec!["u1".into()],
            vec!["i".into()],
            &[(0, 0)],
        );
        let model = model_with(users, items);
        assert_eq!(neighborhood_item(&model, &ds, 0), vec![0.3, -0.4]);
    }

    #[test]
    fn empty_neighborhood_is_zero_vector() {
        let users = table_from(&[&[0.5, 0.5]]);
        let items = table_from(&[&[0.1, 0.2]]);
        // No pairs at all: both neighborhoods empty.
        let ds = crate::dataset::InteractionDataset::from_memberships(
            vec!["u".into()],
            vec!["i".into()],
            &[],
        );
        let model = model_with(users, items);
        assert_eq!(neighborhood_user(&model, &ds, 0), vec![0.0, 0.0]);
        assert_eq!(neighborhood_item(&model, &ds, 0), vec![0.0, 0.0]);
    }

    #[test]
    fn neighborhood_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dim = 8;
        let items = EmbeddingTable::init_uniform(20, dim, &mut rng);
        let users = EmbeddingTable::init_uniform(1, dim, &mut rng);
        let pairs: Vec<(usize, usize)> = (0..20).map(|i| (0, i)).collect();
        let ds = crate::dataset::InteractionDataset::from_memberships(
            vec!["u".into()],
            (0..20).map(|i| format!("i{i}")).collect(),
            &pairs,
        );
        let model = model_with(users, items.clone());
        let got = neighborhood_user(&model, &ds, 0);
        // Per-coordinate mean computed independently.
        for d in 0..dim {
            let mut sum = 0.0;
            for i in 0..20 {
                sum += items.row(i)[d];
            }
            let expected = sum / 20.0;
            assert!((got[d] - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn projection_rescales_out_of_ball_rows() {
        let mut t = table_from(&[&[3.0, 4.0], &[0.1, 0.2]]);
        t.project_unit_ball(false).unwrap();
        assert!((t.row(0)[0] - 0.6).abs() < 1e-15);
        assert!((t.row(0)[1] - 0.8).abs() < 1e-15);
        assert_eq!(t.row(1), &[0.1, 0.2]);
    }

    #[test]
    fn strict_projection_divides_by_squared_norm() {
        let mut t = table_from(&[&[3.0, 4.0]]);
        t.project_unit_ball(true).unwrap();
        // ||v|| = 5, so the literal rule lands at v/25 with norm 1/5.
        assert!((t.row(0)[0] - 3.0 / 25.0).abs() < 1e-15);
        assert!((t.row(0)[1] - 4.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn projection_rejects_non_finite_rows() {
        let mut t = table_from(&[&[f64::NAN, 0.0]]);
        assert!(matches!(
            t.project_unit_ball(false),
            Err(Error::NumericState(_))
        ));
    }

    #[test]
    fn init_rows_are_inside_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = EmbeddingTable::init_uniform(50, 16, &mut rng);
        assert!(t.max_row_sq_norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn tsv_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = EmbeddingTable::init_uniform(5, 6, &mut rng);
        let tokens: Vec<String> = (0..5).map(|r| format!("e{r}")).collect();
        let text = t.to_tsv(&tokens);
        let (back, back_tokens) = EmbeddingTable::from_tsv_lines(text.lines(), 6).unwrap();
        assert_eq!(back_tokens, tokens);
        assert_eq!(back.as_slice(), t.as_slice());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Scaling the item table scales the user neighborhood linearly.
            #[test]
            fn neighborhood_is_linear_in_table(seed in 0u64..200, scale in 0.1f64..5.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let dim = 4;
                let items = EmbeddingTable::init_uniform(6, dim, &mut rng);
                let users = EmbeddingTable::init_uniform(1, dim, &mut rng);
                let ds = crate::dataset::InteractionDataset::from_memberships(
                    vec!["u".into()],
                    (0..6).map(|i| format!("i{i}")).collect(),
                    &[(0, 0), (0, 2), (0, 4)],
                );
                let mut scaled_items = items.clone();
                for r in 0..scaled_items.rows() {
                    for v in scaled_items.row_mut(r) {
                        *v *= scale;
                    }
                }
                let base = neighborhood_user(&model_with(users.clone(), items), &ds, 0);
                let scaled = neighborhood_user(&model_with(users, scaled_items), &ds, 0);
                for d in 0..dim {
                    prop_assert!((scaled[d] - scale * base[d]).abs() <= 1e-12 * (1.0 + base[d].abs()));
                }
            }

            /// Projection is idempotent and preserves row direction.
            #[test]
            fn projection_idempotent_and_direction_preserving(seed in 0u64..200) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut t = EmbeddingTable::init_uniform(8, 5, &mut rng);
                // Blow some rows out of the ball.
                for r in 0..t.rows() {
                    if r % 2 == 0 {
                        for v in t.row_mut(r) {
                            *v *= 10.0;
                        }
                    }
                }
                let original = t.clone();
                t.project_unit_ball(false).unwrap();
                let once = t.clone();
                t.project_unit_ball(false).unwrap();
                prop_assert_eq!(once.as_slice(), t.as_slice());
                prop_assert!(t.max_row_sq_norm() <= 1.0 + 1e-9);
                for r in 0..t.rows() {
                    let dot: f64 = original.row(r).iter().zip(t.row(r)).map(|(a, b)| a * b).sum();
                    let na: f64 = original.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
                    let nb: f64 = t.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
                    if na > 0.0 && nb > 0.0 {
                        prop_assert!((dot / (na * nb) - 1.0).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}

//! Central finite-difference verification of the analytic batch gradients.

use crate::dataset::{InteractionDataset, TrainTriple};
use crate::embed::ModelState;
use crate::model::{objective, BatchOptions, Gradients};

/// Numerically differentiates the batch objective with central differences
/// of step `h` in every coordinate. Returns dense per-table gradients
/// (row-major, `rows * dim`).
pub fn finite_difference_gradients(
    model: &ModelState,
    ds: &InteractionDataset,
    batch: &[TrainTriple],
    opts: &BatchOptions,
    h: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut work = model.clone();
    let dim = model.dim();

    let mut user_grads = vec![0.0; work.users.rows() * dim];
    for u in 0..work.users.rows() {
        for d in 0..dim {
            let original = work.users.row(u)[d];
            work.users.row_mut(u)[d] = original + h;
            let plus = objective(&work, ds, batch, opts).total;
            work.users.row_mut(u)[d] = original - h;
            let minus = objective(&work, ds, batch, opts).total;
            work.users.row_mut(u)[d] = original;
            user_grads[u * dim + d] = (plus - minus) / (2.0 * h);
        }
    }

    let mut item_grads = vec![0.0; work.items.rows() * dim];
    for i in 0..work.items.rows() {
        for d in 0..dim {
            let original = work.items.row(i)[d];
            work.items.row_mut(i)[d] = original + h;
            let plus = objective(&work, ds, batch, opts).total;
            work.items.row_mut(i)[d] = original - h;
            let minus = objective(&work, ds, batch, opts).total;
            work.items.row_mut(i)[d] = original;
            item_grads[i * dim + d] = (plus - minus) / (2.0 * h);
        }
    }

    (user_grads, item_grads)
}

/// Maximum per-coordinate relative error between the sparse analytic
/// gradients and dense finite-difference gradients. Rows absent from the
/// accumulator count as zero. The denominator is clamped at 1 so tiny
/// gradients are compared absolutely.
pub fn max_relative_error(
    analytic: &Gradients,
    fd_users: &[f64],
    fd_items: &[f64],
    dim: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut check = |sparse: &std::collections::BTreeMap<usize, Vec<f64>>, dense: &[f64]| {
        for (flat, &fd) in dense.iter().enumerate() {
            let row = flat / dim;
            let coord = flat % dim;
            let a = sparse.get(&row).map_or(0.0, |g| g[coord]);
            let err = (a - fd).abs() / 1.0_f64.max(a.abs()).max(fd.abs());
            worst = worst.max(err);
        }
    };
    check(&analytic.users, fd_users);
    check(&analytic.items, fd_items);
    worst
}

/// Nudges a batch away from hinge kinks: returns true when every triple's
/// margin violation is at least `margin_gap` away from zero, so central
/// differences stay on one smooth piece.
pub fn batch_clears_hinge_kinks(
    model: &ModelState,
    ds: &InteractionDataset,
    batch: &[TrainTriple],
    margin_gap: f64,
) -> bool {
    batch.iter().all(|t| {
        let violation = model.hyper.margin - crate::model::score(model, ds, t.user, t.pos)
            + crate::model::score(model, ds, t.user, t.neg);
        violation.abs() >= margin_gap
    })
}
